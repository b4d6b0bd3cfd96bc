//! Conservation structure of the implicit stepper, checked against
//! independent re-evaluations of the scheme.

mod common;

use common::random_field;
use cqnls::diagnostics::{discrete_energy, energy_coercivity_slack};
use cqnls::{
    evolve, laplacian, psi1, psi2, step, varphi, Complex64, CubicQuinticCoeffs, Field, Grid2d,
    SolverParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gaussian_pulse(grid: Grid2d, amplitude: f64) -> Field {
    Field::from_fn(grid, |x, y| {
        Complex64::new(amplitude * (-(x * x + y * y)).exp(), 0.0)
    })
}

/// Re-evaluate the full nonlinear scheme at a computed step pair; this is the
/// defining equation, independent of the linearized solve path.
fn scheme_residual(u_next: &Field, u_prev: &Field, tau: f64, c: &CubicQuinticCoeffs) -> f64 {
    let grid = *u_prev.grid();
    let mid = u_next.midpoint(u_prev).unwrap();
    let lap_mid = laplacian(&mid);
    let mut r = Field::zeros(grid);
    let i = Complex64::i();
    for j in 1..grid.cells_x() {
        for k in 1..grid.cells_y() {
            let zn1 = u_next.get(j, k);
            let zn = u_prev.get(j, k);
            let val = i * (zn1 - zn) / tau
                + lap_mid.get(j, k)
                + c.lambda * psi1(zn1, zn)
                - c.nu * psi2(zn1, zn)
                + i * c.epsilon * varphi(zn1, zn);
            r.set(j, k, val).unwrap();
        }
    }
    r.norm_l2()
}

#[test]
fn converged_step_satisfies_the_nonlinear_scheme() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed_0001);
    let grid = Grid2d::square(0.0, 1.0, 8).unwrap();
    let coeffs = CubicQuinticCoeffs::new(1.0, 1.0, 0.01).unwrap();
    let tau = 0.01;
    let params = SolverParams::new(coeffs, tau, tau).unwrap();
    for _ in 0..5 {
        let u0 = random_field(grid, &mut rng).scale(Complex64::new(0.1, 0.0));
        let (u1, report) = step(&u0, &params).unwrap();
        assert!(report.final_fp_residual <= params.fp_tol);
        let res = scheme_residual(&u1, &u0, tau, &coeffs);
        let bound = 1e-7 * u0.norm_l2() / tau;
        assert!(res <= bound, "scheme residual {res:.3e} vs bound {bound:.3e}");
    }
}

#[test]
fn damped_run_obeys_the_summed_mass_identity() {
    // Telescoped per-step balance: after m steps
    //   ‖U^m‖² − ‖U⁰‖² + 2τε Σ_n ‖(U^{n+1}+U^n)/2‖⁴_{4,h} ≈ 0
    // up to the solver-tolerance budget, and the mass is nonincreasing.
    let grid = Grid2d::square(-6.0, 6.0, 48).unwrap();
    let coeffs = CubicQuinticCoeffs::new(1.0, 1.0, 0.01).unwrap();
    let params = SolverParams::new(coeffs, 0.02, 0.32).unwrap();
    let u0 = gaussian_pulse(grid, 1.2);
    let m0 = u0.norm_l2_sq();

    let mut prev = u0.clone();
    let mut prev_mass = m0;
    let mut damping_sum = 0.0;
    let final_state = evolve(&u0, &params, |_, u, _| {
        let mid = u.midpoint(&prev).unwrap();
        damping_sum += mid.norm_p_pow(4).unwrap();
        let mass = u.norm_l2_sq();
        assert!(
            mass <= prev_mass + 1e-9 * m0,
            "mass increased: {prev_mass} -> {mass}"
        );
        prev = u.clone();
        prev_mass = mass;
        Ok(())
    })
    .unwrap();

    let identity = final_state.norm_l2_sq() - m0
        + 2.0 * params.tau * coeffs.epsilon * damping_sum;
    assert!(
        identity.abs() <= 1e-6 * m0,
        "mass identity residual {identity:.3e} vs budget {:.3e}",
        1e-6 * m0
    );
}

#[test]
fn undamped_run_conserves_mass_and_energy() {
    let grid = Grid2d::square(-6.0, 6.0, 48).unwrap();
    let coeffs = CubicQuinticCoeffs::new(1.0, 1.0, 0.0).unwrap();
    let mut params = SolverParams::new(coeffs, 0.02, 0.64).unwrap();
    // Conservation probes the scheme, so the iteration tolerances sit near
    // machine precision.
    params.fp_tol = 1e-13;
    params.lin_tol = 1e-13;
    let u0 = gaussian_pulse(grid, 1.2);
    let m0 = u0.norm_l2_sq();
    let e0 = discrete_energy(&u0, &coeffs);

    let mut worst_mass = 0.0f64;
    let mut worst_energy = 0.0f64;
    evolve(&u0, &params, |_, u, _| {
        worst_mass = worst_mass.max((u.norm_l2_sq() - m0).abs() / m0);
        worst_energy = worst_energy.max((discrete_energy(u, &coeffs) - e0).abs() / e0.abs());
        Ok(())
    })
    .unwrap();
    assert!(worst_mass <= 1e-9, "mass drift {worst_mass:.3e}");
    assert!(worst_energy <= 1e-9, "energy drift {worst_energy:.3e}");
}

#[test]
fn energy_stays_bounded_under_damping() {
    let grid = Grid2d::square(-6.0, 6.0, 40).unwrap();
    let coeffs = CubicQuinticCoeffs::new(2.0, 0.5, 0.05).unwrap();
    let params = SolverParams::new(coeffs, 0.02, 0.4).unwrap();
    let u0 = gaussian_pulse(grid, 1.5);
    let e0 = discrete_energy(&u0, &coeffs);
    let m0 = u0.norm_l2_sq();
    let bound = e0 + coeffs.lambda * coeffs.lambda / (4.0 * coeffs.nu) * m0 + 1e-6 * e0.abs();
    evolve(&u0, &params, |_, u, _| {
        let e = discrete_energy(u, &coeffs);
        assert!(e <= bound, "energy {e} above bound {bound}");
        assert!(energy_coercivity_slack(u, &coeffs) >= -1e-10);
        Ok(())
    })
    .unwrap();
}

#[test]
fn linear_subcase_is_time_reversible() {
    // For λ = ν = ε = 0 the scheme is plain Crank-Nicolson, and conjugating
    // a state turns one forward step into the exact inverse step.
    let grid = Grid2d::square(-4.0, 4.0, 32).unwrap();
    let coeffs = CubicQuinticCoeffs {
        lambda: 0.0,
        nu: 0.0,
        epsilon: 0.0,
    };
    let mut params = SolverParams::new(CubicQuinticCoeffs::new(0.0, 1.0, 0.0).unwrap(), 0.05, 0.05)
        .unwrap();
    params.coeffs = coeffs;
    params.lin_tol = 1e-13;
    let u0 = Field::from_fn(grid, |x, y| {
        Complex64::new(
            (-(x * x + y * y)).exp(),
            0.4 * (-(x * x + y * y) / 1.5).exp(),
        )
    });
    let (u1, _) = step(&u0, &params).unwrap();
    let (w, _) = step(&u1.conj(), &params).unwrap();
    let back = w.conj();
    let err = back.sub(&u0).unwrap().norm_l2() / u0.norm_l2();
    assert!(err <= 1e-9, "round trip error {err:.3e}");
}

#[test]
fn fixed_point_failure_carries_history() {
    // Two passes cannot reach 1e-8 on a nontrivial state, so the step must
    // surface the iterate-history error.
    let grid = Grid2d::square(-2.0, 2.0, 16).unwrap();
    let coeffs = CubicQuinticCoeffs::new(1.0, 1.0, 0.01).unwrap();
    let mut params = SolverParams::new(coeffs, 0.05, 0.05).unwrap();
    params.fp_maxiter = 2;
    let u0 = gaussian_pulse(grid, 1.2);
    match step(&u0, &params) {
        Err(cqnls::Error::FixedPointNoConvergence {
            iterations,
            residual,
            history,
        }) => {
            assert_eq!(iterations, 2);
            assert_eq!(history.len(), 2);
            assert!(residual > params.fp_tol);
        }
        other => panic!("expected fixed-point failure, got {other:?}"),
    }
}

#[test]
fn evolve_reports_failing_step_index() {
    let grid = Grid2d::square(-2.0, 2.0, 16).unwrap();
    let coeffs = CubicQuinticCoeffs::new(1.0, 1.0, 0.01).unwrap();
    let mut params = SolverParams::new(coeffs, 0.05, 0.25).unwrap();
    params.fp_maxiter = 2;
    let u0 = gaussian_pulse(grid, 1.2);
    match evolve(&u0, &params, |_, _, _| Ok(())) {
        Err(cqnls::Error::StepFailed { step, .. }) => assert_eq!(step, 1),
        other => panic!("expected step failure, got {other:?}"),
    }
}
