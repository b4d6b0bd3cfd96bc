//! Implicit Crank-Nicolson time stepper with fixed-point linearization.
//!
//! Each step freezes the nonlinear response at the current iterate, solves
//! the resulting complex linear system matrix-free, and repeats until the
//! relative change between iterates drops below the fixed-point tolerance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{laplacian, Field};
use crate::linsolve::{default_lin_maxiter, HelmholtzOperator, DEFAULT_LIN_TOL};
use crate::nonlinearity::CubicQuinticCoeffs;

/// Relative stopping threshold of the fixed-point iteration.
pub const DEFAULT_FP_TOL: f64 = 1e-8;
pub const DEFAULT_FP_MAXITER: usize = 100;

#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    pub coeffs: CubicQuinticCoeffs,
    pub tau: f64,
    pub t_final: f64,
    pub fp_tol: f64,
    pub fp_maxiter: usize,
    pub lin_tol: f64,
    /// `None` selects the grid-dependent default cap.
    pub lin_maxiter: Option<usize>,
}

impl SolverParams {
    pub fn new(coeffs: CubicQuinticCoeffs, tau: f64, t_final: f64) -> Result<Self> {
        let p = Self {
            coeffs,
            tau,
            t_final,
            fp_tol: DEFAULT_FP_TOL,
            fp_maxiter: DEFAULT_FP_MAXITER,
            lin_tol: DEFAULT_LIN_TOL,
            lin_maxiter: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParams(format!(
                "time step must be positive, got {}",
                self.tau
            )));
        }
        if !(self.t_final >= self.tau) {
            return Err(Error::InvalidParams(format!(
                "final time {} is shorter than one step {}",
                self.t_final, self.tau
            )));
        }
        if !(self.fp_tol > 0.0 && self.fp_tol < 1.0) {
            return Err(Error::InvalidParams(format!(
                "fixed-point tolerance must lie in (0, 1), got {}",
                self.fp_tol
            )));
        }
        if self.fp_maxiter == 0 {
            return Err(Error::InvalidParams("fp_maxiter must be at least 1".into()));
        }
        if !(self.lin_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "linear tolerance must be positive, got {}",
                self.lin_tol
            )));
        }
        Ok(())
    }

    /// Number of steps; `t_final` must be an integer multiple of `tau` to
    /// within 1e-9 relative.
    pub fn n_steps(&self) -> Result<usize> {
        self.validate()?;
        let ratio = self.t_final / self.tau;
        let n = ratio.round();
        if n < 1.0 {
            return Err(Error::InvalidParams(
                "horizon shorter than a single step".into(),
            ));
        }
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidParams(format!(
                "t_final = {} is not an integer multiple of tau = {}",
                self.t_final, self.tau
            )));
        }
        Ok(n as usize)
    }
}

/// Per-step convergence statistics.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub fixed_point_iters: usize,
    pub final_fp_residual: f64,
    pub total_krylov_iters: usize,
}

/// Advance one implicit time step from `u_n`.
pub fn step(u_n: &Field, params: &SolverParams) -> Result<(Field, StepReport)> {
    params.validate()?;
    let grid = *u_n.grid();
    let tau = params.tau;
    let lin_maxiter = params
        .lin_maxiter
        .unwrap_or_else(|| default_lin_maxiter(&grid));

    // Iteration-independent part of the right-hand side.
    let lap_un = laplacian(u_n);
    let two_i_over_tau = Complex64::new(0.0, 2.0 / tau);

    let mut u_iter = u_n.clone();
    let mut history = Vec::new();
    let mut total_krylov = 0usize;
    let mut last_rel = f64::INFINITY;

    for l in 0..params.fp_maxiter {
        let op = HelmholtzOperator::for_time_step(tau, u_n, &u_iter, &params.coeffs)?;

        // rhs = (2i/tau) u_n - δ²u_n - coeff ∘ u_n
        let mut rhs = vec![Complex64::ZERO; grid.n_points()];
        let ny = grid.points_y();
        let kc = grid.cells_y() - 1;
        let (vu, vl) = (u_n.values(), lap_un.values());
        for j in 1..grid.cells_x() {
            let row = j * ny;
            let crow = (j - 1) * kc;
            for k in 1..grid.cells_y() {
                let i = row + k;
                rhs[i] = two_i_over_tau * vu[i] - vl[i] - op.coeff()[crow + k - 1] * vu[i];
            }
        }
        let rhs = Field::from_vec_unchecked(grid, rhs);

        let (w, kry) = op
            .solve(&rhs, Some(&u_iter), params.lin_tol, lin_maxiter)
            .map_err(|e| match e {
                Error::LinearNoConvergence { .. } => e,
                other => other,
            })?;
        total_krylov += kry;

        let diff = w.sub(&u_iter)?.norm_l2();
        let wn = w.norm_l2();
        last_rel = if wn > 0.0 { diff / wn } else { diff };
        history.push(wn);
        u_iter = w;

        if last_rel <= params.fp_tol {
            return Ok((
                u_iter,
                StepReport {
                    fixed_point_iters: l + 1,
                    final_fp_residual: last_rel,
                    total_krylov_iters: total_krylov,
                },
            ));
        }
    }
    Err(Error::FixedPointNoConvergence {
        iterations: params.fp_maxiter,
        residual: last_rel,
        history,
    })
}

/// Advance `round(t_final/tau)` steps, invoking `observer` after each one
/// with the completed step count. An observer error aborts the run.
pub fn evolve(
    u0: &Field,
    params: &SolverParams,
    mut observer: impl FnMut(usize, &Field, &StepReport) -> Result<()>,
) -> Result<Field> {
    let n_steps = params.n_steps()?;
    let mut u = u0.clone();
    for n in 0..n_steps {
        let (next, report) = step(&u, params).map_err(|e| Error::StepFailed {
            step: n + 1,
            source: Box::new(e),
        })?;
        u = next;
        observer(n + 1, &u, &report)?;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2d;

    fn small_params(lambda: f64, nu: f64, epsilon: f64, tau: f64, t_final: f64) -> SolverParams {
        SolverParams::new(
            CubicQuinticCoeffs::new(lambda, nu, epsilon).unwrap(),
            tau,
            t_final,
        )
        .unwrap()
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let g = Grid2d::square(0.0, 1.0, 8).unwrap();
        let params = small_params(1.0, 1.0, 0.01, 0.01, 0.01);
        let (u1, report) = step(&Field::zeros(g), &params).unwrap();
        assert_eq!(u1.norm_l2(), 0.0);
        assert_eq!(report.fixed_point_iters, 1);
    }

    #[test]
    fn step_count_validation() {
        let mut p = small_params(1.0, 1.0, 0.0, 0.1, 0.5);
        assert_eq!(p.n_steps().unwrap(), 5);
        p.t_final = 0.55;
        assert!(p.n_steps().is_err());
        p.t_final = 0.05;
        assert!(p.n_steps().is_err());
    }

    #[test]
    fn near_linear_limit_conserves_mass() {
        // lambda = 0, nu -> 0+: the scheme degenerates to unitary
        // Crank-Nicolson for the free equation.
        let g = Grid2d::square(-4.0, 4.0, 32).unwrap();
        let u0 = Field::from_fn(g, |x, y| {
            Complex64::new((-(x * x + y * y)).exp(), 0.3 * (-(x * x + y * y) / 2.0).exp())
        });
        let mut params = small_params(0.0, 1e-12, 0.0, 0.02, 0.1);
        // The drift bound probes the scheme itself, so the inner solves must
        // sit well below it.
        params.lin_tol = 1e-14;
        let m0 = u0.norm_l2_sq();
        let u = evolve(&u0, &params, |_, _, _| Ok(())).unwrap();
        let drift = (u.norm_l2_sq() - m0).abs() / m0;
        assert!(drift <= 1e-12, "mass drift {drift}");
    }

    #[test]
    fn single_step_equals_evolve_of_one() {
        let g = Grid2d::square(-2.0, 2.0, 16).unwrap();
        let u0 = Field::from_fn(g, |x, y| Complex64::new((-(x * x + y * y)).exp(), 0.0));
        let params = small_params(1.0, 1.0, 0.01, 0.05, 0.05);
        let (direct, _) = step(&u0, &params).unwrap();
        let via_evolve = evolve(&u0, &params, |_, _, _| Ok(())).unwrap();
        assert!(direct.sub(&via_evolve).unwrap().norm_l2() < 1e-15);
    }

    #[test]
    fn observer_abort_propagates() {
        let g = Grid2d::square(-2.0, 2.0, 8).unwrap();
        let u0 = Field::from_fn(g, |x, y| Complex64::new((-(x * x + y * y)).exp(), 0.0));
        let params = small_params(1.0, 1.0, 0.0, 0.05, 0.5);
        let err = evolve(&u0, &params, |n, _, _| {
            if n >= 3 {
                Err(Error::Aborted("budget".into()))
            } else {
                Ok(())
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Aborted(_)));
    }
}
