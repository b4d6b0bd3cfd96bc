//! Conserved-quantity diagnostics, error metrics and refinement rates.

use crate::error::{Error, Result};
use crate::grid::{forward_gradient, Field};
use crate::nonlinearity::CubicQuinticCoeffs;

/// Discrete mass `‖u‖²_{2,h}`.
pub fn discrete_mass(u: &Field) -> f64 {
    u.norm_l2_sq()
}

/// Discrete energy
/// `E_h(u) = ‖δ⁺u‖²_{2,h} − (λ/2)‖u‖⁴_{4,h} + (ν/3)‖u‖⁶_{6,h}`.
pub fn discrete_energy(u: &Field, coeffs: &CubicQuinticCoeffs) -> f64 {
    let grad = u.grad_norm_sq();
    let p4 = u.norm_p_pow(4).expect("p = 4 is supported");
    let p6 = u.norm_p_pow(6).expect("p = 6 is supported");
    grad - 0.5 * coeffs.lambda * p4 + coeffs.nu / 3.0 * p6
}

/// Slack of the unconditional bound
/// `‖δ⁺u‖² + (ν/6)‖u‖⁶ ≤ E_h(u) + (3λ²/8ν)‖u‖²`;
/// nonnegative (up to round-off) for every zero-boundary field.
pub fn energy_coercivity_slack(u: &Field, coeffs: &CubicQuinticCoeffs) -> f64 {
    let lhs = u.grad_norm_sq() + coeffs.nu / 6.0 * u.norm_p_pow(6).expect("p = 6");
    let rhs = discrete_energy(u, coeffs)
        + 3.0 * coeffs.lambda * coeffs.lambda / (8.0 * coeffs.nu) * u.norm_l2_sq();
    rhs - lhs
}

/// Closed-form amplitude decay of a soliton under cubic damping:
/// `A(t) = A₀ [1 + 2ε ‖v₀‖⁴_{4} ‖v₀‖⁻²_{2} A₀⁴ t]^{-1/2}`,
/// with the norms taken as their discrete surrogates on the profile grid.
pub fn amplitude_theory(t: f64, a0: f64, epsilon: f64, v0: &Field) -> f64 {
    if epsilon == 0.0 || t == 0.0 {
        return a0;
    }
    let p4 = v0.norm_p_pow(4).expect("p = 4 is supported");
    let p2 = v0.norm_l2_sq();
    a0 / (1.0 + 2.0 * epsilon * p4 / p2 * a0.powi(4) * t).sqrt()
}

/// Relative errors against a reference field:
/// `e2 = ‖u − r‖_{2,h}/‖r‖_{2,h}` and
/// `e1 = ‖δ⁺(u − r)‖_{2,h}/‖δ⁺r‖_{2,h}`.
pub fn relative_errors(u_num: &Field, u_ref: &Field) -> Result<(f64, f64)> {
    let diff = u_num.sub(u_ref)?;
    let ref2 = u_ref.norm_l2();
    let ref1 = forward_gradient(u_ref).norm_sq().sqrt();
    if ref2 == 0.0 || ref1 == 0.0 {
        return Err(Error::Domain(
            "reference field has zero norm in the requested metric".into(),
        ));
    }
    let e2 = diff.norm_l2() / ref2;
    let e1 = forward_gradient(&diff).norm_sq().sqrt() / ref1;
    Ok((e2, e1))
}

/// Absolute deviations of the discrete mass and energy from supplied
/// continuous reference values.
pub fn conservation_errors(
    u_n: &Field,
    mass_ref: f64,
    energy_ref: f64,
    coeffs: &CubicQuinticCoeffs,
) -> (f64, f64) {
    (
        (discrete_mass(u_n) - mass_ref).abs(),
        (discrete_energy(u_n, coeffs) - energy_ref).abs(),
    )
}

/// Refinement rates `rate_i = log₂(e_i / e_{i+1})` between consecutive
/// levels of a factor-2 ladder.
pub fn convergence_rates(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::InvalidParams(
            "rate computation needs at least two levels".into(),
        ));
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Domain(
            "errors must be positive to take refinement rates".into(),
        ));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Per-step diagnostics of a time integration.
#[derive(Debug, Clone, Default)]
pub struct TimeSeriesRecord {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub fp_iters: Vec<usize>,
}

impl TimeSeriesRecord {
    pub fn push(
        &mut self,
        t: f64,
        mass: f64,
        energy: f64,
        amplitude: f64,
        fp_iters: usize,
    ) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::InvalidParams(format!(
                    "sample times must be strictly increasing: {t} after {last}"
                )));
            }
        }
        self.times.push(t);
        self.mass.push(mass);
        self.energy.push(energy);
        self.amplitude.push(amplitude);
        self.fp_iters.push(fp_iters);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Errors and rates across a refinement ladder.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// `(h, tau)` per level, coarsest first.
    pub levels: Vec<(f64, f64)>,
    pub e2: Vec<f64>,
    pub e1: Vec<f64>,
    pub rate2: Vec<f64>,
    pub rate1: Vec<f64>,
}

impl ConvergenceReport {
    pub fn from_errors(levels: Vec<(f64, f64)>, e2: Vec<f64>, e1: Vec<f64>) -> Result<Self> {
        if levels.len() != e2.len() || levels.len() != e1.len() {
            return Err(Error::InvalidParams(
                "levels and error arrays must have matching lengths".into(),
            ));
        }
        let rate2 = convergence_rates(&e2)?;
        let rate1 = convergence_rates(&e1)?;
        Ok(Self {
            levels,
            e2,
            e1,
            rate2,
            rate1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2d;
    use num_complex::Complex64;

    fn spike() -> Field {
        let g = Grid2d::square(0.0, 1.0, 4).unwrap();
        let mut u = Field::zeros(g);
        u.set(1, 1, Complex64::ONE).unwrap();
        u
    }

    #[test]
    fn energy_examples() {
        let u = spike();
        let zero = Field::zeros(*u.grid());
        let c = CubicQuinticCoeffs::new(2.0, 3.0, 0.0).unwrap();
        assert_eq!(discrete_energy(&zero, &c), 0.0);
        // grad 4, p4 = p6 = 0.0625: 4 - (2/2)(0.0625) + (3/3)(0.0625) = 4.
        assert_eq!(discrete_energy(&u, &c), 4.0);
    }

    #[test]
    fn energy_lambda_flip_moves_only_quartic_term() {
        let g = Grid2d::square(-1.0, 1.0, 16).unwrap();
        let u = Field::from_fn(g, |x, y| Complex64::new(x - y, x * y));
        let plus = CubicQuinticCoeffs::new(1.7, 0.9, 0.0).unwrap();
        let minus = CubicQuinticCoeffs::new(-1.7, 0.9, 0.0).unwrap();
        let total = discrete_energy(&u, &plus) + discrete_energy(&u, &minus);
        let expect = 2.0 * (u.grad_norm_sq() + 0.9 / 3.0 * u.norm_p_pow(6).unwrap());
        assert!((total - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn energy_is_phase_invariant() {
        let g = Grid2d::square(-1.0, 1.0, 12).unwrap();
        let u = Field::from_fn(g, |x, y| Complex64::new((3.0 * x).sin(), y));
        let c = CubicQuinticCoeffs::new(-0.8, 1.3, 0.0).unwrap();
        let e = discrete_energy(&u, &c);
        for theta in [0.3, 1.2, 2.9] {
            let rotated = u.scale(Complex64::from_polar(1.0, theta));
            assert!((discrete_energy(&rotated, &c) - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn coercivity_slack_nonnegative_on_random_fields() {
        let g = Grid2d::square(-1.0, 1.0, 24).unwrap();
        let c = CubicQuinticCoeffs::new(2.0, 0.5, 0.0).unwrap();
        for s in 0..25 {
            let u = Field::from_fn(g, |x, y| {
                Complex64::new(
                    (x * (s as f64 + 1.0)).sin() * 3.0,
                    (y * (2.0 * s as f64 + 1.0)).cos(),
                )
            });
            assert!(energy_coercivity_slack(&u, &c) >= -1e-11);
        }
    }

    #[test]
    fn amplitude_theory_limits() {
        let g = Grid2d::square(-5.0, 5.0, 32).unwrap();
        let v0 = Field::from_fn(g, |x, y| Complex64::new((-(x * x + y * y)).exp(), 0.0));
        assert_eq!(amplitude_theory(0.0, 1.3, 0.01, &v0), 1.3);
        assert_eq!(amplitude_theory(7.0, 1.3, 0.0, &v0), 1.3);
        // Strictly decaying for epsilon > 0.
        let a1 = amplitude_theory(1.0, 1.0, 0.01, &v0);
        let a2 = amplitude_theory(2.0, 1.0, 0.01, &v0);
        assert!(a2 < a1 && a1 < 1.0);
        // Closed form against a direct evaluation.
        let p4 = v0.norm_p_pow(4).unwrap();
        let p2 = v0.norm_l2_sq();
        let direct = 1.0 / (1.0 + 2.0 * 0.01 * p4 / p2).sqrt();
        assert!((a1 - direct).abs() < 1e-15);
    }

    #[test]
    fn relative_error_examples() {
        let g = Grid2d::square(-1.0, 1.0, 16).unwrap();
        let r = Field::from_fn(g, |x, y| Complex64::new(x + y, x - y));
        let (e2, e1) = relative_errors(&r, &r).unwrap();
        assert_eq!((e2, e1), (0.0, 0.0));
        let scaled = r.scale(Complex64::new(1.01, 0.0));
        let (e2, e1) = relative_errors(&scaled, &r).unwrap();
        assert!((e2 - 0.01).abs() < 1e-12);
        assert!((e1 - 0.01).abs() < 1e-12);
        let zero = Field::zeros(g);
        assert!(relative_errors(&r, &zero).is_err());
    }

    #[test]
    fn conservation_error_examples() {
        let u = spike();
        let c = CubicQuinticCoeffs::new(1.0, 1.0, 0.0).unwrap();
        let (em, ee) = conservation_errors(&u, discrete_mass(&u), 0.0, &c);
        assert_eq!(em, 0.0);
        assert!(ee > 0.0);
    }

    #[test]
    fn rate_examples() {
        // Exact quartering gives exactly 2.
        let r = convergence_rates(&[4e-2, 1e-2]).unwrap();
        assert_eq!(r, vec![2.0]);
        // Exactly second-order sequence C·4^{-i}.
        let seq: Vec<f64> = (0..5).map(|i| 3.7 * 0.25f64.powi(i)).collect();
        for rate in convergence_rates(&seq).unwrap() {
            assert!((rate - 2.0).abs() < 1e-12);
        }
        // Published error pairs, rates recomputed from the definition.
        let r = convergence_rates(&[1.227e-3, 3.110e-4]).unwrap();
        assert!((r[0] - (1.227e-3f64 / 3.110e-4).log2()).abs() < 1e-12);
        assert!((r[0] - 1.9802).abs() < 5e-4);
        let r = convergence_rates(&[4.840e-2, 1.236e-2]).unwrap();
        assert!((r[0] - 1.9693).abs() < 5e-4);

        assert!(convergence_rates(&[1.0]).is_err());
        assert!(convergence_rates(&[1.0, -1.0]).is_err());
        assert!(convergence_rates(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn time_series_rejects_nonincreasing_times() {
        let mut ts = TimeSeriesRecord::default();
        ts.push(0.1, 1.0, 1.0, 1.0, 3).unwrap();
        ts.push(0.2, 1.0, 1.0, 1.0, 3).unwrap();
        assert!(ts.push(0.2, 1.0, 1.0, 1.0, 3).is_err());
        assert_eq!(ts.len(), 2);
    }

    #[test]
    fn report_shape() {
        let report = ConvergenceReport::from_errors(
            vec![(0.25, 0.03125), (0.125, 0.015625)],
            vec![4e-2, 1e-2],
            vec![8e-2, 2e-2],
        )
        .unwrap();
        assert_eq!(report.rate2.len(), report.e2.len() - 1);
        assert_eq!(report.rate1.len(), report.e1.len() - 1);
        assert!(ConvergenceReport::from_errors(vec![(0.25, 0.1)], vec![1.0], vec![1.0]).is_err());
    }
}
