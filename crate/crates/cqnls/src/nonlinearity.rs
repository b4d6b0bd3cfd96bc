//! Pointwise nonlinear terms of the Crank-Nicolson scheme.
//!
//! The two-level terms are always evaluated through their integrated closed
//! forms, which are smooth everywhere; the raw difference-quotient forms have
//! a removable singularity at `|z| = |w|` and appear only in tests.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Physical coefficients of the cubic-quintic equation with cubic damping:
/// `lambda` multiplies the cubic term, `nu > 0` the quintic term and
/// `epsilon >= 0` the damping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicQuinticCoeffs {
    pub lambda: f64,
    pub nu: f64,
    pub epsilon: f64,
}

impl CubicQuinticCoeffs {
    pub fn new(lambda: f64, nu: f64, epsilon: f64) -> Result<Self> {
        if !lambda.is_finite() || !nu.is_finite() || !epsilon.is_finite() {
            return Err(Error::InvalidParams("non-finite coefficient".into()));
        }
        if !(nu > 0.0) {
            return Err(Error::InvalidParams(format!(
                "quintic coefficient must be positive, got nu = {nu}"
            )));
        }
        if epsilon < 0.0 {
            return Err(Error::InvalidParams(format!(
                "damping coefficient must be nonnegative, got epsilon = {epsilon}"
            )));
        }
        Ok(Self {
            lambda,
            nu,
            epsilon,
        })
    }
}

/// Cubic two-level term: `((|z|² + |w|²)/2) · (z + w)/2`.
#[inline]
pub fn psi1(z: Complex64, w: Complex64) -> Complex64 {
    cubic_quotient(z.norm_sqr(), w.norm_sqr()) * midpoint(z, w)
}

/// Quintic two-level term: `((|z|⁴ + |z|²|w|² + |w|⁴)/3) · (z + w)/2`.
#[inline]
pub fn psi2(z: Complex64, w: Complex64) -> Complex64 {
    quintic_quotient(z.norm_sqr(), w.norm_sqr()) * midpoint(z, w)
}

/// Damping term: `|m|² m` with `m = (z + w)/2`.
#[inline]
pub fn varphi(z: Complex64, w: Complex64) -> Complex64 {
    let m = midpoint(z, w);
    m.norm_sqr() * m
}

/// Integrated quotient of `F₁(ρ) = ρ²/2` between intensities `a` and `b`.
#[inline]
pub(crate) fn cubic_quotient(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

/// Integrated quotient of `F₂(ρ) = ρ³/3` between intensities `a` and `b`.
/// The grouping keeps the evaluation bitwise symmetric in its arguments.
#[inline]
pub(crate) fn quintic_quotient(a: f64, b: f64) -> f64 {
    ((a * a + b * b) + a * b) / 3.0
}

#[inline]
fn midpoint(z: Complex64, w: Complex64) -> Complex64 {
    0.5 * (z + w)
}

/// Antiderivatives `F₁(ρ) = ρ²/2` and `F₂(ρ) = ρ³/3` of the intensity
/// response functions `f₁(s) = s`, `f₂(s) = s²`.
pub fn primitive_f(rho: f64, which: PrimitiveKind) -> Result<f64> {
    if rho < 0.0 || !rho.is_finite() {
        return Err(Error::Domain(format!(
            "intensity must be a nonnegative finite number, got {rho}"
        )));
    }
    Ok(match which {
        PrimitiveKind::Cubic => 0.5 * rho * rho,
        PrimitiveKind::Quintic => rho * rho * rho / 3.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveKind {
    Cubic,
    Quintic,
}
