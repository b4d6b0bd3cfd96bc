//! Matrix-free solver for the complex linear systems of the implicit time
//! step: `(shift + δ² + coeff∘) W = rhs` on the zero-boundary space.
//!
//! The systems are complex non-Hermitian, so the Krylov method is a
//! stabilized biconjugate-gradient iteration with point-Jacobi
//! preconditioning. The inner tolerance defaults well below the outer
//! fixed-point threshold so the inner solves never pollute the outer loop.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{dot_full, norm_sq_full, Field, Grid2d};
use crate::nonlinearity::{cubic_quotient, quintic_quotient, CubicQuinticCoeffs};

/// Default relative residual tolerance of the inner solves.
pub const DEFAULT_LIN_TOL: f64 = 1e-12;

/// Default iteration cap: `10 sqrt(n_interior) + 200`.
pub fn default_lin_maxiter(grid: &Grid2d) -> usize {
    10 * (grid.n_interior() as f64).sqrt().ceil() as usize + 200
}

/// Action `W ↦ shift·W + δ²W + coeff∘W` on zero-boundary grid functions.
///
/// For the Crank-Nicolson step the shift is `2i/τ` and `coeff` freezes the
/// nonlinear response at the current fixed-point iterate; a negative real
/// shift with zero `coeff` yields the shifted-Laplacian systems used by the
/// ground-state preconditioner.
#[derive(Debug, Clone)]
pub struct HelmholtzOperator {
    grid: Grid2d,
    shift: Complex64,
    /// Frozen coefficient over interior nodes, row-major `(j-1, k-1)`.
    coeff: Vec<Complex64>,
}

impl HelmholtzOperator {
    /// Frozen-coefficient operator of one fixed-point pass of the implicit
    /// step: `shift = 2i/tau` and
    /// `coeff = λ·q₁ − ν·q₂ + iε·|(u_iter + u_prev)/2|²`
    /// with `q₁`, `q₂` the integrated cubic/quintic quotients between the
    /// intensities of `u_iter` and `u_prev`.
    pub fn for_time_step(
        tau: f64,
        u_prev: &Field,
        u_iter: &Field,
        coeffs: &CubicQuinticCoeffs,
    ) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParams(format!(
                "time step must be positive, got tau = {tau}"
            )));
        }
        if u_prev.grid() != u_iter.grid() {
            return Err(Error::GridMismatch);
        }
        let grid = *u_prev.grid();
        let mut coeff = Vec::with_capacity(grid.n_interior());
        let ny = grid.points_y();
        let (vp, vi) = (u_prev.values(), u_iter.values());
        for j in 1..grid.cells_x() {
            for k in 1..grid.cells_y() {
                let i = j * ny + k;
                let a = vi[i].norm_sqr();
                let b = vp[i].norm_sqr();
                let mid = 0.5 * (vi[i] + vp[i]);
                let c = Complex64::new(
                    coeffs.lambda * cubic_quotient(a, b) - coeffs.nu * quintic_quotient(a, b),
                    coeffs.epsilon * mid.norm_sqr(),
                );
                coeff.push(c);
            }
        }
        Ok(Self {
            grid,
            shift: Complex64::new(0.0, 2.0 / tau),
            coeff,
        })
    }

    /// Operator with an explicit diagonal shift and frozen coefficient.
    pub fn with_shift(grid: Grid2d, shift: Complex64, coeff: Vec<Complex64>) -> Result<Self> {
        if coeff.len() != grid.n_interior() {
            return Err(Error::LengthMismatch {
                expected: grid.n_interior(),
                got: coeff.len(),
            });
        }
        Ok(Self { grid, shift, coeff })
    }

    /// Shifted Laplacian `-c + δ²` (zero frozen coefficient).
    pub fn shifted_laplacian(grid: Grid2d, c: f64) -> Self {
        Self {
            grid,
            shift: Complex64::new(-c, 0.0),
            coeff: vec![Complex64::ZERO; grid.n_interior()],
        }
    }

    pub fn grid(&self) -> &Grid2d {
        &self.grid
    }

    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    pub fn coeff(&self) -> &[Complex64] {
        &self.coeff
    }

    /// Apply the operator to a zero-boundary field.
    pub fn apply(&self, w: &Field) -> Result<Field> {
        if w.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![Complex64::ZERO; self.grid.n_points()];
        self.apply_raw(w.values(), &mut out);
        Ok(Field::from_vec_unchecked(self.grid, out))
    }

    fn apply_raw(&self, w: &[Complex64], out: &mut [Complex64]) {
        let g = &self.grid;
        let ny = g.points_y();
        let inv_dx2 = 1.0 / (g.dx() * g.dx());
        let inv_dy2 = 1.0 / (g.dy() * g.dy());
        let kc = g.cells_y() - 1;
        for j in 1..g.cells_x() {
            let row = j * ny;
            let crow = (j - 1) * kc;
            for k in 1..g.cells_y() {
                let i = row + k;
                out[i] = self.shift * w[i]
                    + (w[i + ny] - 2.0 * w[i] + w[i - ny]) * inv_dx2
                    + (w[i + 1] - 2.0 * w[i] + w[i - 1]) * inv_dy2
                    + self.coeff[crow + k - 1] * w[i];
            }
        }
    }

    /// Operator diagonal `shift - 2/dx² - 2/dy² + coeff`, the point-Jacobi
    /// preconditioner.
    fn inverse_diagonal(&self) -> Vec<Complex64> {
        let g = &self.grid;
        let base = self.shift - 2.0 / (g.dx() * g.dx()) - 2.0 / (g.dy() * g.dy());
        self.coeff.iter().map(|&c| (base + c).inv()).collect()
    }

    /// Solve `op(W) = rhs` to relative residual `tol` in the discrete L2
    /// norm, starting from `warm_start` when given. Returns the solution and
    /// the iteration count.
    pub fn solve(
        &self,
        rhs: &Field,
        warm_start: Option<&Field>,
        tol: f64,
        maxiter: usize,
    ) -> Result<(Field, usize)> {
        if rhs.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if let Some(x0) = warm_start {
            if x0.grid() != &self.grid {
                return Err(Error::GridMismatch);
            }
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "solver tolerance must be positive, got {tol}"
            )));
        }
        if maxiter == 0 {
            return Err(Error::InvalidParams("maxiter must be at least 1".into()));
        }

        let n = self.grid.n_points();
        let b = rhs.values();
        let bnorm = norm_sq_full(b).sqrt();
        if bnorm == 0.0 {
            return Ok((Field::zeros(self.grid), 0));
        }
        let tol_abs = tol * bnorm;
        let inv_diag = self.inverse_diagonal();

        let mut x: Vec<Complex64> = match warm_start {
            Some(f) => f.values().to_vec(),
            None => vec![Complex64::ZERO; n],
        };
        let mut r = vec![Complex64::ZERO; n];
        let mut work = vec![Complex64::ZERO; n];

        // r = b - A x
        self.apply_raw(&x, &mut work);
        for i in 0..n {
            r[i] = b[i] - work[i];
        }
        if norm_sq_full(&r).sqrt() <= tol_abs {
            return Ok((Field::from_vec_unchecked(self.grid, x), 0));
        }

        let mut rhat = r.clone();
        let mut rho = Complex64::ONE;
        let mut alpha = Complex64::ONE;
        let mut omega = Complex64::ONE;
        let mut v = vec![Complex64::ZERO; n];
        let mut p = vec![Complex64::ZERO; n];
        let mut phat = vec![Complex64::ZERO; n];
        let mut s = vec![Complex64::ZERO; n];
        let mut shat = vec![Complex64::ZERO; n];
        let mut t = vec![Complex64::ZERO; n];

        let breakdown_floor = f64::MIN_POSITIVE * 1e16;
        let mut restarts = 0usize;
        let mut iter = 0usize;
        let mut last_rel = f64::INFINITY;

        while iter < maxiter {
            iter += 1;
            let rho_new = dot_full(&r, &rhat);
            if rho_new.norm() < breakdown_floor * bnorm * bnorm || omega.norm() == 0.0 {
                // Stagnated shadow residual: restart with the current one.
                restarts += 1;
                if restarts > 50 {
                    return Err(Error::LinearNoConvergence {
                        iterations: iter,
                        residual: norm_sq_full(&r).sqrt() / bnorm,
                    });
                }
                rhat.copy_from_slice(&r);
                rho = Complex64::ONE;
                alpha = Complex64::ONE;
                omega = Complex64::ONE;
                v.iter_mut().for_each(|z| *z = Complex64::ZERO);
                p.iter_mut().for_each(|z| *z = Complex64::ZERO);
                continue;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            precondition(&p, &inv_diag, &self.grid, &mut phat);
            self.apply_raw(&phat, &mut v);
            let denom = dot_full(&v, &rhat);
            if denom.norm() < breakdown_floor * bnorm * bnorm {
                restarts += 1;
                if restarts > 50 {
                    return Err(Error::LinearNoConvergence {
                        iterations: iter,
                        residual: norm_sq_full(&r).sqrt() / bnorm,
                    });
                }
                rhat.copy_from_slice(&r);
                rho = Complex64::ONE;
                alpha = Complex64::ONE;
                omega = Complex64::ONE;
                v.iter_mut().for_each(|z| *z = Complex64::ZERO);
                p.iter_mut().for_each(|z| *z = Complex64::ZERO);
                continue;
            }
            alpha = rho_new / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm_sq_full(&s).sqrt() <= tol_abs {
                for i in 0..n {
                    x[i] += alpha * phat[i];
                }
                if let Some(rel) = self.verified_residual(&x, b, bnorm, tol, &mut work, &mut r) {
                    last_rel = rel;
                } else {
                    return Ok((Field::from_vec_unchecked(self.grid, x), iter));
                }
                rho = rho_new;
                continue;
            }
            precondition(&s, &inv_diag, &self.grid, &mut shat);
            self.apply_raw(&shat, &mut t);
            let tt = norm_sq_full(&t);
            if tt == 0.0 {
                return Err(Error::LinearNoConvergence {
                    iterations: iter,
                    residual: norm_sq_full(&r).sqrt() / bnorm,
                });
            }
            omega = dot_full(&s, &t) / tt;
            for i in 0..n {
                x[i] += alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
            }
            let rel = norm_sq_full(&r).sqrt() / bnorm;
            last_rel = rel;
            if rel <= tol {
                if let Some(rel) = self.verified_residual(&x, b, bnorm, tol, &mut work, &mut r) {
                    last_rel = rel;
                } else {
                    return Ok((Field::from_vec_unchecked(self.grid, x), iter));
                }
            }
            rho = rho_new;
        }
        Err(Error::LinearNoConvergence {
            iterations: maxiter,
            residual: last_rel,
        })
    }

    /// Recompute the true residual; `None` means the contract holds and the
    /// iteration may return, otherwise the refreshed residual is installed in
    /// `r` and iteration continues (guards against recursion drift).
    fn verified_residual(
        &self,
        x: &[Complex64],
        b: &[Complex64],
        bnorm: f64,
        tol: f64,
        work: &mut [Complex64],
        r: &mut [Complex64],
    ) -> Option<f64> {
        self.apply_raw(x, work);
        for i in 0..x.len() {
            r[i] = b[i] - work[i];
        }
        let rel = norm_sq_full(r).sqrt() / bnorm;
        if rel <= tol {
            None
        } else {
            Some(rel)
        }
    }
}

fn precondition(src: &[Complex64], inv_diag: &[Complex64], grid: &Grid2d, dst: &mut [Complex64]) {
    dst.iter_mut().for_each(|z| *z = Complex64::ZERO);
    let ny = grid.points_y();
    let kc = grid.cells_y() - 1;
    for j in 1..grid.cells_x() {
        let row = j * ny;
        let crow = (j - 1) * kc;
        for k in 1..grid.cells_y() {
            dst[row + k] = src[row + k] * inv_diag[crow + k - 1];
        }
    }
}
