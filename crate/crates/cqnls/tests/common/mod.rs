//! Shared helpers for the integration suites: seeded random fields and a
//! dense direct-solve oracle kept independent of the matrix-free path.

use cqnls::{Complex64, Field, Grid2d, HelmholtzOperator};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Complex Gaussian entries at interior nodes, zero boundary.
pub fn random_field(grid: Grid2d, rng: &mut ChaCha8Rng) -> Field {
    let mut u = Field::zeros(grid);
    for j in 1..grid.cells_x() {
        for k in 1..grid.cells_y() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            u.set(j, k, Complex64::new(re, im)).unwrap();
        }
    }
    u
}

/// Assemble the operator over interior unknowns as a dense matrix.
pub fn assemble_dense(op: &HelmholtzOperator) -> Vec<Complex64> {
    let g = *op.grid();
    let (jc, kc) = (g.cells_x(), g.cells_y());
    let kci = kc - 1;
    let n = g.n_interior();
    let idx = |j: usize, k: usize| (j - 1) * kci + (k - 1);
    let inv_dx2 = 1.0 / (g.dx() * g.dx());
    let inv_dy2 = 1.0 / (g.dy() * g.dy());
    let mut a = vec![Complex64::ZERO; n * n];
    for j in 1..jc {
        for k in 1..kc {
            let r = idx(j, k);
            a[r * n + r] = op.shift() - 2.0 * inv_dx2 - 2.0 * inv_dy2 + op.coeff()[r];
            if j > 1 {
                a[r * n + idx(j - 1, k)] = Complex64::new(inv_dx2, 0.0);
            }
            if j < jc - 1 {
                a[r * n + idx(j + 1, k)] = Complex64::new(inv_dx2, 0.0);
            }
            if k > 1 {
                a[r * n + idx(j, k - 1)] = Complex64::new(inv_dy2, 0.0);
            }
            if k < kc - 1 {
                a[r * n + idx(j, k + 1)] = Complex64::new(inv_dy2, 0.0);
            }
        }
    }
    a
}

/// Dense matrix-vector product over interior unknowns.
pub fn dense_apply(a: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let mut y = vec![Complex64::ZERO; n];
    for r in 0..n {
        let mut acc = Complex64::ZERO;
        for c in 0..n {
            acc += a[r * n + c] * x[c];
        }
        y[r] = acc;
    }
    y
}

/// Gaussian elimination with partial pivoting on a dense complex system.
pub fn dense_solve(a_in: &[Complex64], b_in: &[Complex64]) -> Vec<Complex64> {
    let n = b_in.len();
    assert_eq!(a_in.len(), n * n);
    let mut a = a_in.to_vec();
    let mut b = b_in.to_vec();
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm();
        for r in (col + 1)..n {
            let mag = a[r * n + col].norm();
            if mag > best {
                best = mag;
                piv = r;
            }
        }
        assert!(best > 0.0, "singular matrix in dense oracle");
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let factor = a[r * n + col] / d;
            if factor == Complex64::ZERO {
                continue;
            }
            for c in col..n {
                let v = a[col * n + c];
                a[r * n + c] -= factor * v;
            }
            let pivot_b = b[col];
            b[r] -= factor * pivot_b;
        }
    }
    let mut x = vec![Complex64::ZERO; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in (r + 1)..n {
            acc -= a[r * n + c] * x[c];
        }
        x[r] = acc / a[r * n + r];
    }
    x
}

/// Extract interior node values in the operator's interior ordering.
pub fn interior_of(u: &Field) -> Vec<Complex64> {
    let g = *u.grid();
    let mut out = Vec::with_capacity(g.n_interior());
    for j in 1..g.cells_x() {
        for k in 1..g.cells_y() {
            out.push(u.get(j, k));
        }
    }
    out
}

/// Wrap interior values back into a zero-boundary field.
pub fn field_from_interior(grid: Grid2d, interior: &[Complex64]) -> Field {
    let mut u = Field::zeros(grid);
    let mut it = interior.iter();
    for j in 1..grid.cells_x() {
        for k in 1..grid.cells_y() {
            u.set(j, k, *it.next().unwrap()).unwrap();
        }
    }
    u
}
