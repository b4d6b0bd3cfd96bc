//! Uniform Cartesian grid, grid functions with homogeneous Dirichlet
//! boundary, finite-difference operators, inner products and norms.
//!
//! All reductions use pairwise (tree) summation in a fixed deterministic
//! order, so results are bit-reproducible across runs.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform rectangular mesh on `[x_min, x_max] × [y_min, y_max]` with
/// `cells_x × cells_y` cells, i.e. `(cells_x+1) × (cells_y+1)` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2d {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    cells_x: usize,
    cells_y: usize,
    dx: f64,
    dy: f64,
}

impl Grid2d {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        cells_x: usize,
        cells_y: usize,
    ) -> Result<Self> {
        for v in [x_min, x_max, y_min, y_max] {
            if !v.is_finite() {
                return Err(Error::InvalidGrid("non-finite domain bound".into()));
            }
        }
        if !(x_max > x_min) || !(y_max > y_min) {
            return Err(Error::InvalidGrid(format!(
                "empty domain [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        if cells_x < 2 || cells_y < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per direction, got {cells_x} x {cells_y}"
            )));
        }
        // Guard the node count so corrupt inputs cannot request absurd
        // allocations downstream.
        let nodes = cells_x
            .checked_add(1)
            .and_then(|nx| cells_y.checked_add(1).and_then(|ny| nx.checked_mul(ny)));
        if nodes.is_none() {
            return Err(Error::InvalidGrid("node count overflows usize".into()));
        }
        let dx = (x_max - x_min) / cells_x as f64;
        let dy = (y_max - y_min) / cells_y as f64;
        if !(dx > 0.0 && dx.is_finite() && dy > 0.0 && dy.is_finite()) {
            return Err(Error::InvalidGrid("degenerate mesh spacing".into()));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            cells_x,
            cells_y,
            dx,
            dy,
        })
    }

    /// Square grid on `[min, max]²` with `cells` cells per direction.
    pub fn square(min: f64, max: f64, cells: usize) -> Result<Self> {
        Self::new(min, max, min, max, cells, cells)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn cells_x(&self) -> usize {
        self.cells_x
    }
    pub fn cells_y(&self) -> usize {
        self.cells_y
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// Largest mesh spacing, the `h` of refinement studies.
    pub fn h_max(&self) -> f64 {
        self.dx.max(self.dy)
    }

    /// Nodes per direction.
    pub fn points_x(&self) -> usize {
        self.cells_x + 1
    }
    pub fn points_y(&self) -> usize {
        self.cells_y + 1
    }

    /// Total node count `(cells_x+1)(cells_y+1)`.
    pub fn n_points(&self) -> usize {
        self.points_x() * self.points_y()
    }

    /// Interior node count `(cells_x-1)(cells_y-1)`.
    pub fn n_interior(&self) -> usize {
        (self.cells_x - 1) * (self.cells_y - 1)
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }
    pub fn y(&self, k: usize) -> f64 {
        self.y_min + k as f64 * self.dy
    }

    /// Flat index of node `(j, k)`; `j` is the slow axis.
    #[inline]
    pub fn idx(&self, j: usize, k: usize) -> usize {
        j * self.points_y() + k
    }

    /// Quadrature weight `dx * dy` of the discrete inner products.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }
}

/// Complex-valued grid function vanishing on the boundary of the rectangle.
///
/// The zero-boundary invariant is enforced at every construction site, so
/// stencils and transforms can rely on it unconditionally.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid2d,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: Grid2d) -> Self {
        Self {
            grid,
            values: vec![Complex64::ZERO; grid.n_points()],
        }
    }

    /// Evaluate `f(x, y)` at interior nodes; the boundary is forced to zero.
    pub fn from_fn(grid: Grid2d, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut out = Self::zeros(grid);
        for j in 1..grid.cells_x() {
            let x = grid.x(j);
            for k in 1..grid.cells_y() {
                out.values[grid.idx(j, k)] = f(x, grid.y(k));
            }
        }
        out
    }

    /// Wrap raw node values, checking dimensions and the boundary invariant.
    pub fn from_values(grid: Grid2d, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                got: values.len(),
            });
        }
        let field = Self { grid, values };
        for j in 0..grid.points_x() {
            for k in 0..grid.points_y() {
                if j == 0 || j == grid.cells_x() || k == 0 || k == grid.cells_y() {
                    let v = field.values[grid.idx(j, k)];
                    if v != Complex64::ZERO {
                        return Err(Error::BoundaryViolation);
                    }
                }
            }
        }
        Ok(field)
    }

    /// Internal constructor for values produced by operations that preserve
    /// the boundary invariant by construction.
    pub(crate) fn from_vec_unchecked(grid: Grid2d, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2d {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[self.grid.idx(j, k)]
    }

    /// Set an interior node value. Boundary nodes are immutable.
    pub fn set(&mut self, j: usize, k: usize, v: Complex64) -> Result<()> {
        if j == 0 || j >= self.grid.cells_x() || k == 0 || k >= self.grid.cells_y() {
            return Err(Error::BoundaryViolation);
        }
        let idx = self.grid.idx(j, k);
        self.values[idx] = v;
        Ok(())
    }

    fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `(u, v)_h = dx dy Σ_{j=0}^{J-1} Σ_{k=0}^{K-1} u_{jk} conj(v_{jk})`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let (jc, kc) = (self.grid.cells_x(), self.grid.cells_y());
        let ny = self.grid.points_y();
        let s = pairwise_sum(jc * kc, |i| {
            let idx = (i / kc) * ny + (i % kc);
            self.values[idx] * other.values[idx].conj()
        });
        Ok(s * self.grid.cell_area())
    }

    /// `<u, v>_h`, the same sum restricted to interior nodes (j, k >= 1).
    /// Coincides with [`Field::inner`] whenever both arguments vanish on the
    /// boundary.
    pub fn inner_interior(&self, other: &Field) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let (jc, kc) = (self.grid.cells_x() - 1, self.grid.cells_y() - 1);
        let ny = self.grid.points_y();
        let s = pairwise_sum(jc * kc, |i| {
            let idx = (i / kc + 1) * ny + (i % kc + 1);
            self.values[idx] * other.values[idx].conj()
        });
        Ok(s * self.grid.cell_area())
    }

    /// Squared discrete L2 norm `‖u‖²_{2,h}`.
    pub fn norm_l2_sq(&self) -> f64 {
        let (jc, kc) = (self.grid.cells_x(), self.grid.cells_y());
        let ny = self.grid.points_y();
        let s = pairwise_sum(jc * kc, |i| {
            self.values[(i / kc) * ny + (i % kc)].norm_sqr()
        });
        s * self.grid.cell_area()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_sq().sqrt()
    }

    /// `‖u‖^p_{p,h}` for p in {2, 4, 6, 8}.
    pub fn norm_p_pow(&self, p: u32) -> Result<f64> {
        if !matches!(p, 2 | 4 | 6 | 8) {
            return Err(Error::UnsupportedNorm(p));
        }
        let half = (p / 2) as i32;
        let (jc, kc) = (self.grid.cells_x(), self.grid.cells_y());
        let ny = self.grid.points_y();
        let s = pairwise_sum(jc * kc, |i| {
            self.values[(i / kc) * ny + (i % kc)].norm_sqr().powi(half)
        });
        Ok(s * self.grid.cell_area())
    }

    /// `‖u‖_{p,h}` for p in {2, 4, 6, 8}.
    pub fn norm_p(&self, p: u32) -> Result<f64> {
        Ok(self.norm_p_pow(p)?.powf(1.0 / p as f64))
    }

    /// Supremum norm over all nodes.
    pub fn norm_sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    /// Discrete H1 seminorm squared `‖δ⁺u‖²_{2,h}`.
    pub fn grad_norm_sq(&self) -> f64 {
        forward_gradient(self).norm_sq()
    }

    /// `a*u + b*v` on a shared grid.
    pub fn lin_comb(a: Complex64, u: &Field, b: Complex64, v: &Field) -> Result<Field> {
        u.check_same_grid(v)?;
        let values = u
            .values
            .iter()
            .zip(&v.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(Field::from_vec_unchecked(u.grid, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        Field::lin_comb(Complex64::ONE, self, -Complex64::ONE, other)
    }

    /// Midpoint `(u + v)/2`.
    pub fn midpoint(&self, other: &Field) -> Result<Field> {
        let half = Complex64::new(0.5, 0.0);
        Field::lin_comb(half, self, half, other)
    }

    pub fn scale(&self, a: Complex64) -> Field {
        let values = self.values.iter().map(|&x| a * x).collect();
        Field::from_vec_unchecked(self.grid, values)
    }

    /// Complex conjugate, node by node.
    pub fn conj(&self) -> Field {
        let values = self.values.iter().map(|x| x.conj()).collect();
        Field::from_vec_unchecked(self.grid, values)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.im.abs()))
    }
}

/// Five-point discrete Laplacian. Interior nodes carry the stencil value;
/// boundary nodes are written as zero so the result is again a valid
/// [`Field`].
pub fn laplacian(u: &Field) -> Field {
    let g = *u.grid();
    let (jc, kc) = (g.cells_x(), g.cells_y());
    let ny = g.points_y();
    let inv_dx2 = 1.0 / (g.dx() * g.dx());
    let inv_dy2 = 1.0 / (g.dy() * g.dy());
    let v = u.values();
    let mut out = vec![Complex64::ZERO; g.n_points()];
    for j in 1..jc {
        let row = j * ny;
        for k in 1..kc {
            let i = row + k;
            out[i] = (v[i + ny] - 2.0 * v[i] + v[i - ny]) * inv_dx2
                + (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_dy2;
        }
    }
    Field::from_vec_unchecked(g, out)
}

/// Forward differences `δ⁺_x u`, `δ⁺_y u` stored on the full node layout.
///
/// `gx[(j,k)] = (u[j+1,k] - u[j,k]) / dx` for `j < cells_x` (the j = cells_x
/// row is zero padding), and analogously for `gy`. The padding rows never
/// enter the summation ranges of the discrete inner products.
#[derive(Debug, Clone)]
pub struct Gradient {
    grid: Grid2d,
    gx: Vec<Complex64>,
    gy: Vec<Complex64>,
}

pub fn forward_gradient(u: &Field) -> Gradient {
    let g = *u.grid();
    let ny = g.points_y();
    let inv_dx = 1.0 / g.dx();
    let inv_dy = 1.0 / g.dy();
    let v = u.values();
    let mut gx = vec![Complex64::ZERO; g.n_points()];
    let mut gy = vec![Complex64::ZERO; g.n_points()];
    for j in 0..g.cells_x() {
        let row = j * ny;
        for k in 0..g.points_y() {
            gx[row + k] = (v[row + ny + k] - v[row + k]) * inv_dx;
        }
    }
    for j in 0..g.points_x() {
        let row = j * ny;
        for k in 0..g.cells_y() {
            gy[row + k] = (v[row + k + 1] - v[row + k]) * inv_dy;
        }
    }
    Gradient { grid: g, gx, gy }
}

impl Gradient {
    pub fn grid(&self) -> &Grid2d {
        &self.grid
    }

    pub fn gx(&self, j: usize, k: usize) -> Complex64 {
        self.gx[self.grid.idx(j, k)]
    }

    pub fn gy(&self, j: usize, k: usize) -> Complex64 {
        self.gy[self.grid.idx(j, k)]
    }

    fn component_inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let (jc, kc) = (self.grid.cells_x(), self.grid.cells_y());
        let ny = self.grid.points_y();
        let s = pairwise_sum(jc * kc, |i| {
            let idx = (i / kc) * ny + (i % kc);
            a[idx] * b[idx].conj()
        });
        s * self.grid.cell_area()
    }

    /// `(δ⁺_x u, δ⁺_x v)_h`.
    pub fn inner_x(&self, other: &Gradient) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.component_inner(&self.gx, &other.gx))
    }

    /// `(δ⁺_y u, δ⁺_y v)_h`.
    pub fn inner_y(&self, other: &Gradient) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.component_inner(&self.gy, &other.gy))
    }

    /// `‖δ⁺u‖²_{2,h} = ‖δ⁺_x u‖²_{2,h} + ‖δ⁺_y u‖²_{2,h}`.
    pub fn norm_sq(&self) -> f64 {
        let sx = self.component_inner(&self.gx, &self.gx);
        let sy = self.component_inner(&self.gy, &self.gy);
        sx.re + sy.re
    }
}

/// Deterministic pairwise summation of `f(0) + f(1) + ... + f(n-1)`.
pub(crate) fn pairwise_sum<T, F>(n: usize, f: F) -> T
where
    T: Copy + std::ops::Add<Output = T> + num_traits::Zero,
    F: Fn(usize) -> T,
{
    fn rec<T, F>(f: &F, lo: usize, hi: usize) -> T
    where
        T: Copy + std::ops::Add<Output = T> + num_traits::Zero,
        F: Fn(usize) -> T,
    {
        let n = hi - lo;
        if n <= 64 {
            let mut acc = T::zero();
            for i in lo..hi {
                acc = acc + f(i);
            }
            acc
        } else {
            let mid = lo + n / 2;
            rec(f, lo, mid) + rec(f, mid, hi)
        }
    }
    rec(&f, 0, n)
}

/// Deterministic pairwise dot product `Σ a_i conj(b_i)` over raw value
/// arrays. For zero-boundary fields this equals the `(·,·)_h` sum up to the
/// `dx dy` weight.
pub(crate) fn dot_full(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum(a.len(), |i| a[i] * b[i].conj())
}

pub(crate) fn norm_sq_full(a: &[Complex64]) -> f64 {
    pairwise_sum(a.len(), |i| a[i].norm_sqr())
}
