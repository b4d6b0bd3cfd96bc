//! Solvers for the (2+1)D cubic-quintic nonlinear Schrödinger equation with
//! cubic damping on a rectangle with homogeneous Dirichlet boundary:
//!
//! ```text
//! i u_t + Δu + λ|u|²u − ν|u|⁴u + iε|u|²u = 0,   u|_∂Ω = 0.
//! ```
//!
//! The crate provides
//! * [`grid`] — the discrete function space, stencils, inner products, norms;
//! * [`nonlinearity`] — the pointwise two-level nonlinear terms;
//! * [`linsolve`] — matrix-free Krylov solves of the implicit systems;
//! * [`cnfd`] — the conservative implicit time stepper;
//! * [`ssfm`] — the sine-spectral split-step reference solver;
//! * [`groundstate`] — stationary soliton profiles and initial conditions;
//! * [`diagnostics`] — mass/energy tracking, error metrics, refinement rates.

pub mod cnfd;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod groundstate;
pub mod linsolve;
pub mod nonlinearity;
pub mod ssfm;

pub use cnfd::{evolve, step, SolverParams, StepReport};
pub use diagnostics::{
    amplitude_theory, conservation_errors, convergence_rates, discrete_energy, discrete_mass,
    relative_errors, ConvergenceReport, TimeSeriesRecord,
};
pub use error::{Error, Result};
pub use grid::{forward_gradient, laplacian, Field, Gradient, Grid2d};
pub use groundstate::{
    build_soliton_ic, gaussian_vortex_ic, ground_state, sech_seed, GroundStateOptions,
    GroundStateResult, SolitonIc, SolitonIcParams,
};
pub use linsolve::HelmholtzOperator;
pub use nonlinearity::{primitive_f, psi1, psi2, varphi, CubicQuinticCoeffs, PrimitiveKind};
pub use ssfm::{evolve_ssfm, linear_substep, nonlinear_substep, SpectralPlan};

pub use num_complex::Complex64;
