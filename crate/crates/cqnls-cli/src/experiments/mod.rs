//! Experiment orchestration: initial states, reference runs, and the study
//! drivers behind each CLI subcommand.

mod ladder;
mod single;
mod stabmap;

pub use ladder::{
    run_conservation_study, run_convergence_study, run_timing, ConservationRow,
    ConservationStudy, TimingRow, TimingStudy,
};
pub use single::{run_evolve, run_groundstate, run_ssfm_ref, EvolveOutput};
pub use stabmap::{run_stability_map, StabBand, StabCell, StabilityMap};

use cqnls::{
    build_soliton_ic, gaussian_vortex_ic, ground_state, sech_seed, Field, Grid2d,
    GroundStateOptions, SolverParams, SpectralPlan,
};

use crate::config::{ExperimentConfig, IcSpec};
use crate::error::{CliError, Result};
use crate::snapshot::read_snapshot;

/// Ground-state bookkeeping attached to soliton initial conditions.
pub struct SolitonMeta {
    pub profile: Field,
    pub mu: f64,
    pub amplitude: f64,
    pub initial_peak: f64,
    pub lost_power_fraction: f64,
}

/// Build the configured initial condition on an arbitrary grid (ladder
/// levels re-run the ground-state solve per grid).
pub fn build_initial_state(
    cfg: &ExperimentConfig,
    grid: Grid2d,
) -> Result<(Field, Option<SolitonMeta>)> {
    match &cfg.ic {
        IcSpec::GaussianVortex => Ok((gaussian_vortex_ic(grid), None)),
        IcSpec::Soliton {
            params,
            power,
            gs_tol,
            gs_maxiter,
        } => {
            let cx = 0.5 * (grid.x_min() + grid.x_max());
            let cy = 0.5 * (grid.y_min() + grid.y_max());
            let seed = sech_seed(grid, cx, cy);
            let opts = GroundStateOptions {
                tol: *gs_tol,
                maxiter: *gs_maxiter,
                ..GroundStateOptions::default()
            };
            let gs = ground_state(grid, &cfg.coeffs, *power, &seed, &opts)?;
            let ic = build_soliton_ic(&gs.profile, params)?;
            let meta = SolitonMeta {
                profile: gs.profile,
                mu: gs.mu,
                amplitude: params.amplitude,
                initial_peak: ic.field.norm_sup(),
                lost_power_fraction: ic.lost_power_fraction,
            };
            if ic.truncated() {
                eprintln!(
                    "warning: {:.3e} of the soliton power falls outside the domain",
                    meta.lost_power_fraction
                );
            }
            Ok((ic.field, Some(meta)))
        }
        IcSpec::File(path) => {
            let (field, _t) = read_snapshot(path)?;
            if field.grid() != &grid {
                return Err(CliError::config(format!(
                    "initial-condition file grid does not match the configured grid \
                     ({}x{} cells on file)",
                    field.grid().cells_x(),
                    field.grid().cells_y()
                )));
            }
            Ok((field, None))
        }
    }
}

/// Reference trajectory: split-step run on the same grid at a much finer
/// time step, so its time error is negligible against the measured solver.
pub fn ssfm_reference(
    u0: &Field,
    base: &SolverParams,
    tau_ref: f64,
    t_final: f64,
) -> Result<Field> {
    let mut params = *base;
    params.tau = tau_ref;
    params.t_final = t_final;
    let mut plan = SpectralPlan::new(*u0.grid());
    Ok(cqnls::evolve_ssfm(u0, &params, &mut plan)?)
}

pub(crate) fn make_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config(format!("cannot build worker pool: {e}")))
}

pub(crate) fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))
}

/// Grid refined by a factor `2^level` at matching bounds.
pub(crate) fn refined_grid(base: &Grid2d, level: usize) -> Result<Grid2d> {
    let f = 1usize << level;
    Grid2d::new(
        base.x_min(),
        base.x_max(),
        base.y_min(),
        base.y_max(),
        base.cells_x() * f,
        base.cells_y() * f,
    )
    .map_err(|e| CliError::config(e.to_string()))
}
