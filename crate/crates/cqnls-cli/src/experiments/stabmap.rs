//! Stability raster over (h, τ) cells: each cell runs the implicit solver to
//! the horizon, measures the relative error against a fine-step split-step
//! reference on the same grid, and is classified into error bands.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use cqnls::{relative_errors, Field, Grid2d};

use super::{build_initial_state, ensure_out_dir, make_pool, ssfm_reference};
use crate::config::ExperimentConfig;
use crate::csvout::{fmt_opt, write_csv};
use crate::error::{CliError, Result};

/// Reference time step divisor against the finest raster step.
const REFERENCE_TAU_DIVISOR: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabBand {
    Le005,
    Le01,
    Le05,
    Gt05,
    Diverged,
    Timeout,
}

impl StabBand {
    pub fn classify(e2: f64) -> Self {
        if !e2.is_finite() {
            Self::Diverged
        } else if e2 <= 0.05 {
            Self::Le005
        } else if e2 <= 0.1 {
            Self::Le01
        } else if e2 <= 0.5 {
            Self::Le05
        } else {
            Self::Gt05
        }
    }

    /// The run left the accuracy bands entirely (large error, divergence, or
    /// an exhausted budget).
    pub fn is_unstable(&self) -> bool {
        matches!(self, Self::Gt05 | Self::Diverged | Self::Timeout)
    }
}

impl fmt::Display for StabBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Le005 => "le0.05",
            Self::Le01 => "le0.1",
            Self::Le05 => "le0.5",
            Self::Gt05 => "gt0.5",
            Self::Diverged => "diverged",
            Self::Timeout => "timeout",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct StabCell {
    pub h: f64,
    pub tau: f64,
    pub e2: Option<f64>,
    pub band: StabBand,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityMap {
    pub cells: Vec<StabCell>,
}

impl StabilityMap {
    pub fn cell(&self, h: f64, tau: f64) -> Option<&StabCell> {
        self.cells
            .iter()
            .find(|c| (c.h - h).abs() <= 1e-12 * h && (c.tau - tau).abs() <= 1e-12 * tau)
    }
}

struct RasterRow {
    grid: Grid2d,
    u0: Field,
    reference: Field,
}

pub fn run_stability_map(cfg: &ExperimentConfig) -> Result<StabilityMap> {
    ensure_out_dir(cfg)?;
    let tau_min = cfg.map_tau.iter().copied().fold(f64::INFINITY, f64::min);
    let tau_ref = tau_min / REFERENCE_TAU_DIVISOR;
    let lx = cfg.grid.x_max() - cfg.grid.x_min();
    let ly = cfg.grid.y_max() - cfg.grid.y_min();

    let pool = make_pool(cfg.workers)?;
    // One grid, initial state and reference per h value.
    let rows: Vec<Result<RasterRow>> = pool.install(|| {
        cfg.map_h
            .par_iter()
            .map(|&h| {
                let grid = Grid2d::new(
                    cfg.grid.x_min(),
                    cfg.grid.x_max(),
                    cfg.grid.y_min(),
                    cfg.grid.y_max(),
                    (lx / h).round() as usize,
                    (ly / h).round() as usize,
                )
                .map_err(|e| CliError::config(e.to_string()))?;
                let (u0, _) = build_initial_state(cfg, grid)?;
                let params = cfg.solver_params_with(tau_min, cfg.t_final)?;
                let reference = ssfm_reference(&u0, &params, tau_ref, cfg.t_final)?;
                Ok(RasterRow {
                    grid,
                    u0,
                    reference,
                })
            })
            .collect()
    });
    let rows: Vec<RasterRow> = rows.into_iter().collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..rows.len())
        .flat_map(|ri| (0..cfg.map_tau.len()).map(move |ti| (ri, ti)))
        .collect();

    let cells: Vec<StabCell> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(ri, ti)| {
                let row = &rows[ri];
                let tau = cfg.map_tau[ti];
                let h = row.grid.h_max();
                let start = Instant::now();
                let budget = cfg.cell_time_budget;
                let params = match cfg.solver_params_with(tau, cfg.t_final) {
                    Ok(p) => p,
                    Err(_) => {
                        return StabCell {
                            h,
                            tau,
                            e2: None,
                            band: StabBand::Diverged,
                            seconds: 0.0,
                        }
                    }
                };
                let run = cqnls::evolve(&row.u0, &params, |_, _, _| {
                    if budget > 0.0 && start.elapsed().as_secs_f64() > budget {
                        Err(cqnls::Error::Aborted("cell budget exceeded".into()))
                    } else {
                        Ok(())
                    }
                });
                let seconds = start.elapsed().as_secs_f64();
                match run {
                    Ok(u) => match relative_errors(&u, &row.reference) {
                        Ok((e2, _)) => StabCell {
                            h,
                            tau,
                            e2: Some(e2),
                            band: StabBand::classify(e2),
                            seconds,
                        },
                        Err(_) => StabCell {
                            h,
                            tau,
                            e2: None,
                            band: StabBand::Diverged,
                            seconds,
                        },
                    },
                    Err(cqnls::Error::Aborted(_)) => StabCell {
                        h,
                        tau,
                        e2: None,
                        band: StabBand::Timeout,
                        seconds,
                    },
                    Err(_) => StabCell {
                        h,
                        tau,
                        e2: None,
                        band: StabBand::Diverged,
                        seconds,
                    },
                }
            })
            .collect()
    });

    let csv_rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.h.to_string(),
                c.tau.to_string(),
                fmt_opt(c.e2),
                c.band.to_string(),
                c.seconds.to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_dir.join("stabmap.csv"),
        &["h_max", "tau", "e2", "band", "seconds"],
        &csv_rows,
    )?;
    Ok(StabilityMap { cells })
}
