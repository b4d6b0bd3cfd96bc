//! Refinement-ladder studies: convergence order, conservation errors, and
//! scheme timing. Level i of a ladder doubles the cell counts and halves the
//! time step of level i−1.

use std::time::Instant;

use rayon::prelude::*;

use cqnls::diagnostics::{discrete_energy, discrete_mass};
use cqnls::{
    convergence_rates, gaussian_vortex_ic, relative_errors, ConvergenceReport, Field,
    SpectralPlan,
};

use super::{build_initial_state, ensure_out_dir, make_pool, refined_grid, ssfm_reference};
use crate::config::ExperimentConfig;
use crate::csvout::{fmt_opt, write_csv};
use crate::error::{CliError, Result};

/// Time-step divisor of the split-step reference against the finest level.
const REFERENCE_TAU_DIVISOR: f64 = 64.0;

/// Run the implicit solver across the ladder against split-step references
/// and report errors and rates at the final time.
pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    ensure_out_dir(cfg)?;
    let levels = cfg.levels;
    let tau_finest = cfg.tau / (1u64 << (levels - 1)) as f64;
    let tau_ref = tau_finest / REFERENCE_TAU_DIVISOR;

    let pool = make_pool(cfg.workers)?;
    let results: Vec<Result<((f64, f64), (f64, f64))>> = pool.install(|| {
        (0..levels)
            .into_par_iter()
            .map(|level| {
                let grid = refined_grid(&cfg.grid, level)?;
                let tau = cfg.tau / (1u64 << level) as f64;
                let params = cfg.solver_params_with(tau, cfg.t_final)?;
                let (u0, _) = build_initial_state(cfg, grid)?;
                let numeric = cqnls::evolve(&u0, &params, |_, _, _| Ok(()))?;
                let reference = ssfm_reference(&u0, &params, tau_ref, cfg.t_final)?;
                let (e2, e1) = relative_errors(&numeric, &reference)?;
                Ok(((grid.h_max(), tau), (e2, e1)))
            })
            .collect()
    });

    let mut level_specs = Vec::new();
    let mut e2s = Vec::new();
    let mut e1s = Vec::new();
    for r in results {
        let ((h, tau), (e2, e1)) = r?;
        level_specs.push((h, tau));
        e2s.push(e2);
        e1s.push(e1);
    }
    let report = ConvergenceReport::from_errors(level_specs, e2s, e1s)
        .map_err(|e| CliError::config(e.to_string()))?;

    let rows: Vec<Vec<String>> = (0..levels)
        .map(|i| {
            let (h, tau) = report.levels[i];
            let f = 1usize << i;
            vec![
                i.to_string(),
                (cfg.grid.cells_x() * f).to_string(),
                (cfg.grid.cells_y() * f).to_string(),
                h.to_string(),
                tau.to_string(),
                report.e2[i].to_string(),
                report.e1[i].to_string(),
                fmt_opt(report.rate2.get(i).copied()),
                fmt_opt(report.rate1.get(i).copied()),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_dir.join("converge.csv"),
        &[
            "level", "cells_x", "cells_y", "h_max", "tau", "e2", "e1", "rate2", "rate1",
        ],
        &rows,
    )?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ConservationRow {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub t: f64,
    pub mass_error: f64,
    pub energy_error: f64,
}

#[derive(Debug, Clone)]
pub struct ConservationStudy {
    pub rows: Vec<ConservationRow>,
    /// Refinement rates of the energy error across levels, one array per
    /// sample time.
    pub energy_rates: Vec<(f64, Vec<f64>)>,
    pub mass_reference: f64,
    pub energy_reference: f64,
}

/// Undamped runs compared against the continuous mass and energy of the
/// initial beam. The energy reference is evaluated on refined grids with a
/// Richardson extrapolation; the beam mass has the closed form 4.
pub fn run_conservation_study(cfg: &ExperimentConfig) -> Result<ConservationStudy> {
    ensure_out_dir(cfg)?;
    let levels = cfg.levels;

    let mass_reference = 4.0;
    let energy_reference = {
        let fine2 = refined_grid(&cfg.grid, levels)?; // 2x the finest level
        let fine4 = refined_grid(&cfg.grid, levels + 1)?; // 4x the finest level
        let e2 = discrete_energy(&gaussian_vortex_ic(fine2), &cfg.coeffs);
        let e4 = discrete_energy(&gaussian_vortex_ic(fine4), &cfg.coeffs);
        // Second-order quadrature: eliminate the h² term and confirm the
        // correction leaves at least six significant digits.
        let extrapolated = (4.0 * e4 - e2) / 3.0;
        let correction = (e4 - e2).abs() / 3.0;
        if correction > 1e-6 * extrapolated.abs() * 4.0 {
            return Err(CliError::config(format!(
                "energy reference not converged: correction {correction:.3e} on {extrapolated}"
            )));
        }
        extrapolated
    };

    let pool = make_pool(cfg.workers)?;
    let per_level: Vec<Result<Vec<ConservationRow>>> = pool.install(|| {
        (0..levels)
            .into_par_iter()
            .map(|level| {
                let grid = refined_grid(&cfg.grid, level)?;
                let tau = cfg.tau / (1u64 << level) as f64;
                let params = cfg.solver_params_with(tau, cfg.t_final)?;
                let u0 = gaussian_vortex_ic(grid);

                // Map sample times onto step indices.
                let mut sample_steps = Vec::new();
                for &t in &cfg.sample_times {
                    let steps = t / tau;
                    if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                        return Err(CliError::config(format!(
                            "sample time {t} is not a step multiple at level {level}"
                        )));
                    }
                    sample_steps.push(steps.round() as usize);
                }

                let mut rows = Vec::new();
                cqnls::evolve(&u0, &params, |step, u, _| {
                    if let Some(pos) = sample_steps.iter().position(|&s| s == step) {
                        rows.push(ConservationRow {
                            level,
                            h: grid.h_max(),
                            tau,
                            t: cfg.sample_times[pos],
                            mass_error: (discrete_mass(u) - mass_reference).abs(),
                            energy_error: (discrete_energy(u, &cfg.coeffs) - energy_reference)
                                .abs(),
                        });
                    }
                    Ok(())
                })?;
                Ok(rows)
            })
            .collect()
    });

    let mut rows = Vec::new();
    for r in per_level {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| (a.level, a.t).partial_cmp(&(b.level, b.t)).unwrap());

    let mut energy_rates = Vec::new();
    if levels >= 2 {
        for &t in &cfg.sample_times {
            let errs: Vec<f64> = (0..levels)
                .map(|lvl| {
                    rows.iter()
                        .find(|r| r.level == lvl && r.t == t)
                        .map(|r| r.energy_error)
                        .expect("row exists for every (level, time)")
                })
                .collect();
            let rates = convergence_rates(&errs).map_err(CliError::Solver)?;
            energy_rates.push((t, rates));
        }
    }

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let rate = energy_rates
                .iter()
                .find(|(t, _)| *t == r.t)
                .and_then(|(_, rates)| rates.get(r.level).copied());
            vec![
                r.level.to_string(),
                r.h.to_string(),
                r.tau.to_string(),
                r.t.to_string(),
                r.mass_error.to_string(),
                r.energy_error.to_string(),
                fmt_opt(rate),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_dir.join("conserve.csv"),
        &[
            "level",
            "h_max",
            "tau",
            "t",
            "mass_error",
            "energy_error",
            "energy_rate",
        ],
        &csv_rows,
    )?;

    Ok(ConservationStudy {
        rows,
        energy_rates,
        mass_reference,
        energy_reference,
    })
}

#[derive(Debug, Clone)]
pub struct TimingRow {
    pub scheme: &'static str,
    pub level: usize,
    pub cells_x: usize,
    pub cells_y: usize,
    pub tau: f64,
    pub steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TimingStudy {
    pub rows: Vec<TimingRow>,
}

/// Wall-clock comparison of the two schemes at matched grids and steps.
/// Runs strictly sequentially so the measurements are not distorted.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<TimingStudy> {
    ensure_out_dir(cfg)?;
    let mut rows = Vec::new();
    for level in 0..cfg.levels {
        let grid = refined_grid(&cfg.grid, level)?;
        let tau = cfg.tau / (1u64 << level) as f64;
        let params = cfg.solver_params_with(tau, cfg.t_final)?;
        let steps = params.n_steps().map_err(|e| CliError::config(e.to_string()))?;
        let (u0, _) = build_initial_state(cfg, grid)?;

        let start = Instant::now();
        let _ = cqnls::evolve(&u0, &params, |_, _, _| Ok(()))?;
        let cnfd_secs = start.elapsed().as_secs_f64();

        let mut plan = SpectralPlan::new(grid);
        let start = Instant::now();
        let _: Field = cqnls::evolve_ssfm(&u0, &params, &mut plan)?;
        let ssfm_secs = start.elapsed().as_secs_f64();

        for (scheme, seconds) in [("cnfd", cnfd_secs), ("ssfm", ssfm_secs)] {
            rows.push(TimingRow {
                scheme,
                level,
                cells_x: grid.cells_x(),
                cells_y: grid.cells_y(),
                tau,
                steps,
                seconds,
            });
        }
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.scheme.to_string(),
                r.level.to_string(),
                r.cells_x.to_string(),
                r.cells_y.to_string(),
                r.tau.to_string(),
                r.steps.to_string(),
                r.seconds.to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_dir.join("timing.csv"),
        &["scheme", "level", "cells_x", "cells_y", "tau", "steps", "seconds"],
        &csv_rows,
    )?;
    Ok(TimingStudy { rows })
}
