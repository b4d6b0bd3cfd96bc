//! Flat `key = value` experiment configuration.
//!
//! One assignment per line; lines whose first non-blank character is `#` are
//! comments. Keys outside the documented list, duplicate keys, and malformed
//! values are hard errors.

use std::collections::BTreeMap;
use std::path::PathBuf;

use cqnls::{CubicQuinticCoeffs, Grid2d, SolitonIcParams, SolverParams};

use crate::error::{CliError, Result};

/// Every recognized configuration key.
pub const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "x_min",
    "x_max",
    "y_min",
    "y_max",
    "cells_x",
    "cells_y",
    "lambda",
    "nu",
    "epsilon",
    "tau",
    "t_final",
    "fp_tol",
    "fp_maxiter",
    "lin_tol",
    "lin_maxiter",
    "ic",
    "ic_file",
    "amplitude",
    "x0",
    "y0",
    "d1",
    "d2",
    "alpha0",
    "power",
    "gs_tol",
    "gs_maxiter",
    "levels",
    "sample_times",
    "map_h",
    "map_tau",
    "cell_time_budget",
    "snapshot_every",
    "out_dir",
    "seed",
    "workers",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Evolve,
    GroundState,
    Converge,
    Conserve,
    StabMap,
    SsfmRef,
    Timing,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "evolve" => Self::Evolve,
            "groundstate" => Self::GroundState,
            "converge" => Self::Converge,
            "conserve" => Self::Conserve,
            "stabmap" => Self::StabMap,
            "ssfm-ref" => Self::SsfmRef,
            "timing" => Self::Timing,
            other => {
                return Err(CliError::config(format!(
                    "unknown experiment kind '{other}'"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::GroundState => "groundstate",
            Self::Converge => "converge",
            Self::Conserve => "conserve",
            Self::StabMap => "stabmap",
            Self::SsfmRef => "ssfm-ref",
            Self::Timing => "timing",
        }
    }
}

#[derive(Debug, Clone)]
pub enum IcSpec {
    Soliton {
        params: SolitonIcParams,
        power: f64,
        gs_tol: f64,
        gs_maxiter: usize,
    },
    GaussianVortex,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub grid: Grid2d,
    pub coeffs: CubicQuinticCoeffs,
    /// Coarsest-level time step; unused by `groundstate`.
    pub tau: f64,
    pub t_final: f64,
    pub fp_tol: f64,
    pub fp_maxiter: usize,
    pub lin_tol: f64,
    pub lin_maxiter: Option<usize>,
    pub ic: IcSpec,
    /// Ground-state controls, also used when `ic = soliton`.
    pub power: f64,
    pub gs_tol: f64,
    pub gs_maxiter: usize,
    /// Ladder depth for converge/conserve/timing; level i runs with
    /// `cells·2^i` and `tau/2^i`.
    pub levels: usize,
    pub sample_times: Vec<f64>,
    pub map_h: Vec<f64>,
    pub map_tau: Vec<f64>,
    /// Seconds per stability-map cell; 0 disables the budget.
    pub cell_time_budget: f64,
    /// Write a state snapshot every n steps; 0 disables intermediate dumps.
    pub snapshot_every: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn solver_params(&self) -> Result<SolverParams> {
        self.solver_params_with(self.tau, self.t_final)
    }

    pub fn solver_params_with(&self, tau: f64, t_final: f64) -> Result<SolverParams> {
        let mut p = SolverParams::new(self.coeffs, tau, t_final).map_err(solver_cfg_err)?;
        p.fp_tol = self.fp_tol;
        p.fp_maxiter = self.fp_maxiter;
        p.lin_tol = self.lin_tol;
        p.lin_maxiter = self.lin_maxiter;
        p.validate().map_err(solver_cfg_err)?;
        Ok(p)
    }
}

fn solver_cfg_err(e: cqnls::Error) -> CliError {
    CliError::config(e.to_string())
}

/// Raw parsed assignments, before typed validation.
#[derive(Debug, Default)]
pub struct RawConfig {
    map: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(CliError::config(format!("line {}: empty key", lineno + 1)));
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::config(format!(
                    "line {}: unknown key '{key}'",
                    lineno + 1
                )));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::config(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
        }
        Ok(Self { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| CliError::config(format!("missing required key '{key}'")))
    }

    fn f64_req(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.require(key)?)
    }

    fn f64_opt(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => parse_f64(key, v),
            None => Ok(default),
        }
    }

    fn usize_req(&self, key: &str) -> Result<usize> {
        parse_usize(key, self.require(key)?)
    }

    fn usize_opt(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(v) => parse_usize(key, v),
            None => Ok(default),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.require(key)?;
        raw.split(',')
            .map(|tok| parse_f64(key, tok.trim()))
            .collect()
    }

    fn f64_list_opt(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            Some(_) => self.f64_list(key),
            None => Ok(default.to_vec()),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| CliError::config(format!("key '{key}': '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::config(format!(
            "key '{key}': value must be finite"
        )));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| CliError::config(format!("key '{key}': '{v}' is not a nonnegative integer")))
}

/// Build and validate the typed configuration for one experiment kind.
pub fn build_config(kind: ExperimentKind, raw: &RawConfig) -> Result<ExperimentConfig> {
    if let Some(declared) = raw.get("experiment") {
        let declared = ExperimentKind::parse(declared)?;
        if declared != kind {
            return Err(CliError::config(format!(
                "config declares experiment '{}' but subcommand is '{}'",
                declared.name(),
                kind.name()
            )));
        }
    }

    let grid = Grid2d::new(
        raw.f64_req("x_min")?,
        raw.f64_req("x_max")?,
        raw.f64_req("y_min")?,
        raw.f64_req("y_max")?,
        raw.usize_req("cells_x")?,
        raw.usize_req("cells_y")?,
    )
    .map_err(|e| CliError::config(e.to_string()))?;

    let coeffs = CubicQuinticCoeffs::new(
        raw.f64_req("lambda")?,
        raw.f64_req("nu")?,
        raw.f64_req("epsilon")?,
    )
    .map_err(|e| CliError::config(e.to_string()))?;

    let needs_time = kind != ExperimentKind::GroundState;
    let (tau, t_final) = if needs_time {
        (raw.f64_req("tau")?, raw.f64_req("t_final")?)
    } else {
        (raw.f64_opt("tau", 1.0)?, raw.f64_opt("t_final", 1.0)?)
    };

    let ic = match (kind, raw.get("ic")) {
        (ExperimentKind::GroundState, _) => {
            // The ground-state run seeds itself; `ic` is not consulted.
            IcSpec::GaussianVortex
        }
        (_, None) => return Err(CliError::config("missing required key 'ic'")),
        (_, Some("gaussian-vortex")) => IcSpec::GaussianVortex,
        (_, Some("soliton")) => IcSpec::Soliton {
            params: SolitonIcParams {
                amplitude: raw.f64_opt("amplitude", 1.0)?,
                x0: raw.f64_opt("x0", 0.0)?,
                y0: raw.f64_opt("y0", 0.0)?,
                d1: raw.f64_opt("d1", 0.0)?,
                d2: raw.f64_opt("d2", 0.0)?,
                alpha0: raw.f64_opt("alpha0", 0.0)?,
            },
            power: raw.f64_opt("power", 60.0)?,
            gs_tol: raw.f64_opt("gs_tol", 1e-9)?,
            gs_maxiter: raw.usize_opt("gs_maxiter", 20_000)?,
        },
        (_, Some("file")) => {
            let path = raw.require("ic_file")?;
            IcSpec::File(PathBuf::from(path))
        }
        (_, Some(other)) => {
            return Err(CliError::config(format!(
                "key 'ic': unknown initial condition '{other}' \
                 (expected soliton | gaussian-vortex | file)"
            )))
        }
    };

    let cfg = ExperimentConfig {
        kind,
        grid,
        coeffs,
        tau,
        t_final,
        fp_tol: raw.f64_opt("fp_tol", 1e-8)?,
        fp_maxiter: raw.usize_opt("fp_maxiter", 100)?,
        lin_tol: raw.f64_opt("lin_tol", 1e-12)?,
        lin_maxiter: match raw.usize_opt("lin_maxiter", 0)? {
            0 => None,
            n => Some(n),
        },
        ic,
        power: raw.f64_opt("power", 60.0)?,
        gs_tol: raw.f64_opt("gs_tol", 1e-9)?,
        gs_maxiter: raw.usize_opt("gs_maxiter", 20_000)?,
        levels: raw.usize_opt("levels", 1)?,
        sample_times: raw.f64_list_opt("sample_times", &[0.25, 0.5, 0.75, 1.0])?,
        map_h: match kind {
            ExperimentKind::StabMap => raw.f64_list("map_h")?,
            _ => raw.f64_list_opt("map_h", &[])?,
        },
        map_tau: match kind {
            ExperimentKind::StabMap => raw.f64_list("map_tau")?,
            _ => raw.f64_list_opt("map_tau", &[])?,
        },
        cell_time_budget: raw.f64_opt("cell_time_budget", 0.0)?,
        snapshot_every: raw.usize_opt("snapshot_every", 0)?,
        out_dir: PathBuf::from(raw.get("out_dir").unwrap_or("out")),
        seed: raw
            .get("seed")
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| CliError::config(format!("key 'seed': '{v}' is not a u64")))
            })
            .transpose()?
            .unwrap_or(0),
        workers: raw.usize_opt("workers", 0)?,
    };

    validate_for_kind(&cfg)?;
    Ok(cfg)
}

fn validate_for_kind(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.kind {
        ExperimentKind::Converge => {
            if cfg.levels < 2 {
                return Err(CliError::config(
                    "a convergence study needs a ladder of at least 2 levels",
                ));
            }
        }
        ExperimentKind::Conserve => {
            if cfg.coeffs.epsilon != 0.0 {
                return Err(CliError::config(
                    "the conservation study requires epsilon = 0",
                ));
            }
            if !matches!(cfg.ic, IcSpec::GaussianVortex) {
                return Err(CliError::config(
                    "the conservation study supports only ic = gaussian-vortex \
                     (its continuous references need a closed-form initial state)",
                ));
            }
            if cfg.levels < 1 {
                return Err(CliError::config("levels must be at least 1"));
            }
            if cfg.sample_times.is_empty() {
                return Err(CliError::config("sample_times must not be empty"));
            }
            for w in cfg.sample_times.windows(2) {
                if w[1] <= w[0] {
                    return Err(CliError::config(
                        "sample_times must be strictly increasing",
                    ));
                }
            }
            if cfg.sample_times.iter().any(|&t| t <= 0.0 || t > cfg.t_final) {
                return Err(CliError::config(
                    "sample_times must lie in (0, t_final]",
                ));
            }
        }
        ExperimentKind::StabMap => {
            if cfg.map_h.is_empty() || cfg.map_tau.is_empty() {
                return Err(CliError::config("map_h and map_tau must not be empty"));
            }
            let lx = cfg.grid.x_max() - cfg.grid.x_min();
            let ly = cfg.grid.y_max() - cfg.grid.y_min();
            for &h in &cfg.map_h {
                if !(h > 0.0) {
                    return Err(CliError::config("map_h entries must be positive"));
                }
                for (len, axis) in [(lx, "x"), (ly, "y")] {
                    let cells = len / h;
                    if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) || cells.round() < 2.0
                    {
                        return Err(CliError::config(format!(
                            "map_h entry {h} does not tile the {axis} extent {len}"
                        )));
                    }
                }
            }
            for &tau in &cfg.map_tau {
                if !(tau > 0.0) {
                    return Err(CliError::config("map_tau entries must be positive"));
                }
                let steps = cfg.t_final / tau;
                if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
                    return Err(CliError::config(format!(
                        "map_tau entry {tau} does not divide t_final {}",
                        cfg.t_final
                    )));
                }
            }
        }
        ExperimentKind::Timing => {
            if cfg.levels < 1 {
                return Err(CliError::config("levels must be at least 1"));
            }
        }
        ExperimentKind::GroundState => {
            if !(cfg.power > 0.0) {
                return Err(CliError::config("power must be positive"));
            }
        }
        ExperimentKind::Evolve | ExperimentKind::SsfmRef => {}
    }
    if matches!(cfg.ic, IcSpec::File(_))
        && !matches!(cfg.kind, ExperimentKind::Evolve | ExperimentKind::SsfmRef)
    {
        return Err(CliError::config(
            "ic = file is only supported by the evolve and ssfm-ref experiments \
             (ladder and map experiments rebuild the state per grid)",
        ));
    }
    Ok(())
}

/// Read and build a configuration from a file path.
pub fn load_config(kind: ExperimentKind, path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let raw = RawConfig::parse_str(&text)?;
    build_config(kind, &raw)
}
