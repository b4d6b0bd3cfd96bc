use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cqnls_cli::config::{load_config, ExperimentConfig, ExperimentKind};
use cqnls_cli::error::Result;
use cqnls_cli::experiments;

/// Simulation toolkit for the damped cubic-quintic nonlinear Schrödinger
/// equation on a rectangle.
#[derive(Parser)]
#[command(name = "cqnls", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (flat `key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent levels/cells (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Reproducibility seed recorded with the run.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve an initial state with the implicit scheme.
    Evolve(RunArgs),
    /// Solve for the stationary soliton profile at fixed power.
    Groundstate(RunArgs),
    /// Refinement-ladder convergence study against a spectral reference.
    Converge(RunArgs),
    /// Undamped mass/energy conservation study.
    Conserve(RunArgs),
    /// Error-band raster over (h, tau) cells.
    Stabmap(RunArgs),
    /// Evolve with the split-step reference solver.
    SsfmRef(RunArgs),
    /// Wall-clock comparison of the two schemes.
    Timing(RunArgs),
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Evolve(_) => ExperimentKind::Evolve,
            Command::Groundstate(_) => ExperimentKind::GroundState,
            Command::Converge(_) => ExperimentKind::Converge,
            Command::Conserve(_) => ExperimentKind::Conserve,
            Command::Stabmap(_) => ExperimentKind::StabMap,
            Command::SsfmRef(_) => ExperimentKind::SsfmRef,
            Command::Timing(_) => ExperimentKind::Timing,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Evolve(a)
            | Command::Groundstate(a)
            | Command::Converge(a)
            | Command::Conserve(a)
            | Command::Stabmap(a)
            | Command::SsfmRef(a)
            | Command::Timing(a) => a,
        }
    }
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = load_config(kind, &args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(command: &Command) -> Result<()> {
    let cfg = load(command.kind(), command.args())?;
    match command.kind() {
        ExperimentKind::Evolve => {
            let out = experiments::run_evolve(&cfg)?;
            let last = out.record.len() - 1;
            println!(
                "evolved {} steps to t = {}; final mass {:.6e}, energy {:.6e}, amplitude {:.6e}",
                last,
                out.record.times[last],
                out.record.mass[last],
                out.record.energy[last],
                out.record.amplitude[last],
            );
        }
        ExperimentKind::SsfmRef => {
            let (record, _) = experiments::run_ssfm_ref(&cfg)?;
            let last = record.len() - 1;
            println!(
                "reference run: {} steps to t = {}; final mass {:.6e}",
                last, record.times[last], record.mass[last]
            );
        }
        ExperimentKind::GroundState => {
            let gs = experiments::run_groundstate(&cfg)?;
            println!(
                "ground state: mu = {:.6}, power = {:.6}, residual = {:.3e}, {} iterations",
                gs.mu, gs.power, gs.residual, gs.iterations
            );
        }
        ExperimentKind::Converge => {
            let report = experiments::run_convergence_study(&cfg)?;
            for i in 0..report.levels.len() {
                let (h, tau) = report.levels[i];
                let r2 = report
                    .rate2
                    .get(i)
                    .map(|r| format!("{r:.3}"))
                    .unwrap_or_default();
                let r1 = report
                    .rate1
                    .get(i)
                    .map(|r| format!("{r:.3}"))
                    .unwrap_or_default();
                println!(
                    "level {i}: h = {h}, tau = {tau}, e2 = {:.4e} (rate {r2}), e1 = {:.4e} (rate {r1})",
                    report.e2[i], report.e1[i]
                );
            }
        }
        ExperimentKind::Conserve => {
            let study = experiments::run_conservation_study(&cfg)?;
            for row in &study.rows {
                println!(
                    "level {} t = {}: mass error {:.3e}, energy error {:.3e}",
                    row.level, row.t, row.mass_error, row.energy_error
                );
            }
            for (t, rates) in &study.energy_rates {
                let rates: Vec<String> = rates.iter().map(|r| format!("{r:.3}")).collect();
                println!("t = {t}: energy-error rates [{}]", rates.join(", "));
            }
        }
        ExperimentKind::StabMap => {
            let map = experiments::run_stability_map(&cfg)?;
            for cell in &map.cells {
                println!(
                    "h = {}, tau = {}: band {} ({}s)",
                    cell.h,
                    cell.tau,
                    cell.band,
                    cell.seconds.round()
                );
            }
        }
        ExperimentKind::Timing => {
            let study = experiments::run_timing(&cfg)?;
            for row in &study.rows {
                println!(
                    "{} level {} ({}x{}, tau = {}): {:.3} s for {} steps",
                    row.scheme, row.level, row.cells_x, row.cells_y, row.tau, row.seconds,
                    row.steps
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
