//! Experiment harness around the cubic-quintic NLS solvers: flat-file
//! configuration, bit-exact state snapshots, CSV study outputs, and the
//! drivers behind the `cqnls` command-line tool.

pub mod config;
pub mod csvout;
pub mod error;
pub mod experiments;
pub mod snapshot;

pub use config::{build_config, load_config, ExperimentConfig, ExperimentKind, IcSpec, RawConfig};
pub use error::{CliError, Result};
pub use snapshot::{read_snapshot, read_snapshot_bytes, snapshot_to_bytes, write_snapshot};
