//! Minimal CSV output: UTF-8, comma separated, fixed header row. Values are
//! plain numerics or short tokens, so no quoting is ever required.

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{}", header.join(",")).expect("in-memory write");
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        writeln!(buf, "{}", row.join(",")).expect("in-memory write");
    }
    std::fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

/// Shortest round-trip decimal form, empty for `None`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
