//! Bit-exact state snapshots.
//!
//! Layout: one ASCII header line `CQNLS1 J K a b c d t` terminated by a
//! newline, then `(J+1)(K+1)` complex node values as little-endian IEEE-754
//! doubles in (re, im) pairs, row-major with `j` as the slow index. Floats in
//! the header use shortest round-trip decimal form, so a write/read cycle
//! reproduces every field bit for bit.

use std::path::Path;

use cqnls::{Complex64, Field, Grid2d};

use crate::error::{CliError, Result};

pub const SNAPSHOT_MAGIC: &str = "CQNLS1";

/// Longest header line accepted when parsing untrusted bytes.
const MAX_HEADER_LEN: usize = 256;

pub fn snapshot_to_bytes(field: &Field, t: f64) -> Vec<u8> {
    let g = field.grid();
    let header = format!(
        "{} {} {} {} {} {} {} {}\n",
        SNAPSHOT_MAGIC,
        g.cells_x(),
        g.cells_y(),
        g.x_min(),
        g.x_max(),
        g.y_min(),
        g.y_max(),
        t
    );
    let mut out = Vec::with_capacity(header.len() + 16 * g.n_points());
    out.extend_from_slice(header.as_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn read_snapshot_bytes(bytes: &[u8]) -> Result<(Field, f64)> {
    let header_end = bytes
        .iter()
        .take(MAX_HEADER_LEN)
        .position(|&b| b == b'\n')
        .ok_or_else(|| CliError::Format("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| CliError::Format("header is not valid UTF-8".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 8 {
        return Err(CliError::Format(format!(
            "header has {} fields, expected 8",
            tokens.len()
        )));
    }
    if tokens[0] != SNAPSHOT_MAGIC {
        return Err(CliError::Format(format!(
            "bad magic '{}', expected '{SNAPSHOT_MAGIC}'",
            tokens[0]
        )));
    }
    let cells_x: usize = tokens[1]
        .parse()
        .map_err(|_| CliError::Format("bad cell count".into()))?;
    let cells_y: usize = tokens[2]
        .parse()
        .map_err(|_| CliError::Format("bad cell count".into()))?;
    let mut bounds = [0f64; 5];
    for (slot, tok) in bounds.iter_mut().zip(&tokens[3..8]) {
        *slot = tok
            .parse()
            .map_err(|_| CliError::Format(format!("bad float '{tok}' in header")))?;
    }
    let [a, b, c, d, t] = bounds;
    if !t.is_finite() {
        return Err(CliError::Format("non-finite snapshot time".into()));
    }
    let grid = Grid2d::new(a, b, c, d, cells_x, cells_y)
        .map_err(|e| CliError::Format(format!("invalid grid in header: {e}")))?;

    // Validate the payload length before any allocation sized by the header.
    let expected = grid
        .n_points()
        .checked_mul(16)
        .ok_or_else(|| CliError::Format("payload size overflows".into()))?;
    let payload = &bytes[header_end + 1..];
    if payload.len() != expected {
        return Err(CliError::Format(format!(
            "payload holds {} bytes, header implies {expected} \
             ({} complex values)",
            payload.len(),
            grid.n_points()
        )));
    }
    let mut values = Vec::with_capacity(grid.n_points());
    for chunk in payload.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    let field = Field::from_values(grid, values)
        .map_err(|e| CliError::Format(format!("payload rejected: {e}")))?;
    Ok((field, t))
}

pub fn write_snapshot(path: &Path, field: &Field, t: f64) -> Result<()> {
    std::fs::write(path, snapshot_to_bytes(field, t)).map_err(|e| CliError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<(Field, f64)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    read_snapshot_bytes(&bytes)
}
