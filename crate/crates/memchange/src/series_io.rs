// SPDX-License-Identifier: MIT OR Apache-2.0

//! Trajectory import/export: single-column CSV and JSON.
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! simulate -> CSV -> detect pipeline is lossless.

use crate::error::{McError, McResult};
use crate::synthesis::Trajectory;
use std::io::{BufRead, Write};
use std::path::Path;

/// Read a one-column CSV series. A single non-numeric first line is
/// treated as a header; blank lines are ignored.
pub fn read_series_csv(path: &Path) -> McResult<Vec<f64>> {
    let file = std::fs::File::open(path)
        .map_err(|e| McError::data(format!("cannot open {}: {e}", path.display())))?;
    read_series(std::io::BufReader::new(file))
}

pub fn read_series(reader: impl BufRead) -> McResult<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(McError::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(McError::data(format!(
                    "non-finite value {v} on line {}",
                    idx + 1
                )))
            }
            Err(_) if idx == 0 => continue, // header
            Err(_) => {
                return Err(McError::data(format!(
                    "malformed number {trimmed:?} on line {}",
                    idx + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(McError::data("empty series"));
    }
    Ok(values)
}

/// Write a one-column CSV series (no header).
pub fn write_series_csv(path: &Path, values: &[f64]) -> McResult<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| McError::data(format!("cannot create {}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    for v in values {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Write a trajectory as JSON: `{"values": [...], "seed": ..., "spec": {...}}`.
pub fn write_trajectory_json(path: &Path, traj: &Trajectory) -> McResult<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| McError::data(format!("cannot create {}: {e}", path.display())))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), traj)
        .map_err(|e| McError::data(format!("cannot encode trajectory: {e}")))?;
    Ok(())
}

/// Read a trajectory from JSON.
pub fn read_trajectory_json(path: &Path) -> McResult<Trajectory> {
    let file = std::fs::File::open(path)
        .map_err(|e| McError::data(format!("cannot open {}: {e}", path.display())))?;
    let traj: Trajectory = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| McError::data(format!("malformed trajectory JSON: {e}")))?;
    if traj.values.is_empty() {
        return Err(McError::data("empty series"));
    }
    Ok(traj)
}
