//! Run records, CSV tables, and binary snapshots.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use perisolve_core::{GridSpec, RealField, SolveReport};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Bumped whenever columns change.
pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: &[&str] = &[
    "schema_version",
    "suite",
    "name",
    "equation",
    "field",
    "d",
    "n",
    "unknowns",
    "omega",
    "energy",
    "seed",
    "shifts",
    "t_max",
    "leaf",
    "tol",
    "restart",
    "max_iter",
    "iterations",
    "converged",
    "true_residual",
    "t_stencil",
    "t_nd_setup",
    "t_nd_solve",
    "t_gmres",
    "config_path",
    "solution_path",
    "potential_path",
];

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub suite: String,
    pub config: RunConfig,
    pub report: SolveReport,
    pub config_path: Option<PathBuf>,
    pub solution_path: Option<PathBuf>,
    pub potential_path: Option<PathBuf>,
}

/// Seconds with three significant digits.
pub fn seconds(d: Duration) -> String {
    sig3(d.as_secs_f64())
}

pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-6..6).contains(&mag) {
        return format!("{x:.2e}");
    }
    let decimals = (2 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn path_cell(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunRecord {
    pub fn cells(&self) -> Vec<String> {
        let c = &self.config;
        let p = &c.problem;
        let r = &self.report;
        let t = &r.timings;
        vec![
            SCHEMA_VERSION.to_string(),
            self.suite.clone(),
            c.name.clone(),
            p.equation.to_string(),
            p.field.to_string(),
            p.d.to_string(),
            p.n.to_string(),
            p.n.pow(p.d as u32).to_string(),
            format!("{:?}", p.omega),
            format!("{:?}", p.energy),
            p.seed.to_string(),
            c.shifts.to_string(),
            c.t_max.to_string(),
            c.leaf.to_string(),
            format!("{:e}", c.tol),
            c.restart.to_string(),
            c.max_iter.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            format!("{:.3e}", r.true_residual),
            seconds(t.stencil),
            seconds(t.nd_setup),
            seconds(t.nd_solve),
            seconds(t.gmres),
            path_cell(&self.config_path),
            path_cell(&self.solution_path),
            path_cell(&self.potential_path),
        ]
    }
}

/// Write records to a fresh CSV file with header.
pub fn write_csv(path: &Path, records: &[RunRecord]) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(COLUMNS).map_err(io)?;
    for r in records {
        w.write_record(r.cells()).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Append one record, writing the header if the file is new or empty.
pub fn append_csv(path: &Path, record: &RunRecord) -> CliResult<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| CliError::io(path, e.into());
    if fresh {
        w.write_record(COLUMNS).map_err(io)?;
    }
    w.write_record(record.cells()).map_err(io)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Header line `d n count`, then little-endian `f64` values in grid order.
pub fn write_snapshot(path: &Path, field: &RealField) -> CliResult<()> {
    let grid = field.grid();
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    writeln!(w, "{} {} {}", grid.dim(), grid.n(), grid.len()).map_err(io)?;
    for &x in field.values() {
        w.write_all(&x.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_snapshot(path: &Path) -> CliResult<RealField> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| CliError::io(path, e))?;
    let bad = |msg: &str| CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string()));
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not text"))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("malformed header")))
        .collect::<CliResult<_>>()?;
    let [d, n, count] = nums[..] else {
        return Err(bad("header needs three fields"));
    };
    let grid = GridSpec::new(d, n)?;
    let body = &bytes[nl + 1..];
    if count != grid.len() || body.len() != 8 * count {
        return Err(bad("element count does not match the payload"));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RealField::new(grid, values)?)
}
