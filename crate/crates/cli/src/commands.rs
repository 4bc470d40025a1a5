use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use perisolve_core::stencil::{qg_row_profile, ProfileEntry};
use perisolve_core::{gaussian_rhs, make_grid, solve, FieldKind};

use crate::config::{Overrides, RunConfig};
use crate::error::{CliError, CliResult};
use crate::record::{append_csv, write_csv, write_snapshot, RunRecord, SCHEMA_VERSION};

pub const RUNS_CSV: &str = "runs.csv";

/// One benchmark family: a field on a ladder of sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Suite {
    pub name: &'static str,
    pub field: FieldKind,
    pub d: usize,
    pub ladder: &'static [usize],
}

const LADDER_2D: &[usize] = &[64, 128, 256, 512];
const LADDER_3D: &[usize] = &[16, 32, 64, 128];

pub const SUITES: &[Suite] = &[
    Suite { name: "2DHi", field: FieldKind::GaussianBump, d: 2, ladder: LADDER_2D },
    Suite { name: "2DHii", field: FieldKind::Cross, d: 2, ladder: LADDER_2D },
    Suite { name: "3DHi", field: FieldKind::GaussianBump, d: 3, ladder: LADDER_3D },
    Suite { name: "3DHii", field: FieldKind::Cross, d: 3, ladder: LADDER_3D },
    Suite { name: "2DSi", field: FieldKind::RandomGaussians, d: 2, ladder: LADDER_2D },
    Suite { name: "2DSii", field: FieldKind::LatticeVacancy, d: 2, ladder: LADDER_2D },
    Suite { name: "3DSi", field: FieldKind::RandomGaussians, d: 3, ladder: LADDER_3D },
    Suite { name: "3DSii", field: FieldKind::LatticeVacancy, d: 3, ladder: LADDER_3D },
];

pub fn find_suite(name: &str) -> CliResult<Suite> {
    SUITES.iter().copied().find(|s| s.name == name).ok_or_else(|| {
        let names: Vec<&str> = SUITES.iter().map(|s| s.name).collect();
        CliError::config(None, Some("suite"), format!("unknown suite `{name}` (expected one of {})", names.join(", ")))
    })
}

/// Default size cap keeping a suite at desk scale.
pub fn default_max_n(d: usize) -> usize {
    if d == 3 {
        32
    } else {
        256
    }
}

impl Suite {
    pub fn rungs(&self, max_n: usize) -> Vec<usize> {
        self.ladder.iter().copied().filter(|&n| n <= max_n).collect()
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Solve one configuration and write its artifacts into `out`.
///
/// The record is appended to `runs.csv` before convergence is checked, so a
/// failed run still leaves a trace.
pub fn run_solve(cfg: &RunConfig, out: &Path) -> CliResult<RunRecord> {
    let record = execute(cfg, out, "")?;
    append_csv(&out.join(RUNS_CSV), &record)?;
    check_converged(&record)?;
    Ok(record)
}

fn execute(cfg: &RunConfig, out: &Path, suite: &str) -> CliResult<RunRecord> {
    ensure_dir(out)?;
    let v = cfg.problem.potential()?;
    let f = gaussian_rhs(v.grid());
    let (u, mut report) = solve(&v, &f, &cfg.solver_config())?;
    if cfg.problem.field == FieldKind::RandomGaussians {
        report.seed = Some(cfg.problem.seed);
    }

    let config_path = out.join(format!("{}.cfg", cfg.name));
    fs::write(&config_path, cfg.to_text()).map_err(|e| CliError::io(&config_path, e))?;
    let solution_path = if cfg.write_solution {
        let p = out.join(format!("{}_u.bin", cfg.name));
        write_snapshot(&p, &u)?;
        Some(p)
    } else {
        None
    };
    let potential_path = if cfg.write_potential {
        let p = out.join(format!("{}_v.bin", cfg.name));
        write_snapshot(&p, &v)?;
        Some(p)
    } else {
        None
    };
    Ok(RunRecord {
        suite: suite.to_string(),
        config: cfg.clone(),
        report,
        config_path: Some(config_path),
        solution_path,
        potential_path,
    })
}

fn check_converged(r: &RunRecord) -> CliResult<()> {
    if r.report.converged {
        Ok(())
    } else {
        let hist = &r.report.residual_history;
        Err(CliError::NotConverged(format!(
            "`{}` did not reach tol {:e} in {} iterations (last residual {:.3e})",
            r.config.name,
            r.config.tol,
            r.report.iterations,
            hist.last().copied().unwrap_or(f64::NAN)
        )))
    }
}

/// Run every rung of a suite up to `max_n`, writing `bench_<suite>.csv`.
pub fn run_bench(suite: &Suite, max_n: usize, overrides: &Overrides, out: &Path) -> CliResult<(Vec<RunRecord>, PathBuf)> {
    let rungs = suite.rungs(max_n);
    if rungs.is_empty() {
        return Err(CliError::config(None, Some("max-n"), format!("no rung of {} fits below {max_n}", suite.name)));
    }
    let mut records = Vec::with_capacity(rungs.len());
    for n in rungs {
        let mut cfg = RunConfig::preset(suite.field, suite.d, n);
        cfg.name = format!("{}_{}", suite.name, n);
        cfg.write_solution = false;
        cfg.apply(overrides)?;
        records.push(execute(&cfg, out, suite.name)?);
    }
    let path = out.join(format!("bench_{}.csv", suite.name));
    write_csv(&path, &records)?;
    for r in &records {
        check_converged(r)?;
    }
    Ok((records, path))
}

/// Text table mirroring the benchmark columns.
pub fn format_table(records: &[RunRecord]) -> String {
    use crate::record::seconds;
    let mut s = format!(
        "{:>8} {:>12} {:>4} {:>10} {:>10} {:>6} {:>10}\n",
        "omega/2pi", "N", "|S|", "T_stencil", "T_NDsetup", "N_iter", "T_NDsolve"
    );
    for r in records {
        let p = &r.config.problem;
        let size = format!("{}^{}", p.n, p.d);
        s.push_str(&format!(
            "{:>8.0} {:>12} {:>4} {:>10} {:>10} {:>6} {:>10}\n",
            p.omega / (2.0 * PI),
            size,
            r.config.shifts,
            seconds(r.report.timings.stencil),
            seconds(r.report.timings.nd_setup),
            r.report.iterations,
            seconds(r.report.timings.nd_solve),
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileArgs {
    pub n: usize,
    pub j: usize,
    pub t: usize,
    /// Shift in units of `pi^2`.
    pub shift_pi2: f64,
}

impl Default for ProfileArgs {
    fn default() -> Self {
        Self { n: 32, j: 16, t: 1, shift_pi2: -62.0 }
    }
}

/// Write the row profile of `Q G_s` to `qg_profile.csv`.
pub fn run_qg_profile(args: &ProfileArgs, out: &Path) -> CliResult<(Vec<ProfileEntry>, PathBuf)> {
    ensure_dir(out)?;
    let grid = make_grid(1, args.n)?;
    let profile = qg_row_profile(grid, args.shift_pi2 * PI * PI, args.t, args.j)?;
    let path = out.join("qg_profile.csv");
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| CliError::io(&path, e.into());
    w.write_record(["schema_version", "column_index", "magnitude", "reserved_flag"]).map_err(io)?;
    for e in &profile {
        w.write_record([
            SCHEMA_VERSION.to_string(),
            e.column.to_string(),
            format!("{:e}", e.magnitude),
            u8::from(e.reserved).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok((profile, path))
}

/// Write only the potential snapshot of a configuration.
pub fn run_fields(cfg: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    ensure_dir(out)?;
    let v = cfg.problem.potential()?;
    let path = out.join(format!("{}_v.bin", cfg.name));
    write_snapshot(&path, &v)?;
    Ok(path)
}
