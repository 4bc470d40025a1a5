//! Run configuration files.
//!
//! Plain text, one `key = value` per line, `#` starts a comment. Keys:
//!
//! | key                | default            | meaning                                   |
//! |--------------------|--------------------|-------------------------------------------|
//! | `equation`         | required           | `helmholtz` or `schrodinger`              |
//! | `field`            | required           | `gaussian_bump`, `cross`, `random_gaussians`, `lattice_vacancy` |
//! | `d`                | required           | dimension, 1 to 3                         |
//! | `n`                | required           | points per dimension, power of two        |
//! | `name`             | `<equation>_<field>_<d>d_<n>` | run label used in file names   |
//! | `omega`            | `2 pi n / 4`       | Helmholtz angular frequency               |
//! | `energy`           | `2.4`              | Schrodinger energy `E`                    |
//! | `seed`             | `0`                | seed for random wells                     |
//! | `shifts`           | `max(4, n/16)` in 2D, `max(4, n/4)` in 3D | shift list size `|S|` |
//! | `t_max`            | `2`                | largest stencil radius                    |
//! | `leaf`             | `8`                | separator spacing `B`                     |
//! | `tol`              | `1e-6`             | GMRES relative tolerance                  |
//! | `restart`          | `40`               | GMRES restart length                      |
//! | `max_iter`         | `200`              | GMRES iteration cap                       |
//! | `write_solution`   | `true`             | write the solution snapshot               |
//! | `write_potential`  | `false`            | write the potential snapshot              |
//! | `bump_amplitude`, `bump_width`, `cross_speed`, `cross_half_width`, `well_amplitude`, `well_sigma`, `lattice_period` | see `FieldParams` | field shape |

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use perisolve_core::krylov::GmresConfig;
use perisolve_core::problems::FieldParams;
use perisolve_core::solver::default_shift_count;
use perisolve_core::{Equation, FieldKind, ProblemConfig, SolverConfig};

use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "equation",
    "field",
    "d",
    "n",
    "name",
    "omega",
    "energy",
    "seed",
    "shifts",
    "t_max",
    "leaf",
    "tol",
    "restart",
    "max_iter",
    "write_solution",
    "write_potential",
    "bump_amplitude",
    "bump_width",
    "cross_speed",
    "cross_half_width",
    "well_amplitude",
    "well_sigma",
    "lattice_period",
];

const REQUIRED: &[&str] = &["equation", "field", "d", "n"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub problem: ProblemConfig,
    pub shifts: usize,
    pub t_max: usize,
    pub leaf: usize,
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    pub write_solution: bool,
    pub write_potential: bool,
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub restart: Option<usize>,
    pub t_max: Option<usize>,
    pub leaf: Option<usize>,
}

struct Entry {
    line: usize,
    value: String,
}

fn parse_value<T: FromStr>(key: &str, e: &Entry) -> CliResult<T> {
    e.value
        .parse()
        .map_err(|_| CliError::config(Some(e.line), Some(key), format!("cannot parse `{}`", e.value)))
}

fn parse_bool(key: &str, e: &Entry) -> CliResult<bool> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(CliError::config(Some(e.line), Some(key), format!("expected true or false, got `{other}`"))),
    }
}

impl RunConfig {
    /// Preset run for one field kind and size.
    pub fn preset(field: FieldKind, d: usize, n: usize) -> Self {
        let problem = ProblemConfig::preset(field, d, n);
        let gm = GmresConfig::default();
        let solver = SolverConfig::default();
        Self {
            name: default_name(&problem),
            shifts: default_shift_count(d, n),
            t_max: solver.t_max,
            leaf: solver.spacing,
            tol: gm.tol,
            restart: gm.restart,
            max_iter: gm.max_iter,
            write_solution: true,
            write_potential: false,
            problem,
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries: HashMap<String, Entry> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::config(Some(line), None, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::config(Some(line), Some(key), "unknown key"));
            }
            if value.is_empty() {
                return Err(CliError::config(Some(line), Some(key), "missing value"));
            }
            if let Some(prev) = entries.get(key) {
                return Err(CliError::config(Some(line), Some(key), format!("duplicate key (first set on line {})", prev.line)));
            }
            entries.insert(key.to_string(), Entry { line, value: value.to_string() });
        }
        for key in REQUIRED {
            if !entries.contains_key(*key) {
                return Err(CliError::config(None, Some(key), "required key is missing"));
            }
        }

        let equation: Equation = parse_value("equation", &entries["equation"])?;
        let field: FieldKind = parse_value("field", &entries["field"])?;
        if field.equation() != equation {
            let e = &entries["field"];
            return Err(CliError::config(Some(e.line), Some("field"), format!("`{field}` is not a {equation} field")));
        }
        let d: usize = parse_value("d", &entries["d"])?;
        let n: usize = parse_value("n", &entries["n"])?;
        let mut cfg = RunConfig::preset(field, d, n);

        let mut params = FieldParams::default();
        for (key, e) in &entries {
            let k = key.as_str();
            match k {
                "equation" | "field" | "d" | "n" => {}
                "name" => cfg.name = e.value.clone(),
                "omega" => cfg.problem.omega = parse_value(k, e)?,
                "energy" => cfg.problem.energy = parse_value(k, e)?,
                "seed" => cfg.problem.seed = parse_value(k, e)?,
                "shifts" => cfg.shifts = parse_value(k, e)?,
                "t_max" => cfg.t_max = parse_value(k, e)?,
                "leaf" => cfg.leaf = parse_value(k, e)?,
                "tol" => cfg.tol = parse_value(k, e)?,
                "restart" => cfg.restart = parse_value(k, e)?,
                "max_iter" => cfg.max_iter = parse_value(k, e)?,
                "write_solution" => cfg.write_solution = parse_bool(k, e)?,
                "write_potential" => cfg.write_potential = parse_bool(k, e)?,
                "bump_amplitude" => params.bump_amplitude = parse_value(k, e)?,
                "bump_width" => params.bump_width = parse_value(k, e)?,
                "cross_speed" => params.cross_speed = parse_value(k, e)?,
                "cross_half_width" => params.cross_half_width = parse_value(k, e)?,
                "well_amplitude" => params.well_amplitude = parse_value(k, e)?,
                "well_sigma" => params.well_sigma = parse_value(k, e)?,
                "lattice_period" => params.lattice_period = parse_value(k, e)?,
                _ => unreachable!("keys are checked while reading"),
            }
        }
        cfg.problem.params = params;
        if cfg.name.is_empty() || cfg.name.contains(['/', '\\']) {
            let line = entries.get("name").map(|e| e.line);
            return Err(CliError::config(line, Some("name"), "must be non-empty without path separators"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(s) = o.seed {
            self.problem.seed = s;
        }
        if let Some(t) = o.tol {
            self.tol = t;
        }
        if let Some(r) = o.restart {
            self.restart = r;
        }
        if let Some(t) = o.t_max {
            self.t_max = t;
        }
        if let Some(b) = o.leaf {
            self.leaf = b;
        }
        self.validate()
    }

    fn validate(&self) -> CliResult<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::config(None, Some("tol"), "must lie in (0, 1)"));
        }
        if self.restart == 0 {
            return Err(CliError::config(None, Some("restart"), "must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(CliError::config(None, Some("max_iter"), "must be at least 1"));
        }
        if self.shifts == 0 {
            return Err(CliError::config(None, Some("shifts"), "must be at least 1"));
        }
        if self.t_max == 0 {
            return Err(CliError::config(None, Some("t_max"), "must be at least 1"));
        }
        self.problem.grid()?;
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            shift_count: Some(self.shifts),
            t_max: self.t_max,
            spacing: self.leaf,
            gmres: GmresConfig {
                tol: self.tol,
                restart: self.restart,
                max_iter: self.max_iter,
                check_orthogonality: false,
            },
        }
    }

    /// Config text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let p = &self.problem;
        let f = &p.params;
        let mut s = String::new();
        let _ = writeln!(s, "equation = {}", p.equation);
        let _ = writeln!(s, "field = {}", p.field);
        let _ = writeln!(s, "d = {}", p.d);
        let _ = writeln!(s, "n = {}", p.n);
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "omega = {:?}", p.omega);
        let _ = writeln!(s, "energy = {:?}", p.energy);
        let _ = writeln!(s, "seed = {}", p.seed);
        let _ = writeln!(s, "shifts = {}", self.shifts);
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "leaf = {}", self.leaf);
        let _ = writeln!(s, "tol = {:?}", self.tol);
        let _ = writeln!(s, "restart = {}", self.restart);
        let _ = writeln!(s, "max_iter = {}", self.max_iter);
        let _ = writeln!(s, "write_solution = {}", self.write_solution);
        let _ = writeln!(s, "write_potential = {}", self.write_potential);
        let _ = writeln!(s, "bump_amplitude = {:?}", f.bump_amplitude);
        let _ = writeln!(s, "bump_width = {:?}", f.bump_width);
        let _ = writeln!(s, "cross_speed = {:?}", f.cross_speed);
        let _ = writeln!(s, "cross_half_width = {:?}", f.cross_half_width);
        let _ = writeln!(s, "well_amplitude = {:?}", f.well_amplitude);
        let _ = writeln!(s, "well_sigma = {:?}", f.well_sigma);
        let _ = writeln!(s, "lattice_period = {}", f.lattice_period);
        s
    }
}

fn default_name(p: &ProblemConfig) -> String {
    format!("{}_{}_{}d_{}", p.equation, p.field, p.d, p.n)
}
