//! Potentials and sources for the benchmark problems.
//!
//! Helmholtz: `v = -(omega / c(x))^2` on the unit torus.
//! Schrodinger: `v = n^2 (v_ext(x / h) - E)` with `v_ext` a sum of Gaussians
//! placed in grid units.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equation {
    Helmholtz,
    Schrodinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    GaussianBump,
    Cross,
    RandomGaussians,
    LatticeVacancy,
}

impl FieldKind {
    pub fn equation(self) -> Equation {
        match self {
            FieldKind::GaussianBump | FieldKind::Cross => Equation::Helmholtz,
            FieldKind::RandomGaussians | FieldKind::LatticeVacancy => Equation::Schrodinger,
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Helmholtz => "helmholtz",
            Equation::Schrodinger => "schrodinger",
        })
    }
}

impl FromStr for Equation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "helmholtz" => Ok(Equation::Helmholtz),
            "schrodinger" => Ok(Equation::Schrodinger),
            _ => Err(Error::InvalidProblem(format!("unknown equation `{s}`"))),
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::GaussianBump => "gaussian_bump",
            FieldKind::Cross => "cross",
            FieldKind::RandomGaussians => "random_gaussians",
            FieldKind::LatticeVacancy => "lattice_vacancy",
        })
    }
}

impl FromStr for FieldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_bump" => Ok(FieldKind::GaussianBump),
            "cross" => Ok(FieldKind::Cross),
            "random_gaussians" => Ok(FieldKind::RandomGaussians),
            "lattice_vacancy" => Ok(FieldKind::LatticeVacancy),
            _ => Err(Error::InvalidProblem(format!("unknown field kind `{s}`"))),
        }
    }
}

/// Shape parameters of the generated fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    /// Relative height of the velocity bump.
    pub bump_amplitude: f64,
    pub bump_width: f64,
    /// Velocity inside the cross arms.
    pub cross_speed: f64,
    pub cross_half_width: f64,
    /// Peak of each Gaussian well in `v_ext`.
    pub well_amplitude: f64,
    /// Well width in grid units.
    pub well_sigma: f64,
    /// Lattice period in grid units.
    pub lattice_period: usize,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            bump_amplitude: 0.25,
            bump_width: 0.1,
            cross_speed: 1.25,
            cross_half_width: 0.125,
            well_amplitude: 1.0,
            well_sigma: 2.0,
            lattice_period: 8,
        }
    }
}

pub const DEFAULT_ENERGY: f64 = 2.4;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub equation: Equation,
    pub d: usize,
    pub n: usize,
    pub field: FieldKind,
    pub omega: f64,
    pub energy: f64,
    pub seed: u64,
    pub params: FieldParams,
}

impl ProblemConfig {
    /// Standard setup: four points per wavelength for Helmholtz, `E = 2.4`.
    pub fn preset(field: FieldKind, d: usize, n: usize) -> Self {
        Self {
            equation: field.equation(),
            d,
            n,
            field,
            omega: preset_omega(n),
            energy: DEFAULT_ENERGY,
            seed: 0,
            params: FieldParams::default(),
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.d, self.n)
    }

    pub fn potential(&self) -> Result<RealField> {
        if self.field.equation() != self.equation {
            return Err(Error::InvalidProblem(format!(
                "field `{}` does not belong to equation `{}`",
                self.field, self.equation
            )));
        }
        match self.equation {
            Equation::Helmholtz => helmholtz_field(self),
            Equation::Schrodinger => schrodinger_field(self),
        }
    }
}

/// `omega = 2 pi n / 4`.
pub fn preset_omega(n: usize) -> f64 {
    2.0 * PI * n as f64 / 4.0
}

fn sq_dist_to_center(x: &[f64; MAX_DIM], d: usize) -> f64 {
    x[..d].iter().map(|xi| (xi - 0.5).powi(2)).sum()
}

/// Wave speed `c(x)` of a Helmholtz configuration.
pub fn wave_speed(cfg: &ProblemConfig) -> Result<RealField> {
    let grid = cfg.grid()?;
    let d = grid.dim();
    let p = cfg.params;
    let field = match cfg.field {
        FieldKind::GaussianBump => RealField::from_fn(grid, |j| {
            let r2 = sq_dist_to_center(&grid.position(j), d);
            1.0 + p.bump_amplitude * (-r2 / (2.0 * p.bump_width * p.bump_width)).exp()
        }),
        FieldKind::Cross => RealField::from_fn(grid, |j| {
            let x = grid.position(j);
            let near: Vec<bool> = x[..d].iter().map(|xi| (xi - 0.5).abs() <= p.cross_half_width).collect();
            // An arm runs along axis k where every other coordinate is near the center.
            let in_arm = (0..d).any(|k| (0..d).filter(|&l| l != k).all(|l| near[l]));
            if in_arm {
                p.cross_speed
            } else {
                1.0
            }
        }),
        other => {
            return Err(Error::InvalidProblem(format!("`{other}` is not a Helmholtz field")));
        }
    };
    Ok(field)
}

pub fn helmholtz_field(cfg: &ProblemConfig) -> Result<RealField> {
    if !(cfg.omega.is_finite() && cfg.omega > 0.0) {
        return Err(Error::InvalidProblem(format!("omega must be positive, got {}", cfg.omega)));
    }
    let c = wave_speed(cfg)?;
    let values = c.values().iter().map(|&ci| -(cfg.omega / ci).powi(2)).collect();
    RealField::new(c.grid(), values)
}

/// Well centers in grid coordinates.
pub fn well_centers(cfg: &ProblemConfig) -> Result<Vec<[usize; MAX_DIM]>> {
    let grid = cfg.grid()?;
    let d = grid.dim();
    let n = grid.n();
    let period = cfg.params.lattice_period;
    if period == 0 || n % period != 0 {
        return Err(Error::InvalidProblem(format!(
            "lattice period {period} must divide n = {n}"
        )));
    }
    let per_dim = n / period;
    let count = per_dim.pow(d as u32);
    let mut out = Vec::with_capacity(count);
    match cfg.field {
        FieldKind::RandomGaussians => {
            // Uniform draws, rejecting centers closer than two widths to an
            // earlier one so that stacked wells stay below the energy.
            let min_sep2 = (2.0 * cfg.params.well_sigma).powi(2);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut attempts = 0usize;
            while out.len() < count {
                attempts += 1;
                if attempts > 1000 * count {
                    return Err(Error::InvalidProblem(format!(
                        "could not place {count} separated wells on n = {n}"
                    )));
                }
                let mut c = [0; MAX_DIM];
                for ck in c.iter_mut().take(d) {
                    *ck = rng.gen_range(0..n);
                }
                let clear = out.iter().all(|o: &[usize; MAX_DIM]| {
                    let r2: usize = (0..d)
                        .map(|k| {
                            let a = c[k].abs_diff(o[k]);
                            a.min(n - a).pow(2)
                        })
                        .sum();
                    r2 as f64 >= min_sep2
                });
                if clear {
                    out.push(c);
                }
            }
        }
        FieldKind::LatticeVacancy => {
            // Two sites straddle n/2 at equal distance; the lower one is removed.
            let half = period / 2;
            let vacancy = n / 2 - half;
            for i in 0..count {
                let mut c = [0; MAX_DIM];
                let mut rest = i;
                for k in (0..d).rev() {
                    c[k] = (rest % per_dim) * period + half;
                    rest /= per_dim;
                }
                if c[..d].iter().all(|&ck| ck == vacancy) {
                    continue;
                }
                out.push(c);
            }
        }
        other => {
            return Err(Error::InvalidProblem(format!("`{other}` is not a Schrodinger field")));
        }
    }
    Ok(out)
}

/// External potential `v_ext` sampled at integer grid coordinates.
pub fn external_potential(cfg: &ProblemConfig) -> Result<RealField> {
    let grid = cfg.grid()?;
    let d = grid.dim();
    let n = grid.n() as isize;
    let p = cfg.params;
    if !(p.well_sigma > 0.0) {
        return Err(Error::InvalidProblem("well width must be positive".into()));
    }
    let centers = well_centers(cfg)?;
    let mut v = vec![0.0; grid.len()];
    // Contributions beyond ten widths are below 1e-21 and skipped.
    let reach = (10.0 * p.well_sigma).ceil() as isize;
    // Walk one period at most so every point sees its nearest image once.
    let (lo, hi) = if 2 * reach < n { (-reach, reach) } else { (-(n / 2), n / 2 - 1) };
    let inv = 1.0 / (2.0 * p.well_sigma * p.well_sigma);
    let strides = grid.strides();
    for c in &centers {
        let mut offset = [0isize; MAX_DIM];
        offset[..d].fill(lo);
        'walk: loop {
            let r2: f64 = offset[..d].iter().map(|&o| (o * o) as f64).sum();
            let mut idx = 0;
            for k in 0..d {
                idx += (c[k] as isize + offset[k]).rem_euclid(n) as usize * strides[k];
            }
            v[idx] += p.well_amplitude * (-r2 * inv).exp();
            for k in (0..d).rev() {
                if offset[k] < hi {
                    offset[k] += 1;
                    continue 'walk;
                }
                offset[k] = lo;
            }
            break;
        }
    }
    RealField::new(grid, v)
}

pub fn schrodinger_field(cfg: &ProblemConfig) -> Result<RealField> {
    let v_ext = external_potential(cfg)?;
    let peak = v_ext.max();
    if peak >= cfg.energy {
        return Err(Error::InvalidProblem(format!(
            "external potential peak {peak:.4} reaches the energy {}",
            cfg.energy
        )));
    }
    let n2 = (cfg.n * cfg.n) as f64;
    let values = v_ext.values().iter().map(|&x| n2 * (x - cfg.energy)).collect();
    RealField::new(v_ext.grid(), values)
}

/// Gaussian source of width `2h` at the domain center, unit peak.
pub fn gaussian_rhs(grid: GridSpec) -> RealField {
    let d = grid.dim();
    let w = 2.0 * grid.h();
    let raw = RealField::from_fn(grid, |j| {
        let r2 = sq_dist_to_center(&grid.position(j), d);
        (-r2 / (2.0 * w * w)).exp()
    });
    let peak = raw.max();
    RealField::from_fn(grid, |j| raw[j] / peak)
}
