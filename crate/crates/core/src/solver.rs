//! End-to-end pipeline: shifts, stencils, sparse surrogate, factorization,
//! and preconditioned GMRES on the pseudospectral operator.

use std::time::{Duration, Instant};

use crate::assembly::{assemble_sparse_system, SparseSystem};
use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::krylov::{gmres, GmresConfig, LinearOperator, SolveReport};
use crate::nd::{factorize, nd_ordering, t_assignment, EliminationPlan, Factorization};
use crate::precond::{make_preconditioner, SparsifyingPreconditioner};
use crate::spectral::SpectralOperator;
use crate::stencil::{assign_shifts, build_shift_list, build_stencil_table, ShiftList, StencilTable};

impl LinearOperator for SpectralOperator {
    fn dim(&self) -> usize {
        SpectralOperator::dim(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Number of shift targets `|S|`; `None` picks the size-dependent preset.
    pub shift_count: Option<usize>,
    pub t_max: usize,
    /// Separator spacing `B`.
    pub spacing: usize,
    pub gmres: GmresConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            shift_count: None,
            t_max: 2,
            spacing: 8,
            gmres: GmresConfig::default(),
        }
    }
}

/// `max(4, n/16)` in 2D, `max(4, n/4)` in 3D, 4 otherwise.
pub fn default_shift_count(d: usize, n: usize) -> usize {
    match d {
        2 => (n / 16).max(4),
        3 => (n / 4).max(4),
        _ => 4,
    }
}

/// Everything needed to apply the preconditioner for one potential.
pub struct Setup {
    pub shifts: ShiftList,
    pub table: StencilTable,
    pub system: SparseSystem,
    pub plan: EliminationPlan,
    pub factors: Factorization,
    pub stencil_time: Duration,
    /// Assembly, ordering and factorization.
    pub nd_setup_time: Duration,
}

pub fn setup(v: &RealField, cfg: &SolverConfig) -> Result<Setup> {
    let grid = v.grid();
    let count = cfg
        .shift_count
        .unwrap_or_else(|| default_shift_count(grid.dim(), grid.n()));

    let start = Instant::now();
    let shifts = build_shift_list(v, count)?;
    let table = build_stencil_table(grid, &shifts, cfg.t_max)?;
    let stencil_time = start.elapsed();

    let start = Instant::now();
    let t_map = t_assignment(grid, cfg.spacing, cfg.t_max)?;
    let shift_index = assign_shifts(v, &shifts);
    let system = assemble_sparse_system(grid, v, &table, &t_map, &shift_index)?;
    let plan = nd_ordering(grid, cfg.spacing)?;
    let factors = factorize(&system.p, &plan)?;
    let nd_setup_time = start.elapsed();

    Ok(Setup {
        shifts,
        table,
        system,
        plan,
        factors,
        stencil_time,
        nd_setup_time,
    })
}

impl Setup {
    pub fn preconditioner(&self) -> Result<SparsifyingPreconditioner<'_>> {
        make_preconditioner(&self.system, &self.factors)
    }
}

/// Solve `(L + diag(v)) u = f`.
pub fn solve(v: &RealField, f: &RealField, cfg: &SolverConfig) -> Result<(RealField, SolveReport)> {
    if v.grid() != f.grid() {
        return Err(Error::DimensionMismatch {
            expected: v.grid().len(),
            found: f.grid().len(),
        });
    }
    let prepared = setup(v, cfg)?;
    let op = SpectralOperator::new(v);
    let m = prepared.preconditioner()?;
    let start = Instant::now();
    let (u, mut report) = gmres(&op, &m, f.values(), &cfg.gmres)?;
    report.timings.gmres = start.elapsed();
    report.timings.stencil = prepared.stencil_time;
    report.timings.nd_setup = prepared.nd_setup_time;
    report.timings.nd_solve = m.solve_time();
    Ok((RealField::new(v.grid(), u)?, report))
}
