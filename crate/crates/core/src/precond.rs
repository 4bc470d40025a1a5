//! The sparsifying preconditioner `M = P^{-1} C`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::assembly::SparseSystem;
use crate::error::{Error, Result};
use crate::krylov::LinearOperator;
use crate::nd::Factorization;

pub struct SparsifyingPreconditioner<'a> {
    sys: &'a SparseSystem,
    factors: &'a Factorization,
    solve_nanos: AtomicU64,
    applications: AtomicU64,
}

pub fn make_preconditioner<'a>(
    sys: &'a SparseSystem,
    factors: &'a Factorization,
) -> Result<SparsifyingPreconditioner<'a>> {
    if factors.dim() != sys.p.nrows() {
        return Err(Error::DimensionMismatch {
            expected: sys.p.nrows(),
            found: factors.dim(),
        });
    }
    Ok(SparsifyingPreconditioner {
        sys,
        factors,
        solve_nanos: AtomicU64::new(0),
        applications: AtomicU64::new(0),
    })
}

impl SparsifyingPreconditioner<'_> {
    /// Cumulative time spent in the sparse solve.
    pub fn solve_time(&self) -> Duration {
        Duration::from_nanos(self.solve_nanos.load(Ordering::Relaxed))
    }

    pub fn applications(&self) -> u64 {
        self.applications.load(Ordering::Relaxed)
    }
}

impl LinearOperator for SparsifyingPreconditioner<'_> {
    fn dim(&self) -> usize {
        self.sys.c.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.sys.c.matvec(x, y);
        let start = Instant::now();
        self.factors.solve_in_place(y);
        self.solve_nanos
            .fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
        self.applications.fetch_add(1, Ordering::Relaxed);
    }
}
