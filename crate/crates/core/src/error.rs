use thiserror::Error;

/// Errors raised while building or applying the solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid size n = {0} must be even and at least 4")]
    InvalidGridSize(usize),

    #[error("grid size n = {0} must be a power of two")]
    NonPowerOfTwo(usize),

    #[error("dimension d = {0} is outside 1..=3")]
    InvalidDimension(usize),

    #[error("array length {found} does not match grid size {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shift {shift} is resonant: |4 pi^2 |k|^2 + s| = {gap:e} at |k|^2 = {k2}")]
    ResonantShift { shift: f64, k2: usize, gap: f64 },

    #[error("stencil radius t = {t} is too large for n = {n} (need 2t+1 < n)")]
    RadiusTooLarge { t: usize, n: usize },

    #[error("invalid separator spacing B = {spacing} for n = {n}: {reason}")]
    InvalidSpacing {
        spacing: usize,
        n: usize,
        reason: &'static str,
    },

    #[error("no stencil for shift index {shift_index} and radius {t}")]
    MissingStencil { shift_index: usize, t: usize },

    #[error("sparsity pattern violates the dissection structure at point {point}")]
    StructuralViolation { point: usize },

    #[error("matrix is numerically singular: pivot {pivot:e} at elimination step {step}")]
    SingularPivot { step: usize, pivot: f64 },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
