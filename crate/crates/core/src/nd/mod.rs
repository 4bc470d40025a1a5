//! Nested-dissection geometry, ordering, and sparse LU.

pub mod dense;
pub mod factor;
pub mod geometry;
pub mod ordering;

pub use factor::{factorize, Factorization};
pub use geometry::{classify, crosses_separator, t_assignment, NdGeometry, PointKind};
pub use ordering::{nd_ordering, EliminationPlan, NdNode};
