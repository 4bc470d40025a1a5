//! Sparsifying preconditioner for pseudospectral discretizations of
//! `(-Laplace + v) u = f` on the periodic unit cube.

pub mod assembly;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod nd;
pub mod precond;
pub mod problems;
pub mod solver;
pub mod sparse;
pub mod spectral;
pub mod stencil;

pub use error::{Error, Result};
pub use grid::{make_grid, GridSpec, RealField};
pub use krylov::{gmres, GmresConfig, LinearOperator, SolveReport, StageTimings};
pub use problems::{gaussian_rhs, Equation, FieldKind, ProblemConfig};
pub use solver::{setup, solve, Setup, SolverConfig};
