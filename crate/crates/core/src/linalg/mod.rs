//! Dense and sparse linear algebra used by the discretisation.

mod dense;
mod solver;
mod sparse;

pub use dense::DenseMatrix;
pub use solver::{solve, Ilu0, SolveStats, SolverConfig, SolverError};
pub use sparse::{CsrMatrix, SparsityPattern};
