//! Dense and sparse linear algebra, pivoted Cholesky and low-rank tensor solves.

pub mod cholesky;
pub mod correlation;
pub mod dense;
pub mod lowrank;
pub mod sparse;

pub use cholesky::{pivoted_cholesky, LowRankFactor};
pub use correlation::CorrelationKernel;
pub use dense::{dense_solve, ComplexMatrix, DenseLu};
pub use lowrank::{kron, tensor_solve, vec_of, ColumnSolver};
pub use sparse::{CsrMatrix, SpdFactor};
