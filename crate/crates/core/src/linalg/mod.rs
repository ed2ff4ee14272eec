//! Sparse and dense kernels with MAC and memory instrumentation.

mod banded;
mod dense;
mod ledger;
mod sparse;
pub mod vector;

pub use banded::BandedCholesky;
pub use dense::{cholesky, dense_qr, solve_dense, DenseMatrix, LuFactors, PIVOT_TOL};
pub use ledger::OpLedger;
pub use sparse::SparseMatrix;
pub use vector::{axpy, dot, norm2, scale};
