//! Sparse matrix storage, fill-reducing ordering, symbolic analysis and
//! numeric LDLᵀ factorization.
//!
//! All types are immutable after construction; a factorization owns its
//! workspace, so independent factorizations can run concurrently.

mod csc;
mod factor;
mod ordering;
mod symbolic;

pub use csc::{CscMatrix, SparseError, Triplets, DROP_TOLERANCE};
pub use factor::{cholesky_solve, ldlt_solve, LdltFactor, PivotRule, Regularization};
pub use ordering::{amd_ordering, Permutation};
pub use symbolic::{symbolic_cholesky, SymbolicFactor};
