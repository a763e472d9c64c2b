//! Complex dense linear algebra for relay selection.

mod cholesky;
mod matrix;
mod omp;

pub use cholesky::{cholesky, cholesky_with_tol, solve_hermitian, CholeskyFactor};
pub use matrix::{dot, norm, norm_sqr, quad_form, sub_vec, CMatrix, CVector};
pub use omp::{omp, omp_with, Correlation, OmpOptions, SparseSolution};

/// Relative Frobenius tolerance for accepting a matrix as Hermitian.
pub const DEFAULT_HERMITIAN_TOL: f64 = 1e-10;
/// OMP stops once the residual falls below this fraction of `‖y‖₂`.
pub const DEFAULT_OMP_RESIDUAL_TOL: f64 = 1e-12;
/// Relative threshold for declaring an OMP support column dependent.
pub const DEFAULT_OMP_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (relative defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("sparsity {k} out of range 1..={n}")]
    InvalidSparsity { k: usize, n: usize },
}
