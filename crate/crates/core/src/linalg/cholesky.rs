use num_complex::Complex64;

use super::matrix::{CMatrix, CVector};
use super::{LinalgError, DEFAULT_HERMITIAN_TOL};

/// Lower-triangular Cholesky factor `L` with `L L^† = R`.
///
/// The diagonal is real and strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    l: CMatrix,
}

impl CholeskyFactor {
    pub fn matrix(&self) -> &CMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// `L L^†`.
    pub fn reconstruct(&self) -> CMatrix {
        self.l.mul_mat(&self.l.adjoint())
    }

    /// Solves `L x = b` by forward substitution.
    pub fn solve_lower(&self, b: &[Complex64]) -> Result<CVector, LinalgError> {
        let n = self.dim();
        check_len(n, b.len())?;
        let mut x: CVector = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        Ok(x)
    }

    /// Solves `L^† x = b` by back substitution.
    pub fn solve_upper_adjoint(&self, b: &[Complex64]) -> Result<CVector, LinalgError> {
        let n = self.dim();
        check_len(n, b.len())?;
        let mut x: CVector = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                // (L^†)[i][k] = conj(L[k][i])
                s -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        Ok(x)
    }

    /// Solves `R x = b` with `R = L L^†`.
    pub fn solve(&self, b: &[Complex64]) -> Result<CVector, LinalgError> {
        let y = self.solve_lower(b)?;
        self.solve_upper_adjoint(&y)
    }

    /// `L^† x`.
    pub fn adjoint_mul_vec(&self, x: &[Complex64]) -> CVector {
        self.l.adjoint_mul_vec(x)
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected != found {
        return Err(LinalgError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Dense, unpivoted Cholesky factorization of a Hermitian positive-definite matrix.
pub fn cholesky(r: &CMatrix) -> Result<CholeskyFactor, LinalgError> {
    cholesky_with_tol(r, DEFAULT_HERMITIAN_TOL)
}

/// As [`cholesky`], with an explicit Hermitian-symmetry tolerance (relative, Frobenius).
pub fn cholesky_with_tol(r: &CMatrix, hermitian_tol: f64) -> Result<CholeskyFactor, LinalgError> {
    if !r.is_square() {
        return Err(LinalgError::NotSquare {
            rows: r.rows(),
            cols: r.cols(),
        });
    }
    let defect = r.hermitian_defect();
    if defect > hermitian_tol {
        return Err(LinalgError::NotHermitian { defect });
    }

    let n = r.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = r[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = r[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(CholeskyFactor { l })
}

/// Solves `R x = b` for Hermitian positive-definite `R` through its Cholesky factor.
pub fn solve_hermitian(r: &CMatrix, b: &[Complex64]) -> Result<CVector, LinalgError> {
    cholesky(r)?.solve(b)
}
