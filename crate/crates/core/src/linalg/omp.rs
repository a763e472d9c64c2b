//! Orthogonal matching pursuit with a fixed-sparsity stopping rule.
//!
//! Each iteration picks the column with the largest (optionally
//! column-normalized) correlation with the current residual, then re-fits
//! every coefficient on the support by least squares. The support basis is
//! kept as an incrementally grown orthonormal set (modified Gram-Schmidt with
//! one re-orthogonalization pass), so the fit is a triangular solve rather
//! than a normal-equation solve.

use num_complex::Complex64;

use super::cholesky::cholesky_with_tol;
use super::matrix::{dot, norm, CMatrix, CVector};
use super::{LinalgError, DEFAULT_OMP_RANK_TOL, DEFAULT_OMP_RESIDUAL_TOL};

/// How the selection step scores candidate columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correlation {
    /// `|⟨a_j, r⟩| / ‖a_j‖₂`.
    #[default]
    Normalized,
    /// `|⟨a_j, r⟩|`.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpOptions {
    pub correlation: Correlation,
    /// Stop once `‖r‖₂ ≤ residual_tol · ‖y‖₂`.
    pub residual_tol: f64,
    /// A selected column whose component orthogonal to the current support is
    /// below `rank_tol · ‖a_j‖₂` is treated as linearly dependent.
    pub rank_tol: f64,
}

impl Default for OmpOptions {
    fn default() -> Self {
        Self {
            correlation: Correlation::Normalized,
            residual_tol: DEFAULT_OMP_RESIDUAL_TOL,
            rank_tol: DEFAULT_OMP_RANK_TOL,
        }
    }
}

/// Output of [`omp`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    /// Selected column indices, in selection order.
    pub support: Vec<usize>,
    /// Coefficients aligned with `support`.
    pub values: CVector,
    /// `‖y − A x‖₂` before the first iteration and after each one.
    pub residual_norm_history: Vec<f64>,
    /// Set when the support columns were linearly dependent and the
    /// minimum-norm least-squares fit was used.
    pub rank_deficient: bool,
    dim: usize,
}

impl SparseSolution {
    /// Scatters the coefficients into a length-`N` vector.
    pub fn to_dense(&self) -> CVector {
        let mut x = vec![Complex64::new(0.0, 0.0); self.dim];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            x[j] = v;
        }
        x
    }

    pub fn final_residual_norm(&self) -> f64 {
        *self.residual_norm_history.last().unwrap_or(&0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn omp(a: &CMatrix, y: &[Complex64], k: usize) -> Result<SparseSolution, LinalgError> {
    omp_with(a, y, k, &OmpOptions::default())
}

pub fn omp_with(
    a: &CMatrix,
    y: &[Complex64],
    k: usize,
    opts: &OmpOptions,
) -> Result<SparseSolution, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(LinalgError::DimensionMismatch {
            expected: m,
            found: y.len(),
        });
    }
    if k == 0 || k > n {
        return Err(LinalgError::InvalidSparsity { k, n });
    }

    let columns: Vec<CVector> = (0..n).map(|j| a.column(j)).collect();
    let col_norms: Vec<f64> = columns.iter().map(|c| norm(c)).collect();
    let y_norm = norm(y);
    let stop_below = opts.residual_tol * y_norm;

    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut in_support = vec![false; n];
    let mut basis = Basis::new(m);
    let mut values: CVector = Vec::new();
    let mut residual: CVector = y.to_vec();
    let mut history = vec![y_norm];
    let mut rank_deficient = false;

    while support.len() < k && *history.last().unwrap() > stop_below {
        let Some((best, score)) = select_column(
            &columns,
            &col_norms,
            &in_support,
            &residual,
            opts.correlation,
        ) else {
            break;
        };
        // Residual is orthogonal to every remaining column: nothing more to explain.
        let normalized = match opts.correlation {
            Correlation::Normalized => score,
            Correlation::Raw => score / col_norms[best],
        };
        if normalized <= stop_below {
            break;
        }

        in_support[best] = true;
        support.push(best);
        if !basis.push(&columns[best], col_norms[best], opts.rank_tol) {
            rank_deficient = true;
        }
        values = basis.solve(y, opts.rank_tol)?;

        residual = y.to_vec();
        for (&j, v) in support.iter().zip(&values) {
            for (r, col) in residual.iter_mut().zip(&columns[j]) {
                *r -= col * v;
            }
        }
        history.push(norm(&residual));
    }

    Ok(SparseSolution {
        support,
        values,
        residual_norm_history: history,
        rank_deficient,
        dim: n,
    })
}

fn select_column(
    columns: &[CVector],
    col_norms: &[f64],
    in_support: &[bool],
    residual: &[Complex64],
    correlation: Correlation,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, col) in columns.iter().enumerate() {
        if in_support[j] || col_norms[j] == 0.0 {
            continue;
        }
        let raw = dot(col, residual).norm();
        let score = match correlation {
            Correlation::Normalized => raw / col_norms[j],
            Correlation::Raw => raw,
        };
        // strict comparison keeps the lowest index on ties
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((j, score));
        }
    }
    best
}

/// Orthonormal basis `Q` of the support span plus the coefficient matrix
/// `C = Q^† A_S` (one column per support entry).
struct Basis {
    m: usize,
    q: Vec<CVector>,
    coef_cols: Vec<CVector>,
}

impl Basis {
    fn new(m: usize) -> Self {
        Self {
            m,
            q: Vec::new(),
            coef_cols: Vec::new(),
        }
    }

    /// Appends a support column. Returns `false` if it was dependent on the
    /// existing span.
    fn push(&mut self, col: &[Complex64], col_norm: f64, rank_tol: f64) -> bool {
        let mut v = col.to_vec();
        let mut coefs = vec![Complex64::new(0.0, 0.0); self.q.len()];
        for _pass in 0..2 {
            for (c, q) in coefs.iter_mut().zip(&self.q) {
                let p = dot(q, &v);
                *c += p;
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= qi * p;
                }
            }
        }
        let v_norm = norm(&v);
        let independent = v_norm > rank_tol * col_norm && self.q.len() < self.m;
        if independent {
            let q: CVector = v.iter().map(|x| x / v_norm).collect();
            self.q.push(q);
            for c in &mut self.coef_cols {
                c.push(Complex64::new(0.0, 0.0));
            }
            coefs.push(Complex64::new(v_norm, 0.0));
        } else {
            coefs.resize(self.q.len(), Complex64::new(0.0, 0.0));
        }
        self.coef_cols.push(coefs);
        independent
    }

    /// Least-squares coefficients for `y` on the support.
    fn solve(&self, y: &[Complex64], rank_tol: f64) -> Result<CVector, LinalgError> {
        let r = self.q.len();
        let k = self.coef_cols.len();
        let d: CVector = self.q.iter().map(|q| dot(q, y)).collect();
        let c = |i: usize, j: usize| self.coef_cols[j][i];

        if r == k {
            // C is upper triangular with positive real diagonal
            let mut x = d;
            for i in (0..k).rev() {
                let mut s = x[i];
                for j in (i + 1)..k {
                    s -= c(i, j) * x[j];
                }
                x[i] = s / c(i, i);
            }
            return Ok(x);
        }

        // Rank-deficient: x = C^† (C C^†)^{-1} d, the minimum-norm solution of C x = d.
        let gram = CMatrix::from_fn(r, r, |i, l| (0..k).map(|j| c(i, j) * c(l, j).conj()).sum());
        let z = cholesky_with_tol(&gram, rank_tol.max(1e-10))?.solve(&d)?;
        Ok((0..k)
            .map(|j| (0..r).map(|i| c(i, j).conj() * z[i]).sum())
            .collect())
    }
}
