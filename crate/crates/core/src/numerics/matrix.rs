use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Default relative eigenvalue threshold for rank and pseudo-inverse.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

/// Dense symmetric matrix. Symmetry is enforced on construction by
/// averaging with the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let t = m.transpose();
        Ok(SymMatrix((m + t) * 0.5))
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows of a symmetric matrix must have equal length".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Direct sum of the given blocks.
    pub fn block_diagonal(blocks: &[SymMatrix]) -> Self {
        let dim = blocks.iter().map(SymMatrix::dim).sum();
        let mut out = DMatrix::zeros(dim, dim);
        let mut offset = 0;
        for b in blocks {
            let d = b.dim();
            out.view_mut((offset, offset), (d, d)).copy_from(&b.0);
            offset += d;
        }
        SymMatrix(out)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymMatrix(&self.0 * factor)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// `H A H^T` for an `r x dim` matrix `H`.
    pub fn congruence(&self, h: &DMatrix<f64>) -> Result<SymMatrix> {
        if h.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "cannot form H A H^T with H of width {} and A of dimension {}",
                h.ncols(),
                self.dim()
            )));
        }
        SymMatrix::new(h * &self.0 * h.transpose())
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.0)
    }

    fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.0.clone())
    }

    fn threshold(eigenvalues: &DVector<f64>, tol: f64) -> f64 {
        let max_abs = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        tol * max_abs
    }

    fn recompose(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> SymMatrix {
        let q = &eig.eigenvectors;
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
        SymMatrix(q * d * q.transpose()).symmetrized()
    }

    fn symmetrized(self) -> SymMatrix {
        let t = self.0.transpose();
        SymMatrix((self.0 + t) * 0.5)
    }

    /// Moore-Penrose inverse. Eigenvalues with `|λ| <= tol * max|λ|` are
    /// treated as zero.
    pub fn pseudo_inverse(&self, tol: f64) -> SymMatrix {
        if self.dim() == 0 {
            return self.clone();
        }
        let eig = self.eigen();
        let cut = Self::threshold(&eig.eigenvalues, tol);
        Self::recompose(&eig, |l| if l.abs() <= cut || l == 0.0 { 0.0 } else { 1.0 / l })
    }

    pub fn numeric_rank(&self, tol: f64) -> usize {
        if self.dim() == 0 {
            return 0;
        }
        let eig = self.eigen();
        let cut = Self::threshold(&eig.eigenvalues, tol);
        eig.eigenvalues.iter().filter(|l| l.abs() > cut).count()
    }

    /// Pseudo-inverse and numeric rank from a single decomposition.
    pub fn pseudo_inverse_with_rank(&self, tol: f64) -> (SymMatrix, usize) {
        if self.dim() == 0 {
            return (self.clone(), 0);
        }
        let eig = self.eigen();
        let cut = Self::threshold(&eig.eigenvalues, tol);
        let rank = eig.eigenvalues.iter().filter(|l| l.abs() > cut).count();
        let pinv = Self::recompose(&eig, |l| if l.abs() <= cut || l == 0.0 { 0.0 } else { 1.0 / l });
        (pinv, rank)
    }

    /// Symmetric PSD square root. Eigenvalues down to `-tol * max|λ|` are
    /// clamped to zero; anything more negative is an error.
    pub fn psd_sqrt(&self, tol: f64) -> Result<SymMatrix> {
        if self.dim() == 0 {
            return Ok(self.clone());
        }
        let eig = self.eigen();
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < -tol * scale) {
            return Err(Error::NotPsd {
                eigenvalue: bad,
                scale,
            });
        }
        Ok(Self::recompose(&eig, |l| l.max(0.0).sqrt()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut v: Vec<f64> = self.eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

pub fn pseudo_inverse(a: &SymMatrix, tol: f64) -> SymMatrix {
    a.pseudo_inverse(tol)
}

pub fn numeric_rank(a: &SymMatrix, tol: f64) -> usize {
    a.numeric_rank(tol)
}

pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    a.psd_sqrt(DEFAULT_EIGEN_TOL)
}

/// Maximum absolute row sum.
pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
