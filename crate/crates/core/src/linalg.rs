//! Dense complex Hermitian linear algebra.
//!
//! Everything downstream (square roots, support pseudo-inverses, Schatten
//! norms) goes through a single ascending-order eigendecomposition. Spectral
//! functions treat eigenvalues at or below `cutoff * lambda_max` as zero, so
//! "on the support" always means the span of the eigenvectors above that
//! threshold.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative eigenvalue cutoff defining the support of a PSD matrix.
pub const SUPPORT_CUTOFF: f64 = 1e-12;
/// Hermiticity tolerance, relative to the Frobenius norm of the input.
pub const TOL_HERM: f64 = 1e-10;
/// Orthonormality tolerance for eigenvector columns.
pub const TOL_ORTH: f64 = 1e-10;
/// Reconstruction tolerance, relative to the Frobenius norm of the input.
pub const TOL_RECON: f64 = 1e-9;

pub(crate) fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Largest entrywise deviation `|m[i,j] - conj(m[j,i])|`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// A square complex matrix equal to its conjugate transpose.
///
/// Construction symmetrizes the input, `(M + M^†)/2`, after checking the
/// deviation is within [`TOL_HERM`]; the stored matrix is exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, TOL_HERM)
    }

    /// Checks Hermiticity against `tol * max(1, ||m||_F)`.
    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let deviation = hermiticity_deviation(&m);
        if deviation > tol * m.norm().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without checking. For matrices Hermitian by construction.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self {
            inner: (m + adj).scale(0.5),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| c64(x, 0.0)));
        Self {
            inner: CMatrix::from_diagonal(&v),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner
    }

    pub fn trace_re(&self) -> f64 {
        self.inner.trace().re
    }
}

impl AsRef<CMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.inner
    }
}

/// Eigendecomposition `H = V diag(values) V^†` with eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Eigenvalue threshold below which a value counts as zero.
    pub fn support_threshold(&self, cutoff: f64) -> f64 {
        cutoff * self.lambda_max().max(0.0)
    }

    pub fn support_rank(&self, cutoff: f64) -> usize {
        let thr = self.support_threshold(cutoff);
        self.values.iter().filter(|&&v| v > thr).count()
    }

    /// `V diag(f(values)) V^†`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let d = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for i in 0..d {
                scaled[(i, j)] *= fv;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|v| v)
    }

    /// Max entrywise deviation of `V^† V` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.dim();
        let gram = self.vectors.adjoint() * &self.vectors;
        (gram - CMatrix::identity(d, d)).camax()
    }

    /// Fails if any eigenvalue lies below `-cutoff * lambda_max`.
    fn check_psd(&self, cutoff: f64) -> Result<()> {
        let min = self.lambda_min();
        if min < -self.support_threshold(cutoff) {
            return Err(Error::NotPsd { eigenvalue: min });
        }
        Ok(())
    }
}

pub fn hermitian_eig(h: &HermitianMatrix) -> EigSystem {
    let d = h.dim();
    if d == 0 {
        return EigSystem {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(h.as_matrix().clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    EigSystem { values, vectors }
}

/// Checks a raw matrix for Hermiticity and decomposes it.
pub fn hermitian_eig_checked(m: &CMatrix) -> Result<EigSystem> {
    let h = HermitianMatrix::new(m.clone())?;
    Ok(hermitian_eig(&h))
}

/// PSD square root from an existing eigendecomposition.
pub fn sqrt_from_eig(eig: &EigSystem, cutoff: f64) -> Result<HermitianMatrix> {
    eig.check_psd(cutoff)?;
    let thr = eig.support_threshold(cutoff);
    let m = eig.apply(|v| if v > thr { v.sqrt() } else { 0.0 });
    Ok(HermitianMatrix::symmetrized(m))
}

/// Principal square root of a PSD matrix.
///
/// Eigenvalues in `[-cutoff * lambda_max, cutoff * lambda_max]` are mapped to
/// zero, so `B^2 = A` holds on the support.
pub fn psd_sqrt(a: &HermitianMatrix, cutoff: f64) -> Result<HermitianMatrix> {
    sqrt_from_eig(&hermitian_eig(a), cutoff)
}

/// Pseudo-inverse square root on the support, together with the support
/// projector. `result * A * result` equals the projector.
pub fn support_inv_sqrt(
    a: &HermitianMatrix,
    cutoff: f64,
) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let eig = hermitian_eig(a);
    eig.check_psd(cutoff)?;
    if eig.lambda_max() <= 0.0 {
        return Err(Error::ZeroSupport);
    }
    let thr = eig.support_threshold(cutoff);
    let inv = eig.apply(|v| if v > thr { 1.0 / v.sqrt() } else { 0.0 });
    let proj = eig.apply(|v| if v > thr { 1.0 } else { 0.0 });
    Ok((
        HermitianMatrix::symmetrized(inv),
        HermitianMatrix::symmetrized(proj),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchattenNorms {
    pub trace: f64,
    pub frobenius: f64,
    pub operator: f64,
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// Trace, Frobenius and operator norms of a rectangular complex matrix.
pub fn schatten_norms(m: &CMatrix) -> SchattenNorms {
    let sv = singular_values(m);
    SchattenNorms {
        trace: sv.iter().sum(),
        frobenius: m.norm(),
        operator: sv.iter().copied().fold(0.0, f64::max),
    }
}

pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// `tr(A B)` real part, without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}
