//! Validated density matrices, ensembles, fidelity and tensor powers.
//!
//! Fidelity follows the unsquared convention `F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1`,
//! which for pure states is `|<psi|phi>|`. Every bound in [`crate::bounds`]
//! is stated in this convention.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, hermiticity_deviation, sqrt_from_eig, trace_norm, CMatrix, CVector, EigSystem,
    HermitianMatrix, SUPPORT_CUTOFF,
};

/// Tolerance used when validating generated or computed states.
pub const STATE_TOL: f64 = 1e-10;

/// Default cap on the number of matrix entries a tensor power may produce.
pub const DEFAULT_SIZE_LIMIT: usize = 1 << 20;

#[derive(Debug)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    eig: EigSystem,
    rank: usize,
    pure_vector: Option<CVector>,
    sqrt: OnceLock<CMatrix>,
}

impl Clone for DensityMatrix {
    fn clone(&self) -> Self {
        Self {
            matrix: self.matrix.clone(),
            eig: self.eig.clone(),
            rank: self.rank,
            pure_vector: self.pure_vector.clone(),
            sqrt: OnceLock::new(),
        }
    }
}

/// Validates a raw matrix as a density matrix.
///
/// `tol` bounds the Hermiticity deviation, the most negative eigenvalue and
/// the distance of the trace from one. The input is never renormalized.
pub fn validate_density(raw: CMatrix, tol: f64) -> Result<DensityMatrix> {
    if raw.nrows() != raw.ncols() {
        return Err(Error::NotSquare {
            rows: raw.nrows(),
            cols: raw.ncols(),
        });
    }
    if raw.nrows() == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let deviation = hermiticity_deviation(&raw);
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    let matrix = HermitianMatrix::symmetrized(raw);
    let eig = hermitian_eig(&matrix);
    if eig.lambda_min() < -tol {
        return Err(Error::NotPsd {
            eigenvalue: eig.lambda_min(),
        });
    }
    let trace = matrix.trace_re();
    if (trace - 1.0).abs() > tol {
        return Err(Error::TraceNotOne { trace });
    }
    let rank = eig.support_rank(SUPPORT_CUTOFF);
    Ok(DensityMatrix {
        matrix,
        eig,
        rank,
        pure_vector: None,
        sqrt: OnceLock::new(),
    })
}

impl DensityMatrix {
    /// Pure state `|psi><psi|`; `psi` must have unit norm within `tol`.
    pub fn pure(psi: CVector, tol: f64) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm });
        }
        let outer = &psi * psi.adjoint();
        let mut rho = validate_density(outer, tol.max(STATE_TOL))?;
        rho.pure_vector = Some(psi);
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.matrix.as_matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn eig(&self) -> &EigSystem {
        &self.eig
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_pure(&self) -> bool {
        self.rank == 1
    }

    /// Number of eigenvalues above `cutoff * lambda_max`.
    pub fn rank_at(&self, cutoff: f64) -> usize {
        self.eig.support_rank(cutoff)
    }

    /// The amplitude vector this state was built from, if it was given as one.
    pub fn pure_vector(&self) -> Option<&CVector> {
        self.pure_vector.as_ref()
    }

    /// `tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.matrix.as_matrix().norm_squared()
    }

    /// `sqrt(lambda) |psi>` for every eigenpair on the support.
    ///
    /// States built from an amplitude vector return that vector, so a pure
    /// ensemble's Gram entries are the literal inner products.
    pub fn weighted_eigenvectors(&self) -> Vec<CVector> {
        self.weighted_eigenvectors_at(SUPPORT_CUTOFF)
    }

    /// [`Self::weighted_eigenvectors`] with an explicit support cutoff.
    pub fn weighted_eigenvectors_at(&self, cutoff: f64) -> Vec<CVector> {
        if let (Some(psi), 1) = (&self.pure_vector, self.rank_at(cutoff)) {
            return vec![psi.clone()];
        }
        let thr = self.eig.support_threshold(cutoff);
        self.eig
            .values
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &v)| v > thr)
            .map(|(j, &v)| self.eig.vectors.column(j).scale(v.sqrt()).into_owned())
            .collect()
    }

    pub fn sqrt(&self) -> &CMatrix {
        self.sqrt.get_or_init(|| {
            // eigenvalues were validated at construction
            sqrt_from_eig(&self.eig, SUPPORT_CUTOFF)
                .map(HermitianMatrix::into_matrix)
                .unwrap_or_else(|_| self.eig.apply(|v| v.max(0.0).sqrt()))
        })
    }
}

/// `||sqrt(a) sqrt(b)||_1`, clamped to `[0, 1]`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let prod = a.sqrt() * b.sqrt();
    Ok(trace_norm(&prod).clamp(0.0, 1.0))
}

/// `tr(a b)`.
pub fn overlap(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(crate::linalg::trace_product_re(a.matrix(), b.matrix()))
}

/// Exact Kronecker power `s^{(x)k}`.
///
/// Refuses when the result would hold more than `size_limit` matrix entries;
/// for pure ensembles the entrywise-powered Gram matrix avoids the blow-up.
pub fn tensor_power(s: &DensityMatrix, k: u32, size_limit: usize) -> Result<DensityMatrix> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "tensor power k must be >= 1".into(),
        ));
    }
    if k == 1 {
        return Ok(s.clone());
    }
    let d = s.dim();
    let big = d
        .checked_pow(k)
        .and_then(|dk| dk.checked_mul(dk))
        .filter(|&entries| entries <= size_limit);
    if big.is_none() {
        return Err(Error::SizeLimitExceeded {
            dim: d,
            k,
            limit: size_limit,
        });
    }
    if let Some(psi) = s.pure_vector() {
        let mut v = psi.clone();
        for _ in 1..k {
            v = v.kronecker(psi);
        }
        return DensityMatrix::pure(v, 1e-9);
    }
    let mut m = s.matrix().clone();
    for _ in 1..k {
        m = m.kronecker(s.matrix());
    }
    validate_density(m, 1e-9)
}

/// An ordered list of at least two states of common dimension.
///
/// The ensemble carries the relative eigenvalue cutoff used by everything
/// built from it (ranks, Gram matrix, PGM support).
#[derive(Debug, Clone)]
pub struct Ensemble {
    states: Vec<DensityMatrix>,
    dim: usize,
    cutoff: f64,
}

impl Ensemble {
    pub fn new(states: Vec<DensityMatrix>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::EnsembleTooSmall(states.len()));
        }
        let dim = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self {
            states,
            dim,
            cutoff: SUPPORT_CUTOFF,
        })
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff {cutoff} must lie in (0, 1)"
            )));
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Ensemble of pure states given by amplitude vectors.
    pub fn from_pure_vectors(vectors: Vec<CVector>, tol: f64) -> Result<Self> {
        let states = vectors
            .into_iter()
            .map(|v| DensityMatrix::pure(v, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::new(states)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &DensityMatrix {
        &self.states[i]
    }

    /// True iff every state has rank one.
    pub fn is_pure(&self) -> bool {
        self.states.iter().all(|s| s.rank_at(self.cutoff) == 1)
    }

    /// `Sigma = sum_i rho_i`.
    pub fn sum(&self) -> HermitianMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for s in &self.states {
            acc += s.matrix();
        }
        HermitianMatrix::symmetrized(acc)
    }

    /// Pairwise fidelity matrix, `F[i][j] = F(rho_i, rho_j)`.
    pub fn fidelity_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut f = vec![vec![1.0; n]; n];
        for (i, a) in self.states.iter().enumerate() {
            for (j, b) in self.states.iter().enumerate().skip(i + 1) {
                let v = fidelity(a, b).expect("common dimension");
                f[i][j] = v;
                f[j][i] = v;
            }
        }
        f
    }

    /// Every state raised to the `k`-th tensor power.
    pub fn tensor_power(&self, k: u32, size_limit: usize) -> Result<Self> {
        let states = self
            .states
            .iter()
            .map(|s| tensor_power(s, k, size_limit))
            .collect::<Result<Vec<_>>>()?;
        Self::new(states)?.with_cutoff(self.cutoff)
    }
}
