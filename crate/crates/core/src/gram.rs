//! Weighted-eigenvector Gram matrix, the pretty good measurement and its
//! confusion matrix.
//!
//! Writing each state as `rho_i = sum_k lambda_ik |psi_ik><psi_ik|`, the Gram
//! matrix has entries `G[(i,k),(j,l)] = sqrt(lambda_ik lambda_jl) <psi_ik|psi_jl>`
//! arranged in blocks `G^(ij)`, one row block per state. The PGM outcome
//! probabilities satisfy `tr(mu_i rho_j) = ||sqrt(G)^(ij)||_F^2`, so the
//! confusion matrix can be obtained either from the measurement operators
//! themselves or from `sqrt(G)` alone. Both routes are provided and are
//! expected to agree.

use std::ops::Range;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, psd_sqrt, support_inv_sqrt, trace_product_re, CMatrix, CVector, HermitianMatrix,
    SUPPORT_CUTOFF,
};
use crate::state::Ensemble;

#[derive(Debug)]
pub struct GramMatrix {
    entries: HermitianMatrix,
    blocks: Vec<Range<usize>>,
    cutoff: f64,
    sqrt: OnceLock<CMatrix>,
}

impl Clone for GramMatrix {
    fn clone(&self) -> Self {
        let sqrt = OnceLock::new();
        if let Some(s) = self.sqrt.get() {
            let _ = sqrt.set(s.clone());
        }
        Self {
            entries: self.entries.clone(),
            blocks: self.blocks.clone(),
            cutoff: self.cutoff,
            sqrt,
        }
    }
}

impl GramMatrix {
    /// Gram matrix of explicit weighted vectors, one group per state.
    pub fn from_weighted_vectors(groups: &[Vec<CVector>]) -> Result<Self> {
        let dim = groups
            .iter()
            .flatten()
            .map(|v| v.len())
            .next()
            .ok_or_else(|| Error::InvalidParameter("no vectors given".into()))?;
        let mut blocks = Vec::with_capacity(groups.len());
        let mut columns = Vec::new();
        for g in groups {
            let start = columns.len();
            for v in g {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: v.len(),
                    });
                }
                columns.push(v.clone());
            }
            blocks.push(start..columns.len());
        }
        let w = CMatrix::from_columns(&columns);
        Ok(Self {
            entries: HermitianMatrix::symmetrized(w.adjoint() * w),
            blocks,
            cutoff: SUPPORT_CUTOFF,
            sqrt: OnceLock::new(),
        })
    }

    /// Gram matrix of pure states given directly by their inner products.
    pub fn from_pure_overlaps(g: CMatrix) -> Result<Self> {
        let entries = HermitianMatrix::new(g)?;
        let n = entries.dim();
        Ok(Self {
            entries,
            blocks: (0..n).map(|i| i..i + 1).collect(),
            cutoff: SUPPORT_CUTOFF,
            sqrt: OnceLock::new(),
        })
    }

    /// Relative cutoff used for `sqrt(G)` and the spectrum. Resets the cache.
    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self.sqrt = OnceLock::new();
        self
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Total rank `R`, the side length of the matrix.
    pub fn size(&self) -> usize {
        self.entries.dim()
    }

    pub fn num_states(&self) -> usize {
        self.blocks.len()
    }

    pub fn entries(&self) -> &CMatrix {
        self.entries.as_matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.entries
    }

    /// Row range of state `i`.
    pub fn block_range(&self, i: usize) -> Range<usize> {
        self.blocks[i].clone()
    }

    pub fn block_ranges(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// Every block has size one: the Gram matrix of a pure ensemble.
    pub fn is_pure_layout(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    fn sub(m: &CMatrix, rows: &Range<usize>, cols: &Range<usize>) -> CMatrix {
        m.view((rows.start, cols.start), (rows.len(), cols.len()))
            .into_owned()
    }

    /// The block `G^(ij)`.
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        Self::sub(self.entries(), &self.blocks[i], &self.blocks[j])
    }

    /// `sqrt(G)`, computed on first use and cached.
    pub fn sqrt(&self) -> Result<&CMatrix> {
        if let Some(s) = self.sqrt.get() {
            return Ok(s);
        }
        let s = psd_sqrt(&self.entries, self.cutoff)?.into_matrix();
        Ok(self.sqrt.get_or_init(|| s))
    }

    /// The block `sqrt(G)^(ij)`.
    pub fn sqrt_block(&self, i: usize, j: usize) -> Result<CMatrix> {
        Ok(Self::sub(self.sqrt()?, &self.blocks[i], &self.blocks[j]))
    }

    /// Entrywise `k`-th power. For a pure layout this is the Gram matrix of
    /// the states `|psi_i>^{(x)k}`.
    pub fn entrywise_power(&self, k: u32) -> Result<Self> {
        if !self.is_pure_layout() {
            return Err(Error::Unsupported(
                "entrywise Gram powering requires a pure ensemble".into(),
            ));
        }
        let powered = self.entries().map(|z| z.powu(k));
        Ok(Self::from_pure_overlaps(powered)?.with_cutoff(self.cutoff))
    }
}

/// Gram matrix of the weighted eigenvectors of every state in the ensemble.
pub fn build_gram(s: &Ensemble) -> GramMatrix {
    let groups: Vec<Vec<CVector>> = s
        .states()
        .iter()
        .map(|st| st.weighted_eigenvectors_at(s.cutoff()))
        .collect();
    GramMatrix::from_weighted_vectors(&groups)
        .expect("ensemble states share a dimension")
        .with_cutoff(s.cutoff())
}

/// A POVM together with the projector onto the space it resolves.
#[derive(Debug, Clone)]
pub struct Povm {
    pub elements: Vec<HermitianMatrix>,
    pub support_projector: HermitianMatrix,
}

impl Povm {
    /// `||sum_i mu_i - Pi_supp||_F`.
    pub fn completeness_error(&self) -> f64 {
        let d = self.support_projector.dim();
        let mut acc = CMatrix::zeros(d, d);
        for m in &self.elements {
            acc += m.as_matrix();
        }
        (acc - self.support_projector.as_matrix()).norm()
    }

    /// Most negative eigenvalue across all elements (zero if all are PSD).
    pub fn min_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .map(|m| hermitian_eig(m).lambda_min())
            .fold(0.0, f64::min)
    }
}

/// `mu_i = Sigma^{-1/2} rho_i Sigma^{-1/2}` with `Sigma = sum_i rho_i` and the
/// inverse taken on the support of `Sigma`. No prior weights enter.
pub fn build_pgm(s: &Ensemble) -> Result<Povm> {
    let sigma = s.sum();
    let (inv, proj) = support_inv_sqrt(&sigma, s.cutoff())?;
    let inv = inv.as_matrix();
    let elements = s
        .states()
        .iter()
        .map(|rho| HermitianMatrix::symmetrized(inv * rho.matrix() * inv))
        .collect();
    Ok(Povm {
        elements,
        support_projector: proj,
    })
}

/// `C[i][j]`: probability the measurement reports `i` when the state is `rho_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    entries: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    /// Validates entries in `[0, 1]` (within 1e-10) and unit column sums
    /// (within 1e-9).
    pub fn from_rows(entries: Vec<Vec<f64>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(
                "confusion matrix must be square and non-empty".into(),
            ));
        }
        for row in &entries {
            if let Some(x) = row.iter().find(|x| !(-1e-10..=1.0 + 1e-10).contains(*x)) {
                return Err(Error::InvalidParameter(format!(
                    "confusion entry {x} outside [0, 1]"
                )));
            }
        }
        for j in 0..n {
            let col: f64 = entries.iter().map(|r| r[j]).sum();
            if (col - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "confusion column {j} sums to {col}"
                )));
            }
        }
        Ok(Self { entries })
    }

    fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self {
            entries: (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_fn(n, |_, _| 1.0 / n as f64)
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, outcome: usize, input: usize) -> f64 {
        self.entries[outcome][input]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.entries[i][i]).collect()
    }

    /// Outcome distribution for input state `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.entries.iter().map(|r| r[j]).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_column_sum_error(&self) -> f64 {
        (0..self.n())
            .map(|j| (self.column(j).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfusionMethod {
    /// `tr(mu_i rho_j)` from the measurement operators.
    Direct,
    /// `||sqrt(G)^(ij)||_F^2` from the Gram matrix.
    Gram,
}

/// Confusion matrix from the block structure of `sqrt(G)`.
pub fn confusion_from_gram(g: &GramMatrix) -> Result<ConfusionMatrix> {
    let root = g.sqrt()?;
    let n = g.num_states();
    let blocks = g.block_ranges();
    let mut entries = vec![vec![0.0; n]; n];
    for (i, bi) in blocks.iter().enumerate() {
        for (j, bj) in blocks.iter().enumerate() {
            entries[i][j] = root
                .view((bi.start, bj.start), (bi.len(), bj.len()))
                .norm_squared();
        }
    }
    Ok(ConfusionMatrix { entries })
}

pub fn confusion_matrix(s: &Ensemble, method: ConfusionMethod) -> Result<ConfusionMatrix> {
    match method {
        ConfusionMethod::Direct => {
            let povm = build_pgm(s)?;
            let n = s.len();
            Ok(ConfusionMatrix::from_fn(n, |i, j| {
                trace_product_re(povm.elements[i].as_matrix(), s.state(j).matrix())
            }))
        }
        ConfusionMethod::Gram => confusion_from_gram(&build_gram(s)),
    }
}

/// `P_E = max_i (1 - C[i][i])`, the worst-case error probability.
pub fn worst_case_error(c: &ConfusionMatrix) -> f64 {
    c.diagonal()
        .iter()
        .map(|d| 1.0 - d)
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramSpectrum {
    /// `||G|| = lambda_max(G)`.
    pub op_norm: f64,
    /// `||G^{-1}|| = 1 / lambda_min(G)`; infinite when `G` is singular.
    pub inv_norm: f64,
    pub min_eig: f64,
}

impl GramSpectrum {
    pub fn is_singular(&self) -> bool {
        self.inv_norm.is_infinite()
    }
}

pub fn gram_spectral(g: &GramMatrix) -> GramSpectrum {
    let eig = hermitian_eig(g.hermitian());
    let op_norm = eig.lambda_max();
    let min_eig = eig.lambda_min();
    let inv_norm = if min_eig > g.cutoff() * op_norm {
        1.0 / min_eig
    } else {
        f64::INFINITY
    };
    GramSpectrum {
        op_norm,
        inv_norm,
        min_eig,
    }
}
