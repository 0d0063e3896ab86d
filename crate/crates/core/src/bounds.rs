//! Computable forms of the discrimination bounds and copy-count formulas.
//!
//! Each bound is returned as a [`BoundReport`] pairing the bound's value with
//! the quantity it constrains, so every inequality can be checked on concrete
//! ensembles. Fidelity sums run over ordered pairs `i != j` (both directions).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{build_gram, confusion_from_gram, gram_spectral, worst_case_error, GramMatrix};
use crate::linalg::{psd_sqrt, trace_norm, CMatrix, HermitianMatrix, SUPPORT_CUTOFF};
use crate::state::{fidelity, overlap, Ensemble};

/// Absolute slack allowed on every inequality check.
pub const SLACK_TOL: f64 = 1e-9;
/// Tolerance for the individual links of the fidelity-sum chain.
pub const CHAIN_TOL: f64 = 1e-8;
/// Measured epsilons below this are treated as zero.
pub const EPSILON_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `measured <= bound`
    Upper,
    /// `bound <= measured`
    Lower,
    /// `measured == bound`
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub direction: Direction,
    pub bound_value: f64,
    pub measured_value: f64,
    pub holds: bool,
    /// Distance to violation: positive means room to spare. For equalities,
    /// minus the absolute difference.
    pub slack: f64,
    pub tolerance: f64,
    /// The bound carries no information (infinite, or a probability bound at
    /// or beyond its trivial value).
    pub vacuous: bool,
}

impl BoundReport {
    pub fn new(
        name: impl Into<String>,
        direction: Direction,
        bound_value: f64,
        measured_value: f64,
        tolerance: f64,
    ) -> Self {
        let slack = match direction {
            Direction::Upper => bound_value - measured_value,
            Direction::Lower => measured_value - bound_value,
            Direction::Equal => -(bound_value - measured_value).abs(),
        };
        let vacuous = bound_value.is_infinite();
        let holds = vacuous || slack >= -tolerance;
        Self {
            bound_name: name.into(),
            direction,
            bound_value,
            measured_value,
            holds,
            slack,
            tolerance,
            vacuous,
        }
    }

    pub fn upper(name: impl Into<String>, bound: f64, measured: f64) -> Self {
        Self::new(name, Direction::Upper, bound, measured, SLACK_TOL)
    }

    pub fn lower(name: impl Into<String>, bound: f64, measured: f64) -> Self {
        Self::new(name, Direction::Lower, bound, measured, SLACK_TOL)
    }

    /// Upper bound on a probability: vacuous once the bound reaches 1.
    pub fn probability_upper(name: impl Into<String>, bound: f64, measured: f64) -> Self {
        let mut r = Self::upper(name, bound, measured);
        if bound >= 1.0 {
            r.vacuous = true;
            r.holds = true;
        }
        r
    }
}

/// Copy counts for a multi-copy strategy: `k` measurement copies and `l`
/// verification copies per group, `total = k (l + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopyBudget {
    pub k: u64,
    pub l: u64,
    pub total: u64,
    pub epsilon: f64,
    pub delta: f64,
}

/// Ceiling that ignores rounding noise around exact integers.
fn ceil_snapped(x: f64) -> u64 {
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    };
    v.max(0.0) as u64
}

fn check_epsilon_delta(epsilon: f64, delta: f64) -> Result<()> {
    if epsilon.is_nan() || delta.is_nan() {
        return Err(Error::InvalidParameter(
            "epsilon and delta must be numbers".into(),
        ));
    }
    if (0.0..=EPSILON_FLOOR).contains(&epsilon) {
        return Err(Error::ZeroEpsilon);
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} must lie in (0, 1]"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// `k = ceil((2/eps) ln(n/delta))` copies for the multi-copy PGM on mixed
/// states with pairwise fidelity at most `1 - eps`.
pub fn copies_theorem1(n: usize, epsilon: f64, delta: f64) -> Result<CopyBudget> {
    check_epsilon_delta(epsilon, delta)?;
    if n < 2 {
        return Err(Error::EnsembleTooSmall(n));
    }
    let k = ceil_snapped((2.0 / epsilon) * (n as f64 / delta).ln()).max(1);
    Ok(CopyBudget {
        k,
        l: 0,
        total: k,
        epsilon,
        delta,
    })
}

/// Two-stage budget for pure states with `tr(rho_i rho_j) <= 1 - eps`:
/// `k = ceil(||G|| ln(2/delta))` PGM copies, then `l = ceil(ln(2k/delta)/eps)`
/// tests per candidate.
pub fn copies_theorem2(gram_norm: f64, epsilon: f64, delta: f64) -> Result<CopyBudget> {
    check_epsilon_delta(epsilon, delta)?;
    if gram_norm.is_nan() || gram_norm < 1.0 - SLACK_TOL || !gram_norm.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Gram norm {gram_norm} must be at least 1"
        )));
    }
    let gram_norm = gram_norm.max(1.0);
    let k = ceil_snapped(gram_norm * (2.0 / delta).ln()).max(1);
    let l = ceil_snapped((2.0 * k as f64 / delta).ln() / epsilon);
    Ok(CopyBudget {
        k,
        l,
        total: k * (l + 1),
        epsilon,
        delta,
    })
}

/// Pairwise distinguishability of an ensemble, in both conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    /// `max_{i != j} F(rho_i, rho_j)`.
    pub max_fidelity: f64,
    /// `max_{i != j} tr(rho_i rho_j)`.
    pub max_overlap: f64,
    /// `1 - max F`, the multi-copy PGM premise.
    pub epsilon_fidelity: f64,
    /// `1 - max tr(rho_i rho_j)`, the two-stage protocol premise.
    pub epsilon_overlap: f64,
}

impl EpsilonEstimate {
    pub fn has_duplicates(&self) -> bool {
        self.epsilon_fidelity == 0.0
    }
}

fn floor_epsilon(e: f64) -> f64 {
    if e <= EPSILON_FLOOR {
        0.0
    } else {
        e
    }
}

pub fn measure_epsilon(s: &Ensemble) -> EpsilonEstimate {
    let n = s.len();
    let mut max_f = 0.0f64;
    let mut max_o = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_f = max_f.max(fidelity(s.state(i), s.state(j)).expect("common dimension"));
            max_o = max_o.max(overlap(s.state(i), s.state(j)).expect("common dimension"));
        }
    }
    EpsilonEstimate {
        max_fidelity: max_f,
        max_overlap: max_o,
        epsilon_fidelity: floor_epsilon(1.0 - max_f),
        epsilon_overlap: floor_epsilon(1.0 - max_o),
    }
}

/// Sum of `F(rho_i, rho_j)` over ordered pairs `i != j`.
pub fn fidelity_sum(s: &Ensemble) -> f64 {
    let f = s.fidelity_matrix();
    let n = s.len();
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| f[i][j])
        .sum()
}

/// Worst-case PGM error against the sum of pairwise fidelities.
pub fn lemma1_bound(s: &Ensemble) -> Result<BoundReport> {
    let g = build_gram(s);
    let pe = worst_case_error(&confusion_from_gram(&g)?);
    Ok(BoundReport::probability_upper(
        "worst_case_error <= sum_{i!=j} F(rho_i, rho_j)",
        fidelity_sum(s),
        pe,
    ))
}

/// Per-state sandwich `tr(rho_i^2)/||G|| <= tr(mu_i rho_i) <= ||G^{-1}|| tr(rho_i^2)`.
///
/// Returns the lower then upper report for each state in order. The upper
/// report is vacuous when `G` is singular.
pub fn lemma3_sandwich(s: &Ensemble) -> Result<Vec<BoundReport>> {
    let g = build_gram(s);
    let spec = gram_spectral(&g);
    let conf = confusion_from_gram(&g)?;
    let mut out = Vec::with_capacity(2 * s.len());
    for (i, st) in s.states().iter().enumerate() {
        let purity = st.purity();
        let success = conf.get(i, i);
        out.push(BoundReport::lower(
            format!("state {i}: tr(rho^2)/||G|| <= tr(mu rho)"),
            purity / spec.op_norm,
            success,
        ));
        let upper = if spec.is_singular() {
            f64::INFINITY
        } else {
            spec.inv_norm * purity
        };
        out.push(BoundReport::probability_upper(
            format!("state {i}: tr(mu rho) <= ||G^-1|| tr(rho^2)"),
            upper,
            success,
        ));
    }
    Ok(out)
}

/// `||G|| <= 1 + (n-1) max_{i != j} |G_ij|` for a pure-state Gram matrix.
pub fn gram_norm_upper(g: &GramMatrix) -> Result<BoundReport> {
    let m = g.entries();
    let unit_diag = (0..g.size()).all(|i| (m[(i, i)].re - 1.0).abs() <= 1e-9);
    if !g.is_pure_layout() || !unit_diag {
        return Err(Error::Unsupported(
            "Gram norm bound needs a pure-state Gram matrix".into(),
        ));
    }
    let n = g.size();
    let mut max_off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_off = max_off.max(m[(i, j)].norm());
            }
        }
    }
    let bound = 1.0 + (n as f64 - 1.0) * max_off;
    Ok(BoundReport::upper(
        "||G|| <= 1 + (n-1) max|G_ij|",
        bound,
        gram_spectral(g).op_norm,
    ))
}

/// `||sqrt(A) - sqrt(B)||_F <= sqrt(||A - B||_1)` for PSD `A`, `B`.
pub fn sqrt_perturbation_check(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<BoundReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let ra = psd_sqrt(a, SUPPORT_CUTOFF)?;
    let rb = psd_sqrt(b, SUPPORT_CUTOFF)?;
    let lhs = (ra.as_matrix() - rb.as_matrix()).norm();
    let rhs = trace_norm(&(a.as_matrix() - b.as_matrix())).sqrt();
    Ok(BoundReport::upper(
        "||sqrt(A) - sqrt(B)||_F <= sqrt(||A - B||_1)",
        rhs,
        lhs,
    ))
}

/// Every intermediate quantity of the chain
/// `P_E <= sum_{i!=j} ||sqrt(G)^(ij)||_F^2 <= ||sqrt(G) - sqrt(Lambda)||_F^2
///  <= ||Delta||_1 <= sum_{i!=j} ||G^(ij)||_1 = sum_{i!=j} F(rho_i, rho_j)`,
/// where `Lambda` is the block diagonal of `G` and `Delta = G - Lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofChain {
    pub worst_case_error: f64,
    pub offdiag_sqrt_blocks: f64,
    pub sqrt_gap: f64,
    pub delta_trace_norm: f64,
    pub block_trace_norms: f64,
    pub fidelity_sum: f64,
    pub links: Vec<BoundReport>,
}

impl ProofChain {
    pub fn holds(&self) -> bool {
        self.links.iter().all(|l| l.holds)
    }

    pub fn values(&self) -> [f64; 6] {
        [
            self.worst_case_error,
            self.offdiag_sqrt_blocks,
            self.sqrt_gap,
            self.delta_trace_norm,
            self.block_trace_norms,
            self.fidelity_sum,
        ]
    }
}

pub fn lemma1_proof_chain(s: &Ensemble) -> Result<ProofChain> {
    let g = build_gram(s);
    let n = g.num_states();
    let root = g.sqrt()?;
    let pe = worst_case_error(&confusion_from_gram(&g)?);

    let size = g.size();
    let mut lambda = CMatrix::zeros(size, size);
    for r in g.block_ranges() {
        let blk = g
            .entries()
            .view((r.start, r.start), (r.len(), r.len()))
            .into_owned();
        lambda
            .view_mut((r.start, r.start), (r.len(), r.len()))
            .copy_from(&blk);
    }
    let delta = g.entries() - &lambda;
    let sqrt_lambda = psd_sqrt(&HermitianMatrix::new(lambda)?, g.cutoff())?;

    let mut offdiag = 0.0;
    let mut block_norms = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                offdiag += g.sqrt_block(i, j)?.norm_squared();
                block_norms += trace_norm(&g.block(i, j));
            }
        }
    }
    let sqrt_gap = (root - sqrt_lambda.as_matrix()).norm_squared();
    let delta_tn = trace_norm(&delta);
    let fsum = fidelity_sum(s);

    let links = vec![
        BoundReport::new(
            "P_E <= sum ||sqrt(G)^(ij)||_F^2",
            Direction::Upper,
            offdiag,
            pe,
            CHAIN_TOL,
        ),
        BoundReport::new(
            "sum ||sqrt(G)^(ij)||_F^2 <= ||sqrt(G) - sqrt(Lambda)||_F^2",
            Direction::Upper,
            sqrt_gap,
            offdiag,
            CHAIN_TOL,
        ),
        BoundReport::new(
            "||sqrt(G) - sqrt(Lambda)||_F^2 <= ||Delta||_1",
            Direction::Upper,
            delta_tn,
            sqrt_gap,
            CHAIN_TOL,
        ),
        BoundReport::new(
            "||Delta||_1 <= sum ||G^(ij)||_1",
            Direction::Upper,
            block_norms,
            delta_tn,
            CHAIN_TOL,
        ),
        BoundReport::new(
            "sum ||G^(ij)||_1 == sum F(rho_i, rho_j)",
            Direction::Equal,
            fsum,
            block_norms,
            CHAIN_TOL,
        ),
    ];
    Ok(ProofChain {
        worst_case_error: pe,
        offdiag_sqrt_blocks: offdiag,
        sqrt_gap,
        delta_trace_norm: delta_tn,
        block_trace_norms: block_norms,
        fidelity_sum: fsum,
        links,
    })
}
