//! Multi-copy discrimination strategies.
//!
//! * The multi-copy PGM on `rho^{(x)k}`. For pure ensembles its error is
//!   computed exactly from the entrywise-powered Gram matrix, at a cost
//!   independent of `d^k`; mixed ensembles go through explicit tensor powers.
//! * The two-stage pure-state protocol: measure `k` single copies with the
//!   PGM, then verify each candidate with `l` projective accept/reject tests,
//!   reporting the first candidate whose group accepts every test. This one
//!   is Monte Carlo sampled.
//!
//! Trials draw from their own ChaCha stream seeded by hashing
//! `(seed, true_index, trial)`, so reports do not depend on how trials are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{copies_theorem2, measure_epsilon, CopyBudget, EpsilonEstimate};
use crate::error::{Error, Result};
use crate::gram::{
    build_gram, confusion_from_gram, gram_spectral, worst_case_error, ConfusionMatrix, GramMatrix,
};
use crate::state::Ensemble;

/// Fewest trials per true index accepted by [`estimate_failure`].
pub const MIN_TRIALS: usize = 100;

/// z-score of the two-sided 95% normal interval.
const Z95: f64 = 1.96;

/// Gram matrix of `{|psi_i>^{(x)k}}` and the worst-case PGM error on it.
pub fn multicopy_pgm_pure(g: &GramMatrix, k: u32) -> Result<(GramMatrix, f64)> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let gk = g.entrywise_power(k)?;
    let pe = worst_case_error(&confusion_from_gram(&gk)?);
    Ok((gk, pe))
}

/// Worst-case PGM error on explicit tensor powers `rho_i^{(x)k}`.
pub fn multicopy_pgm_mixed(s: &Ensemble, k: u32, size_limit: usize) -> Result<f64> {
    let powered = s.tensor_power(k, size_limit)?;
    Ok(worst_case_error(&confusion_from_gram(&build_gram(
        &powered,
    ))?))
}

/// Born-rule sample of the PGM outcome on input `true_index`.
pub fn pgm_sample<R: Rng + ?Sized>(c: &ConfusionMatrix, true_index: usize, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let n = c.n();
    let mut acc = 0.0;
    let mut last_positive = true_index;
    for i in 0..n {
        let p = c.get(i, true_index).max(0.0);
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    // column sums fall short of 1 by rounding only
    last_positive
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub true_index: usize,
    /// `None` is the protocol's "fail" output.
    pub reported: Option<usize>,
    pub pgm_outcomes: Vec<usize>,
    pub copies_used: u64,
    /// Position in `pgm_outcomes` of the group that accepted.
    pub accepted_group: Option<usize>,
}

impl TrialOutcome {
    pub fn failed(&self) -> bool {
        self.reported != Some(self.true_index)
    }
}

/// Precomputed measurement statistics for the two-stage pure-state protocol.
#[derive(Debug, Clone)]
pub struct TwoStageProtocol {
    confusion: ConfusionMatrix,
    /// `accept[a][t] = |<psi_a|psi_t>|^2`.
    accept: Vec<Vec<f64>>,
    budget: CopyBudget,
}

impl TwoStageProtocol {
    pub fn new(s: &Ensemble, budget: CopyBudget) -> Result<Self> {
        if !s.is_pure() {
            return Err(Error::Unsupported(
                "the two-stage protocol needs pure states; use the tensor-power PGM for mixed ensembles"
                    .into(),
            ));
        }
        let g = build_gram(s);
        Self::from_gram(&g, budget)
    }

    pub fn from_gram(g: &GramMatrix, budget: CopyBudget) -> Result<Self> {
        if !g.is_pure_layout() {
            return Err(Error::Unsupported(
                "the two-stage protocol needs a pure-state Gram matrix".into(),
            ));
        }
        let n = g.size();
        let confusion = confusion_from_gram(g)?;
        let accept = (0..n)
            .map(|a| {
                (0..n)
                    .map(|t| g.entries()[(a, t)].norm_sqr().min(1.0))
                    .collect()
            })
            .collect();
        Ok(Self {
            confusion,
            accept,
            budget,
        })
    }

    pub fn budget(&self) -> &CopyBudget {
        &self.budget
    }

    pub fn confusion(&self) -> &ConfusionMatrix {
        &self.confusion
    }

    pub fn num_states(&self) -> usize {
        self.confusion.n()
    }

    pub fn run_trial<R: Rng + ?Sized>(
        &self,
        true_index: usize,
        dedup: bool,
        rng: &mut R,
    ) -> TrialOutcome {
        let k = self.budget.k as usize;
        let l = self.budget.l;
        let pgm_outcomes: Vec<usize> = (0..k)
            .map(|_| pgm_sample(&self.confusion, true_index, rng))
            .collect();

        let mut copies_used = self.budget.k;
        let mut tested = vec![false; self.num_states()];
        let mut reported = None;
        let mut accepted_group = None;
        for (j, &cand) in pgm_outcomes.iter().enumerate() {
            if dedup && tested[cand] {
                continue;
            }
            tested[cand] = true;
            copies_used += l;
            let all_accept = if cand == true_index {
                true
            } else {
                let p = self.accept[cand][true_index];
                (0..l).all(|_| rng.random::<f64>() < p)
            };
            if all_accept {
                reported = Some(cand);
                accepted_group = Some(j);
                break;
            }
        }
        TrialOutcome {
            true_index,
            reported,
            pgm_outcomes,
            copies_used,
            accepted_group,
        }
    }
}

/// One run of the two-stage protocol on a pure ensemble.
pub fn run_theorem2_trial<R: Rng + ?Sized>(
    s: &Ensemble,
    true_index: usize,
    budget: CopyBudget,
    dedup: bool,
    rng: &mut R,
) -> Result<TrialOutcome> {
    if true_index >= s.len() {
        return Err(Error::InvalidParameter(format!(
            "true index {true_index} out of range for {} states",
            s.len()
        )));
    }
    Ok(TwoStageProtocol::new(s, budget)?.run_trial(true_index, dedup, rng))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the RNG stream for one trial.
pub fn trial_seed(seed: u64, true_index: usize, trial: usize) -> u64 {
    let h = splitmix64(seed);
    let h = splitmix64(h ^ true_index as u64);
    splitmix64(h ^ (trial as u64).rotate_left(32))
}

pub fn trial_rng(seed: u64, true_index: usize, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, true_index, trial))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub per_index_failure: Vec<f64>,
    pub per_index_ci_halfwidth: Vec<f64>,
    pub worst_case_failure: f64,
    pub worst_index: usize,
    /// 95% normal-approximation half-width at the worst index.
    pub ci_halfwidth: f64,
    pub trials: usize,
    pub seed: u64,
    pub dedup: bool,
    pub budget: CopyBudget,
    pub gram_norm: f64,
    pub measured_epsilon: EpsilonEstimate,
    pub mean_copies_used: f64,
    pub max_copies_used: u64,
    /// Trials that output a wrong index.
    pub wrong_outputs: usize,
    /// Trials that output "fail".
    pub fail_outputs: usize,
    pub warnings: Vec<String>,
}

impl ProtocolReport {
    /// Empirical worst case within `delta` plus three half-widths.
    pub fn meets_guarantee(&self) -> bool {
        self.worst_case_failure <= self.budget.delta + 3.0 * self.ci_halfwidth
    }
}

/// Monte Carlo estimate of the two-stage protocol's failure rate for every
/// possible true state.
///
/// `epsilon` defaults to the measured `1 - max tr(rho_i rho_j)`. A supplied
/// value larger than the measured one is kept but flagged in the warnings.
pub fn estimate_failure(
    s: &Ensemble,
    delta: f64,
    epsilon: Option<f64>,
    trials: usize,
    seed: u64,
    dedup: bool,
) -> Result<ProtocolReport> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_TRIALS} trials per index, got {trials}"
        )));
    }
    if !s.is_pure() {
        return Err(Error::Unsupported(
            "the two-stage protocol needs pure states; use the tensor-power PGM for mixed ensembles"
                .into(),
        ));
    }
    let measured = measure_epsilon(s);
    let mut warnings = Vec::new();
    let eps = match epsilon {
        Some(e) => {
            if measured.max_overlap > 1.0 - e + 1e-12 {
                warnings.push(format!(
                    "supplied epsilon {e} exceeds measured 1 - max tr(rho_i rho_j) = {}",
                    measured.epsilon_overlap
                ));
            }
            e
        }
        None => measured.epsilon_overlap,
    };
    let g = build_gram(s);
    let gram_norm = gram_spectral(&g).op_norm;
    let budget = copies_theorem2(gram_norm, eps, delta)?;
    let protocol = TwoStageProtocol::from_gram(&g, budget)?;

    let n = s.len();
    let results: Vec<(bool, bool, u64)> = (0..n * trials)
        .into_par_iter()
        .map(|job| {
            let (idx, trial) = (job / trials, job % trials);
            let mut rng = trial_rng(seed, idx, trial);
            let out = protocol.run_trial(idx, dedup, &mut rng);
            (out.failed(), out.reported.is_none(), out.copies_used)
        })
        .collect();

    let mut failures = vec![0usize; n];
    let mut fail_outputs = 0;
    let mut wrong_outputs = 0;
    let mut total_copies: u128 = 0;
    let mut max_copies = 0;
    for (job, &(failed, was_fail, copies)) in results.iter().enumerate() {
        if failed {
            failures[job / trials] += 1;
            if was_fail {
                fail_outputs += 1;
            } else {
                wrong_outputs += 1;
            }
        }
        total_copies += copies as u128;
        max_copies = max_copies.max(copies);
    }

    let tf = trials as f64;
    let per_index_failure: Vec<f64> = failures.iter().map(|&f| f as f64 / tf).collect();
    let per_index_ci_halfwidth: Vec<f64> = per_index_failure
        .iter()
        .map(|&p| Z95 * (p * (1.0 - p) / tf).sqrt())
        .collect();
    let mut worst_index = 0;
    for (i, &p) in per_index_failure.iter().enumerate() {
        if p > per_index_failure[worst_index] {
            worst_index = i;
        }
    }
    Ok(ProtocolReport {
        worst_case_failure: per_index_failure[worst_index],
        ci_halfwidth: per_index_ci_halfwidth[worst_index],
        worst_index,
        per_index_failure,
        per_index_ci_halfwidth,
        trials,
        seed,
        dedup,
        budget,
        gram_norm,
        measured_epsilon: measured,
        mean_copies_used: total_copies as f64 / (n * trials) as f64,
        max_copies_used: max_copies,
        wrong_outputs,
        fail_outputs,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_equal_overlap, gen_haar_pure};
    use crate::gram::{confusion_matrix, ConfusionMethod};
    use crate::linalg::{c64, CMatrix, CVector};
    use crate::state::DEFAULT_SIZE_LIMIT;
    use crate::testutil::rng;

    fn two_pure(c: f64) -> Ensemble {
        let a = CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let b = CVector::from_vec(vec![c64(c, 0.0), c64((1.0 - c * c).sqrt(), 0.0)]);
        Ensemble::from_pure_vectors(vec![a, b], 1e-12).unwrap()
    }

    fn budget(k: u64, l: u64) -> CopyBudget {
        CopyBudget {
            k,
            l,
            total: k * (l + 1),
            epsilon: 0.5,
            delta: 0.1,
        }
    }

    #[test]
    fn multicopy_k1_is_identity() {
        let g = build_gram(&gen_haar_pure(4, 4, 2).unwrap());
        let (g1, pe) = multicopy_pgm_pure(&g, 1).unwrap();
        assert_eq!(g1.entries(), g.entries());
        let direct = worst_case_error(&confusion_from_gram(&g).unwrap());
        assert_eq!(pe, direct);
    }

    #[test]
    fn multicopy_two_state_closed_form() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let g = build_gram(&two_pure(c));
        let (gk, pe) = multicopy_pgm_pure(&g, 2).unwrap();
        assert!((gk.entries()[(0, 1)].re - 0.5).abs() < 1e-15);
        // (1 - sqrt(1 - c^{2k})) / 2 with c^{2k} = 1/4
        let expect = (1.0 - (1.0 - c.powi(4)).sqrt()) / 2.0;
        assert!((expect - 0.066_987_298_107_780_68).abs() < 1e-15);
        assert!((pe - expect).abs() < 1e-10);
    }

    #[test]
    fn multicopy_matches_tensor_route() {
        let s = gen_haar_pure(4, 4, 31).unwrap();
        let g = build_gram(&s);
        let (_, pe) = multicopy_pgm_pure(&g, 2).unwrap();
        let brute = s.tensor_power(2, DEFAULT_SIZE_LIMIT).unwrap();
        let pe_brute =
            worst_case_error(&confusion_matrix(&brute, ConfusionMethod::Direct).unwrap());
        assert!((pe - pe_brute).abs() < 1e-8);
        let pe_mixed_route = multicopy_pgm_mixed(&s, 2, DEFAULT_SIZE_LIMIT).unwrap();
        assert!((pe - pe_mixed_route).abs() < 1e-8);
    }

    #[test]
    fn sampling_identity_always_hits() {
        let c = ConfusionMatrix::identity(5);
        let mut r = rng(1);
        for t in 0..5 {
            for _ in 0..100 {
                assert_eq!(pgm_sample(&c, t, &mut r), t);
            }
        }
    }

    #[test]
    fn sampling_uniform_within_four_sigma() {
        let n = 4;
        let c = ConfusionMatrix::uniform(n);
        let mut r = rng(9);
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            counts[pgm_sample(&c, 2, &mut r)] += 1;
        }
        let p = 1.0 / n as f64;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for &k in &counts {
            assert!((k as f64 - mean).abs() <= 4.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let c = confusion_from_gram(&build_gram(&gen_haar_pure(3, 3, 4).unwrap())).unwrap();
        let a: Vec<usize> = {
            let mut r = rng(5);
            (0..50).map(|_| pgm_sample(&c, 1, &mut r)).collect()
        };
        let b: Vec<usize> = {
            let mut r = rng(5);
            (0..50).map(|_| pgm_sample(&c, 1, &mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn orthonormal_trial_accepts_first_group() {
        let s = gen_equal_overlap(4, 0.0).unwrap();
        let b = budget(3, 5);
        let mut r = rng(0);
        for t in 0..4 {
            let out = run_theorem2_trial(&s, t, b, false, &mut r).unwrap();
            assert_eq!(out.reported, Some(t));
            assert_eq!(out.accepted_group, Some(0));
            assert_eq!(out.copies_used, 3 + 5);
            assert_eq!(out.pgm_outcomes, vec![t; 3]);
        }
    }

    #[test]
    fn trial_invariants_hold() {
        let s = gen_equal_overlap(5, 0.6).unwrap();
        let b = budget(6, 4);
        let proto = TwoStageProtocol::new(&s, b).unwrap();
        let mut r = rng(8);
        for trial in 0..500 {
            let t = trial % 5;
            for dedup in [false, true] {
                let out = proto.run_trial(t, dedup, &mut r);
                assert!(out.copies_used <= b.total);
                assert_eq!(out.pgm_outcomes.len(), 6);
                if let Some(rep) = out.reported {
                    assert!(out.pgm_outcomes.contains(&rep));
                    assert_eq!(out.pgm_outcomes[out.accepted_group.unwrap()], rep);
                }
            }
        }
    }

    #[test]
    fn dedup_never_costs_more() {
        let s = gen_equal_overlap(3, 0.7).unwrap();
        let b = budget(8, 6);
        let proto = TwoStageProtocol::new(&s, b).unwrap();
        for trial in 0..200 {
            let lit = proto.run_trial(0, false, &mut trial_rng(3, 0, trial));
            let ded = proto.run_trial(0, true, &mut trial_rng(3, 0, trial));
            assert_eq!(lit.pgm_outcomes, ded.pgm_outcomes);
            assert!(ded.copies_used <= lit.copies_used);
        }
    }

    #[test]
    fn mixed_ensemble_refused() {
        let s = crate::generators::gen_ginibre_mixed(3, 2, 3, 1).unwrap();
        assert!(matches!(
            estimate_failure(&s, 0.1, None, 100, 1, false),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            TwoStageProtocol::new(&s, budget(2, 2)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn too_few_trials_refused() {
        let s = gen_equal_overlap(3, 0.2).unwrap();
        assert!(matches!(
            estimate_failure(&s, 0.1, None, 10, 1, false),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn orthogonal_pair_never_fails() {
        let s = gen_equal_overlap(2, 0.0).unwrap();
        let rep = estimate_failure(&s, 0.1, None, 200, 4, false).unwrap();
        assert_eq!(rep.worst_case_failure, 0.0);
        assert_eq!(rep.ci_halfwidth, 0.0);
    }

    #[test]
    fn equal_overlap_meets_guarantee_and_is_deterministic() {
        let s = gen_equal_overlap(4, 0.5).unwrap();
        let a = estimate_failure(&s, 0.2, None, 500, 17, false).unwrap();
        let b = estimate_failure(&s, 0.2, None, 500, 17, false).unwrap();
        assert_eq!(a, b);
        assert!(a.meets_guarantee(), "{a:?}");
        assert!(a.mean_copies_used <= a.budget.total as f64);
        assert!(a.max_copies_used <= a.budget.total);
    }

    #[test]
    fn schedule_invariance() {
        let s = gen_haar_pure(6, 5, 2).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_failure(&s, 0.1, None, 150, 99, true).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn epsilon_warning() {
        let s = gen_equal_overlap(3, 0.5).unwrap();
        // measured epsilon is 1 - 0.25 = 0.75
        let rep = estimate_failure(&s, 0.1, Some(0.9), 100, 1, false).unwrap();
        assert_eq!(rep.warnings.len(), 1);
        let rep = estimate_failure(&s, 0.1, Some(0.5), 100, 1, false).unwrap();
        assert!(rep.warnings.is_empty());
    }

    #[test]
    fn accept_probabilities_from_gram() {
        let g = GramMatrix::from_pure_overlaps(CMatrix::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.0), c64(0.0, 0.6), c64(0.0, -0.6), c64(1.0, 0.0)],
        ))
        .unwrap();
        let p = TwoStageProtocol::from_gram(&g, budget(1, 1)).unwrap();
        assert!((p.accept[0][1] - 0.36).abs() < 1e-15);
    }
}
