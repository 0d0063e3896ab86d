use std::path::{Path, PathBuf};

use pgm_core::bounds::{
    copies_theorem1, copies_theorem2, gram_norm_upper, lemma1_bound, lemma1_proof_chain,
    lemma3_sandwich, measure_epsilon, BoundReport,
};
use pgm_core::generators::{gen_equal_overlap, gen_ginibre_mixed, gen_haar_pure, gen_sign_states};
use pgm_core::gram::{
    build_gram, build_pgm, confusion_from_gram, confusion_matrix, gram_spectral, worst_case_error,
    ConfusionMethod,
};
use pgm_core::linalg::TOL_RECON;
use pgm_core::protocol::{estimate_failure, multicopy_pgm_mixed, multicopy_pgm_pure};
use pgm_core::state::{Ensemble, DEFAULT_SIZE_LIMIT};
use serde_json::json;

use crate::error::CliError;
use crate::io::EnsembleFile;
use crate::report::RunReport;

/// Tolerance on the agreement of the two confusion-matrix routes.
pub const ROUTE_TOL: f64 = 1e-9;

pub const DEFAULT_BOUNDS_DELTA: f64 = 0.01;
pub const DEFAULT_SIM_DELTA: f64 = 0.1;
pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Debug, Clone, Default)]
pub struct EnsembleArgs {
    pub input: PathBuf,
    pub cutoff: Option<f64>,
}

fn load(args: &EnsembleArgs, report: &mut RunReport) -> Result<Ensemble, CliError> {
    let file = EnsembleFile::read(&args.input)?;
    let mut e = file.to_ensemble()?;
    if let Some(c) = args.cutoff {
        e = e.with_cutoff(c)?;
    }
    report.parameters.input = Some(args.input.display().to_string());
    report.parameters.n = Some(e.len());
    report.parameters.d = Some(e.dim());
    report.parameters.cutoff = Some(e.cutoff());
    Ok(e)
}

fn check(report: &mut RunReport, r: &BoundReport) {
    if !r.holds {
        report.fail(
            r.bound_name.clone(),
            format!(
                "bound {} vs measured {} (slack {})",
                r.bound_value, r.measured_value, r.slack
            ),
        );
    }
}

pub fn cmd_pgm(args: &EnsembleArgs) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("pgm");
    let e = load(args, &mut report)?;
    let direct = confusion_matrix(&e, ConfusionMethod::Direct)?;
    let gram = build_gram(&e);
    let via_gram = confusion_from_gram(&gram)?;
    let spec = gram_spectral(&gram);
    let povm = build_pgm(&e)?;
    let diff = direct.max_abs_diff(&via_gram);
    let completeness = povm.completeness_error();

    report.set("pure", e.is_pure());
    report.set("confusion_direct", direct.rows());
    report.set("confusion_gram", via_gram.rows());
    report.set("route_max_difference", diff);
    report.set("diagonal", via_gram.diagonal());
    report.set("worst_case_error", worst_case_error(&via_gram));
    report.set(
        "gram",
        json!({
            "size": gram.size(),
            "op_norm": spec.op_norm,
            "inv_norm": spec.inv_norm,
            "singular": spec.is_singular(),
            "min_eig": spec.min_eig,
        }),
    );
    report.set("povm_completeness_error", completeness);

    if diff > ROUTE_TOL {
        report.fail(
            "confusion routes agree",
            format!("direct and Gram routes differ by {diff:e}"),
        );
    }
    if completeness > TOL_RECON {
        report.fail(
            "povm completeness",
            format!("sum of elements misses the support projector by {completeness:e}"),
        );
    }
    Ok(report)
}

pub fn cmd_bounds(
    args: &EnsembleArgs,
    delta: Option<f64>,
    epsilon: Option<f64>,
) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("bounds");
    let e = load(args, &mut report)?;
    let delta = delta.unwrap_or(DEFAULT_BOUNDS_DELTA);
    let eps = measure_epsilon(&e);
    report.parameters.delta = Some(delta);
    report.parameters.epsilon_fidelity = Some(eps.epsilon_fidelity);
    report.parameters.epsilon_overlap = Some(eps.epsilon_overlap);
    report.parameters.epsilon_user = epsilon;
    report.set("epsilon", eps);

    let l1 = lemma1_bound(&e)?;
    check(&mut report, &l1);
    report.set("lemma1", &l1);

    let l3 = lemma3_sandwich(&e)?;
    for r in &l3 {
        check(&mut report, r);
    }
    report.set("lemma3", &l3);

    let gram = build_gram(&e);
    let spec = gram_spectral(&gram);
    report.set("gram_op_norm", spec.op_norm);
    if e.is_pure() {
        let r = gram_norm_upper(&gram)?;
        check(&mut report, &r);
        report.set("gram_norm_upper", &r);
    }

    let chain = lemma1_proof_chain(&e)?;
    for r in &chain.links {
        check(&mut report, r);
    }
    report.set("lemma1_chain", &chain);

    if eps.has_duplicates() {
        report.diagnostics.push(
            "epsilon is zero: the ensemble contains indistinguishable states; copy budgets omitted"
                .into(),
        );
        return Ok(report);
    }

    let b1 = copies_theorem1(e.len(), eps.epsilon_fidelity, delta)?;
    report.set("copies_theorem1", b1);
    let k = u32::try_from(b1.k).unwrap_or(u32::MAX);
    let multicopy_error = if e.is_pure() {
        Some(multicopy_pgm_pure(&gram, k)?.1)
    } else {
        match multicopy_pgm_mixed(&e, k, DEFAULT_SIZE_LIMIT) {
            Ok(pe) => Some(pe),
            Err(pgm_core::Error::SizeLimitExceeded { .. }) => {
                report.diagnostics.push(format!(
                    "multi-copy PGM check skipped: {}^{} exceeds the tensor-power size limit",
                    e.dim(),
                    k
                ));
                None
            }
            Err(err) => return Err(err.into()),
        }
    };
    if let Some(pe) = multicopy_error {
        let r = BoundReport::upper("multi-copy PGM worst-case error <= delta", delta, pe);
        check(&mut report, &r);
        report.set("multicopy_pgm", &r);
    }

    if e.is_pure() {
        let b2 = copies_theorem2(spec.op_norm, eps.epsilon_overlap, delta)?;
        report.set("copies_theorem2", b2);
    } else {
        report
            .diagnostics
            .push("two-stage copy budget applies to pure ensembles only".into());
    }
    Ok(report)
}

#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    pub ensemble: EnsembleArgs,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub dedup: bool,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("simulate");
    let seed = args
        .seed
        .ok_or_else(|| CliError::Usage("--seed is required for simulate".into()))?;
    let e = load(&args.ensemble, &mut report)?;
    if !e.is_pure() {
        return Err(CliError::Unsupported(
            "the two-stage protocol needs pure states; for mixed ensembles run `bounds`, \
             which evaluates the multi-copy PGM on explicit tensor powers"
                .into(),
        ));
    }
    let delta = args.delta.unwrap_or(DEFAULT_SIM_DELTA);
    let trials = args.trials.unwrap_or(DEFAULT_TRIALS);
    let rep = estimate_failure(&e, delta, args.epsilon, trials, seed, args.dedup)?;

    report.parameters.delta = Some(delta);
    report.parameters.seed = Some(seed);
    report.parameters.trials = Some(trials);
    report.parameters.dedup = Some(args.dedup);
    report.parameters.epsilon_fidelity = Some(rep.measured_epsilon.epsilon_fidelity);
    report.parameters.epsilon_overlap = Some(rep.measured_epsilon.epsilon_overlap);
    report.parameters.epsilon_user = args.epsilon;
    report.diagnostics.extend(rep.warnings.iter().cloned());

    let meets = rep.meets_guarantee();
    report.set("budget", rep.budget);
    report.set("gram_op_norm", rep.gram_norm);
    report.set("per_index_failure", &rep.per_index_failure);
    report.set("per_index_ci_halfwidth", &rep.per_index_ci_halfwidth);
    report.set("worst_case_failure", rep.worst_case_failure);
    report.set("worst_index", rep.worst_index);
    report.set("ci_halfwidth", rep.ci_halfwidth);
    report.set("mean_copies_used", rep.mean_copies_used);
    report.set("max_copies_used", rep.max_copies_used);
    report.set("wrong_outputs", rep.wrong_outputs);
    report.set("fail_outputs", rep.fail_outputs);
    report.set("meets_guarantee", meets);
    if !meets {
        report.fail(
            "worst-case failure <= delta + 3 ci",
            format!(
                "observed {} at index {} against delta {} (ci {})",
                rep.worst_case_failure, rep.worst_index, delta, rep.ci_halfwidth
            ),
        );
    }
    if rep.mean_copies_used > rep.budget.total as f64 {
        report.fail(
            "mean copies <= k(l+1)",
            format!("{} > {}", rep.mean_copies_used, rep.budget.total),
        );
    }
    Ok(report)
}

pub fn cmd_copies(
    n: usize,
    epsilon: f64,
    delta: f64,
    gram_norm: Option<f64>,
) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("copies");
    report.parameters.n = Some(n);
    report.parameters.epsilon_user = Some(epsilon);
    report.parameters.delta = Some(delta);
    report.set("copies_theorem1", copies_theorem1(n, epsilon, delta)?);
    if let Some(g) = gram_norm {
        report.set("gram_op_norm", g);
        report.set("copies_theorem2", copies_theorem2(g, epsilon, delta)?);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GenKind {
    Haar,
    Sign,
    EqualOverlap,
    Ginibre,
}

#[derive(Debug, Clone)]
pub struct GenArgs {
    pub kind: GenKind,
    pub d: Option<usize>,
    pub n: usize,
    pub rank: Option<usize>,
    pub c: Option<f64>,
    pub seed: Option<u64>,
}

pub fn generate(args: &GenArgs) -> Result<Ensemble, CliError> {
    let need_d = || {
        args.d
            .ok_or_else(|| CliError::Usage("--d is required for this generator".into()))
    };
    let need_seed = || {
        args.seed
            .ok_or_else(|| CliError::Usage("--seed is required for random generators".into()))
    };
    let e = match args.kind {
        GenKind::Haar => gen_haar_pure(need_d()?, args.n, need_seed()?)?,
        GenKind::Sign => gen_sign_states(need_d()?, args.n, need_seed()?)?,
        GenKind::EqualOverlap => {
            let c = args
                .c
                .ok_or_else(|| CliError::Usage("--c is required for equal-overlap".into()))?;
            gen_equal_overlap(args.n, c)?
        }
        GenKind::Ginibre => {
            let d = need_d()?;
            let rank = args
                .rank
                .ok_or_else(|| CliError::Usage("--rank is required for ginibre".into()))?;
            gen_ginibre_mixed(d, rank, args.n, need_seed()?)?
        }
    };
    Ok(e)
}

/// Generates an ensemble file. With an output path the file is written and
/// a short report returned; without one the file text is the second value.
pub fn cmd_gen(args: &GenArgs, output: Option<&Path>) -> Result<(RunReport, String), CliError> {
    let mut report = RunReport::new("gen");
    let e = generate(args)?;
    let file = EnsembleFile::from_ensemble(&e);
    let text = file.to_text();
    report.parameters.n = Some(e.len());
    report.parameters.d = Some(e.dim());
    report.parameters.seed = args.seed;
    report.set("kind", format!("{:?}", args.kind).to_lowercase());
    report.set("pure", e.is_pure());
    if let Some(path) = output {
        file.write(path)?;
        report.set("output", path.display().to_string());
    }
    Ok((report, text))
}
