//! Command implementations behind the `lyapinfo` binary.
//!
//! Exit codes: `0` informative (or checker and oracle agree, for `verify`),
//! `1` input error, `2` not informative, `3` assumption violated,
//! `4` integrity failure.

pub mod instance;
pub mod report;

use crate::error::Error;
use crate::informativity::{
    check_informativity_subspace, check_informativity_system, CheckConfig, InformativityVerdict,
    VerdictTag,
};
use crate::matspace::AffineMatrixSet;
use crate::oracle::{brute_force_informative, cross_check, OracleOutcome};
use crate::solver::{compute_phi, compute_phi_reduced, pick_member_in_an};
use crate::sysmodel::{
    consistent_set, effective_rank_tol, joint_column_basis, validate_assumption1, PriorKnowledge,
};
use crate::Tolerances;

use instance::{matrix_to_rows, Problem, RawDataset, RawGenerator, RawInstance};
use report::{
    CertificateReport, DataReport, OracleReport, ReducedReport, Report, SetReport, ToleranceReport,
    WitnessReport,
};

pub const EXIT_INFORMATIVE: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_INFORMATIVE: i32 = 2;
pub const EXIT_ASSUMPTION: i32 = 3;
pub const EXIT_INTEGRITY: i32 = 4;

pub const DEFAULT_SAMPLES: usize = 32;

/// Command-line overrides applied on top of the instance file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub rank_tol: Option<f64>,
    pub gap_tol: Option<f64>,
    pub agree_tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Report,
}

fn exit_for(tag: VerdictTag) -> i32 {
    match tag {
        VerdictTag::Informative => EXIT_INFORMATIVE,
        VerdictTag::NotInformative => EXIT_NOT_INFORMATIVE,
        VerdictTag::AssumptionViolated => EXIT_ASSUMPTION,
    }
}

/// Shared front half of every command: tolerances, prior validation, the
/// consistent set and both checker forms.
struct Analysis {
    tolerances: Tolerances,
    rank_tol: f64,
    seed: u64,
    set: Option<AffineMatrixSet>,
    verdict: Option<InformativityVerdict>,
    report: Report,
}

impl Analysis {
    fn run(command: &'static str, problem: &Problem, ov: &Overrides) -> Result<Self, Box<Outcome>> {
        let mut tolerances = problem.tolerances;
        if let Some(v) = ov.rank_tol {
            tolerances.rank_tol = v;
        }
        if let Some(v) = ov.gap_tol {
            tolerances.gap_tol = v;
        }
        if let Some(v) = ov.agree_tol {
            tolerances.agree_tol = v;
        }
        let seed = ov.seed.unwrap_or(problem.seed);
        let rank_tol = effective_rank_tol(&problem.dataset, tolerances.rank_tol);
        let mut report = Report {
            command,
            exit_code: EXIT_INPUT,
            verdict: None,
            message: String::new(),
            solution: None,
            certificate: None,
            subspace_form: None,
            assumption1: None,
            consistent_set: None,
            data: DataReport {
                origin: problem.origin,
                samples: problem.dataset.len(),
                derivatives: problem.dataset.derivative_source(),
                approximate: problem.dataset.is_approximate(),
            },
            tolerances: ToleranceReport {
                rank_tol: tolerances.rank_tol,
                gap_tol: tolerances.gap_tol,
                agree_tol: tolerances.agree_tol,
                effective_rank_tol: rank_tol,
            },
            seed,
            witness: None,
            reduced: None,
            oracle: None,
        };
        for (name, v) in [
            ("--tol-rank", tolerances.rank_tol),
            ("--tol-gap", tolerances.gap_tol),
            ("--tol-agree", tolerances.agree_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(fail_boxed(
                    report,
                    EXIT_INPUT,
                    None,
                    format!("{name} must be finite and positive"),
                ));
            }
        }
        // A relative singular-value threshold of 1 or more discards every
        // direction, so all rank decisions would be meaningless.
        if rank_tol >= 1.0 {
            return Err(fail_boxed(
                report,
                EXIT_INPUT,
                None,
                format!("effective rank tolerance {rank_tol} must be below 1"),
            ));
        }

        match validate_assumption1(&problem.prior, problem.truth.as_ref(), true, rank_tol) {
            Ok(status) => report.assumption1 = Some(status),
            Err(e @ Error::PriorMembership(_)) => {
                return Err(fail_boxed(
                    report,
                    EXIT_ASSUMPTION,
                    Some(VerdictTag::AssumptionViolated),
                    e.to_string(),
                ))
            }
            Err(e) => return Err(fail_boxed(report, EXIT_INPUT, None, e.to_string())),
        }

        let set = match consistent_set(&problem.dataset, &problem.prior, rank_tol) {
            Ok(Some(s)) => s,
            Ok(None) => {
                return Err(fail_boxed(
                    report,
                    EXIT_ASSUMPTION,
                    Some(VerdictTag::AssumptionViolated),
                    "data and prior knowledge admit no common system matrix".into(),
                ))
            }
            Err(e) => return Err(fail_boxed(report, EXIT_INPUT, None, e.to_string())),
        };
        report.consistent_set = Some(SetReport {
            dim: set.dim(),
            base: matrix_to_rows(set.base()),
        });

        let cfg = CheckConfig {
            rank_tol,
            gap_tol: tolerances.gap_tol,
            seed,
            ..CheckConfig::default()
        };
        let verdict = check_informativity_system(&set, &problem.q, &cfg)
            .and_then(|v| Ok((v, check_informativity_subspace(&set, &problem.q, &cfg)?)));
        let (verdict, alt) = match verdict {
            Ok(pair) => pair,
            Err(e) => return Err(fail_boxed(report, EXIT_INPUT, None, e.to_string())),
        };
        report.verdict = Some(verdict.tag);
        report.subspace_form = Some(alt.tag);
        report.certificate = Some(CertificateReport::new(
            verdict.certificate.residual,
            verdict.certificate.threshold,
            &verdict.certificate.note,
        ));
        report.solution = verdict.solution.as_ref().map(matrix_to_rows);
        report.exit_code = exit_for(verdict.tag);
        if alt.tag != verdict.tag {
            report.exit_code = EXIT_INTEGRITY;
            report.message = format!(
                "checker forms disagree: stacked system says {}, Q in L0(K) says {}",
                verdict.tag, alt.tag
            );
        }
        Ok(Self {
            tolerances,
            rank_tol,
            seed,
            set: Some(set),
            verdict: Some(verdict),
            report,
        })
    }

    fn set(&self) -> &AffineMatrixSet {
        self.set.as_ref().expect("analysis completed")
    }

    fn tag(&self) -> VerdictTag {
        self.verdict.as_ref().expect("analysis completed").tag
    }

    fn finish(self) -> Outcome {
        Outcome {
            exit_code: self.report.exit_code,
            report: self.report,
        }
    }
}

fn fail(mut report: Report, code: i32, verdict: Option<VerdictTag>, message: String) -> Outcome {
    report.exit_code = code;
    report.verdict = verdict;
    report.message = message;
    Outcome {
        exit_code: code,
        report,
    }
}

fn fail_boxed(
    report: Report,
    code: i32,
    verdict: Option<VerdictTag>,
    message: String,
) -> Box<Outcome> {
    Box::new(fail(report, code, verdict, message))
}

/// Looks for a witness pair with the oracle, enlarging the sample once.
fn attach_witness(a: &mut Analysis, problem: &Problem, samples: usize) {
    for count in [samples, samples * 4] {
        match brute_force_informative(
            a.set(),
            &problem.prior,
            &problem.q,
            count,
            a.seed,
            a.tolerances.gap_tol,
            a.tolerances.agree_tol,
        ) {
            Ok(OracleOutcome::Disagree(w)) => {
                a.report.witness = Some(WitnessReport::from(&w));
                return;
            }
            Ok(OracleOutcome::Agree(_)) => continue,
            Err(e) => {
                a.report.message = format!("witness search failed: {e}");
                return;
            }
        }
    }
    a.report.message = "oracle sampling found no witness pair".into();
}

/// Decides joint informativity.
pub fn check(problem: &Problem, ov: &Overrides, samples: usize) -> Outcome {
    let mut a = match Analysis::run("check", problem, ov) {
        Ok(a) => a,
        Err(o) => return *o,
    };
    if a.report.exit_code == EXIT_NOT_INFORMATIVE {
        attach_witness(&mut a, problem, samples);
    }
    a.finish()
}

/// Decides informativity and, when informative, computes `Φ(A,Q)` from the
/// consistent set (reduced path on request).
pub fn solve(problem: &Problem, ov: &Overrides, reduced: bool) -> Outcome {
    let mut a = match Analysis::run("solve", problem, ov) {
        Ok(a) => a,
        Err(o) => return *o,
    };
    if reduced && !matches!(problem.prior, PriorKnowledge::SubspaceAction { .. }) {
        return fail(
            a.report,
            EXIT_INPUT,
            None,
            "--reduced requires a subspace_action prior".into(),
        );
    }
    if a.report.exit_code != EXIT_INFORMATIVE {
        a.report.solution = None;
        return a.finish();
    }
    let gap_tol = a.tolerances.gap_tol;
    let result = if reduced {
        let PriorKnowledge::SubspaceAction { y0, .. } = &problem.prior else {
            unreachable!("checked above")
        };
        joint_column_basis(&problem.dataset, y0, a.rank_tol)
            .and_then(|z| {
                let member =
                    pick_member_in_an(a.set(), gap_tol, a.seed, crate::DEFAULT_MAX_ATTEMPTS)?;
                compute_phi_reduced(&member, &z, &problem.q, a.rank_tol)
            })
            .map(|sol| {
                a.report.reduced = Some(ReducedReport {
                    r: sol.r(),
                    unknowns: sol.r() * sol.r(),
                    z: matrix_to_rows(&sol.z),
                    w: matrix_to_rows(&sol.w),
                });
                sol.p
            })
    } else {
        compute_phi(a.set(), &problem.q, gap_tol, a.seed)
    };
    match result {
        Ok(p) => {
            a.report.solution = Some(matrix_to_rows(&p));
            a.finish()
        }
        Err(e @ Error::Integrity(_)) => fail(
            a.report,
            EXIT_INTEGRITY,
            Some(VerdictTag::Informative),
            e.to_string(),
        ),
        Err(e) => fail(
            a.report,
            EXIT_INTEGRITY,
            Some(VerdictTag::Informative),
            format!("solution recovery failed: {e}"),
        ),
    }
}

/// Runs the checker and the sampling oracle; succeeds iff they agree.
pub fn verify(problem: &Problem, ov: &Overrides, samples: usize) -> Outcome {
    let mut a = match Analysis::run("verify", problem, ov) {
        Ok(a) => a,
        Err(o) => return *o,
    };
    if a.report.exit_code == EXIT_INTEGRITY {
        return a.finish();
    }
    let verdict = a.verdict.clone().expect("analysis completed");
    let cc = cross_check(
        &verdict,
        a.set(),
        &problem.prior,
        &problem.q,
        samples.max(2),
        a.seed,
        a.tolerances.gap_tol,
        a.tolerances.agree_tol,
    );
    match cc {
        Ok(cc) => {
            if let Some(OracleOutcome::Disagree(w)) = &cc.oracle {
                a.report.witness = Some(WitnessReport::from(w));
            }
            a.report.oracle = Some(OracleReport {
                outcome: cc.oracle.as_ref().map(OracleOutcome::tag),
                samples: cc.samples_used,
                retried: cc.retried,
                agrees_with_checker: cc.agreed,
            });
            if cc.agreed {
                a.report.exit_code = EXIT_INFORMATIVE;
            } else {
                a.report.exit_code = EXIT_INTEGRITY;
                a.report.message = format!(
                    "checker says {} but the oracle says {}",
                    a.tag(),
                    cc.oracle
                        .as_ref()
                        .map_or("the set cannot be sampled".to_string(), |o| o
                            .tag()
                            .to_string())
                );
            }
            a.finish()
        }
        Err(e) => fail(
            a.report,
            EXIT_INPUT,
            Some(verdict.tag),
            format!("oracle failed: {e}"),
        ),
    }
}

/// Output of `simulate`: the JSON document and any warnings.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub json: String,
    pub warnings: Vec<String>,
}

/// Turns a system spec into a dataset block.
///
/// The spec is either a bare generator `{A, x0, times}` (output:
/// `{n, dataset}`) or a full instance in generator mode (output: the same
/// instance with the generator replaced by the simulated dataset).
pub fn simulate(spec_text: &str) -> Result<Simulated, Error> {
    let value: serde_json::Value = serde_json::from_str(spec_text)
        .map_err(|e| Error::Input(format!("invalid system spec: {e}")))?;
    let full = value.get("generator").is_some();
    let (mut instance, generator) = if full {
        let inst: RawInstance = serde_json::from_value(value)
            .map_err(|e| Error::Input(format!("invalid instance: {e}")))?;
        let g = inst.generator.clone().expect("checked key");
        (Some(inst), g)
    } else {
        let g: RawGenerator = serde_json::from_value(value)
            .map_err(|e| Error::Input(format!("invalid system spec: {e}")))?;
        (None, g)
    };
    let n = generator.a.len();
    if let Some(inst) = &instance {
        if inst.n != n {
            return Err(Error::Input(format!(
                "generator.A: expected {}x{}, found {n} rows",
                inst.n, inst.n
            )));
        }
    }
    let (_, ds) = generator.to_dataset(n, "generator")?;
    let mut warnings = Vec::new();
    if ds.samples().iter().all(|s| s.x.iter().all(|v| *v == 0.0)) {
        warnings.push("zero trajectory: the data carry no information about A".to_string());
    }
    let dataset = RawDataset::from_dataset(&ds);
    let json = match instance.as_mut() {
        Some(inst) => {
            inst.generator = None;
            inst.dataset = Some(dataset);
            serde_json::to_string_pretty(inst)
        }
        None => serde_json::to_string_pretty(&serde_json::json!({ "n": n, "dataset": dataset })),
    }
    .expect("dataset serializes");
    Ok(Simulated { json, warnings })
}
