//! The run pipeline: solve, verify, emit artifacts, and summarize.

use crate::artifacts;
use crate::spec::{
    build_1d, build_2d, GradientSpec, MethodSpec, Mode, ProblemSpec, SpecError, VerificationSpec,
};
use pdereduce::geometry::GradientMode;
use pdereduce::reduce1d::{self, HypothesisReport};
use pdereduce::reduce2d;
use pdereduce::verify::{self, InvarianceReport, PdeForm, ResidualReport};
use serde::Serialize;

/// Exit codes of the `run` and `verify` subcommands.
pub const EXIT_OK: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_SPEC: i32 = 4;

#[derive(Debug, Clone, Serialize)]
pub struct SolutionMeta {
    pub points: usize,
    pub domain: [f64; 2],
}

/// Machine-readable run summary, printed to stdout on every run and
/// optionally written to `outputs.summary_json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub mode: String,
    pub status: String,
    pub hypotheses: Option<HypothesisReport>,
    pub violated: Vec<String>,
    pub error: Option<String>,
    pub solution: Option<SolutionMeta>,
    pub max_hamiltonian_drift: Option<f64>,
    pub residual: Option<ResidualReport>,
    pub invariance: Option<InvarianceReport>,
    pub artifacts: Vec<String>,
}

impl Summary {
    fn new(mode: Mode) -> Summary {
        Summary {
            mode: match mode {
                Mode::Reduce1d => "reduce1d".into(),
                Mode::Reduce2d => "reduce2d".into(),
            },
            status: "ok".into(),
            hypotheses: None,
            violated: Vec::new(),
            error: None,
            solution: None,
            max_hamiltonian_drift: None,
            residual: None,
            invariance: None,
            artifacts: Vec::new(),
        }
    }
}

pub struct RunOutcome {
    pub summary: Summary,
    pub exit_code: i32,
}

/// Scalar overrides from command-line flags.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub rng_seed: Option<u64>,
    pub count: Option<usize>,
}

fn write_artifact(
    summary: &mut Summary,
    path: &Option<String>,
    render: impl FnOnce() -> String,
) -> Result<(), String> {
    if let Some(path) = path {
        artifacts::write_atomic(path, render().as_bytes())
            .map_err(|e| format!("writing {path}: {e}"))?;
        summary.artifacts.push(path.clone());
    }
    Ok(())
}

fn finish(summary: Summary, spec: &ProblemSpec, exit_code: i32) -> RunOutcome {
    // The summary artifact is written last so it reflects everything else.
    let mut summary = summary;
    if let Some(path) = &spec.outputs.summary_json {
        let rendered = serde_json::to_string_pretty(&summary).expect("serializable");
        if artifacts::write_atomic(path, rendered.as_bytes()).is_ok() {
            summary.artifacts.push(path.clone());
        }
    }
    RunOutcome { summary, exit_code }
}

/// Execute a problem spec. `force_verification` makes verification run with
/// defaults even when the spec has no `[verification]` table (the `verify`
/// subcommand contract).
pub fn run_spec(
    spec: &ProblemSpec,
    path: &str,
    overrides: Overrides,
    force_verification: bool,
) -> Result<RunOutcome, SpecError> {
    let mut spec = spec.clone();
    if let Some(tol) = overrides.tol {
        spec.numerics.tol = tol;
    }
    if let Some(seed) = overrides.rng_seed {
        spec.numerics.rng_seed = seed;
    }
    if let Some(count) = overrides.count {
        let v = spec.verification.get_or_insert_with(VerificationSpec::default);
        v.count = count;
    }
    if force_verification && spec.verification.is_none() {
        spec.verification = Some(VerificationSpec::default());
    }
    match spec.mode {
        Mode::Reduce1d => run_1d(&spec, path),
        Mode::Reduce2d => run_2d(&spec, path),
    }
}

fn gradient_mode(v: &VerificationSpec) -> GradientMode {
    match v.gradient {
        GradientSpec::Fd => GradientMode::FiniteDifference(Some(v.fd_step)),
        GradientSpec::Analytic => GradientMode::Analytic,
    }
}

fn run_1d(spec: &ProblemSpec, path: &str) -> Result<RunOutcome, SpecError> {
    let built = build_1d(spec, path)?;
    let mut summary = Summary::new(spec.mode);

    let report = match reduce1d::check_hypotheses(&built.problem) {
        Ok(r) => r,
        Err(e) => {
            summary.status = "numerical_failure".into();
            summary.error = Some(e.to_string());
            return Ok(finish(summary, spec, EXIT_NUMERICAL));
        }
    };
    summary.violated = report.violated();
    summary.hypotheses = Some(report.clone());
    if !report.pass {
        summary.status = "hypothesis_rejected".into();
        return Ok(finish(summary, spec, EXIT_HYPOTHESIS));
    }

    log::info!("hypotheses pass; integrating over {}", built.span);
    let solved = match spec.numerics.method {
        MethodSpec::Rk => reduce1d::integrate(&built.problem, spec.numerics.tol, built.span),
        MethodSpec::Quadrature => reduce1d::quadrature_eikonal(
            built.uhat.as_ref().expect("validated"),
            built.problem.profile(),
            built.problem.seed().t0,
            built.problem.seed().r0,
            built.problem.sign_branch(),
            built.span,
            spec.numerics.tol,
        ),
    };
    let solution = match solved {
        Ok(s) => s,
        Err(e) => {
            summary.status = "numerical_failure".into();
            summary.error = Some(e.to_string());
            return Ok(finish(summary, spec, EXIT_NUMERICAL));
        }
    };
    summary.solution = Some(SolutionMeta {
        points: solution.grid().len(),
        domain: [solution.domain().lo, solution.domain().hi],
    });

    if let Err(e) = write_artifact(&mut summary, &spec.outputs.solution_csv, || {
        artifacts::solution_csv(&solution)
    })
    .and_then(|_| {
        write_artifact(&mut summary, &spec.outputs.solution_json, || {
            artifacts::solution_json(&solution)
        })
    }) {
        summary.status = "numerical_failure".into();
        summary.error = Some(e);
        return Ok(finish(summary, spec, EXIT_NUMERICAL));
    }

    if let Some(vspec) = &spec.verification {
        let lifted = match reduce1d::lift_1d(solution, built.f.clone()) {
            Ok(l) => l,
            Err(e) => {
                summary.status = "numerical_failure".into();
                summary.error = Some(e.to_string());
                return Ok(finish(summary, spec, EXIT_NUMERICAL));
            }
        };
        let form = PdeForm::OneDim {
            fhat: built.problem.fhat(),
            f: &built.f,
        };
        let residual = verify::manifold_residual(
            built.f.model(),
            &form,
            &lifted,
            vspec.count,
            spec.numerics.rng_seed,
            vspec.tol,
            gradient_mode(vspec),
        );
        match residual {
            Ok(r) => {
                let pass = r.pass;
                summary.residual = Some(r);
                if !vspec.invariance_levels.is_empty() {
                    match verify::invariance_check(
                        &lifted,
                        &built.f,
                        &vspec.invariance_levels,
                        vspec.invariance_count,
                        spec.numerics.rng_seed,
                        vspec.invariance_tol,
                    ) {
                        Ok(inv) => {
                            let inv_pass = inv.pass;
                            summary.invariance = Some(inv);
                            if !inv_pass {
                                summary.status = "verification_failed".into();
                            }
                        }
                        Err(e) => {
                            summary.status = "numerical_failure".into();
                            summary.error = Some(e.to_string());
                            return Ok(finish(summary, spec, EXIT_NUMERICAL));
                        }
                    }
                }
                if !pass {
                    summary.status = "verification_failed".into();
                }
            }
            Err(e) => {
                summary.status = "numerical_failure".into();
                summary.error = Some(e.to_string());
                return Ok(finish(summary, spec, EXIT_NUMERICAL));
            }
        }
        if let Some(r) = &summary.residual {
            let rendered = serde_json::to_string_pretty(r).expect("serializable");
            if let Some(p) = &spec.outputs.residual_json {
                if let Err(e) = artifacts::write_atomic(p, rendered.as_bytes()) {
                    summary.status = "numerical_failure".into();
                    summary.error = Some(format!("writing {p}: {e}"));
                    return Ok(finish(summary, spec, EXIT_NUMERICAL));
                }
                summary.artifacts.push(p.clone());
            }
        }
    }

    let code = if summary.status == "ok" {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    };
    Ok(finish(summary, spec, code))
}

fn run_2d(spec: &ProblemSpec, path: &str) -> Result<RunOutcome, SpecError> {
    let built = build_2d(spec, path)?;
    let mut summary = Summary::new(spec.mode);

    let declared = (
        spec.seed.t0,
        spec.seed.s0.expect("validated"),
        spec.seed.r0,
    );
    let report =
        match reduce2d::check_cauchy_hypotheses(&built.problem, &built.data, Some(declared)) {
            Ok(r) => r,
            Err(e) => {
                summary.status = "numerical_failure".into();
                summary.error = Some(e.to_string());
                return Ok(finish(summary, spec, EXIT_NUMERICAL));
            }
        };
    summary.violated = report.violated();
    summary.hypotheses = Some(report.clone());
    if !report.pass {
        summary.status = "hypothesis_rejected".into();
        return Ok(finish(summary, spec, EXIT_HYPOTHESIS));
    }

    log::info!(
        "hypotheses pass; fanning {} strips over sigma {}",
        spec.numerics.zeta_grid,
        built.sigma_span
    );
    let solution = match reduce2d::solve_cauchy(
        &built.problem,
        &built.data,
        spec.numerics.zeta_grid,
        built.sigma_span,
        spec.numerics.tol,
    ) {
        Ok(s) => s,
        Err(e) => {
            summary.status = "numerical_failure".into();
            summary.error = Some(e.to_string());
            return Ok(finish(summary, spec, EXIT_NUMERICAL));
        }
    };
    summary.max_hamiltonian_drift = Some(solution.max_drift());
    summary.solution = Some(SolutionMeta {
        points: solution.strips().iter().map(|s| s.samples.len()).sum(),
        domain: [solution.base().0, solution.base().1],
    });

    if let Err(e) = write_artifact(&mut summary, &spec.outputs.strips_csv, || {
        artifacts::strips_csv(&solution)
    })
    .and_then(|_| {
        write_artifact(&mut summary, &spec.outputs.strips_json, || {
            artifacts::strips_json(&solution)
        })
    })
    .and_then(|_| {
        write_artifact(&mut summary, &spec.outputs.coverage_json, || {
            artifacts::coverage_json(&solution)
        })
    }) {
        summary.status = "numerical_failure".into();
        summary.error = Some(e);
        return Ok(finish(summary, spec, EXIT_NUMERICAL));
    }

    if let Some(vspec) = &spec.verification {
        let lifted = match reduce2d::lift_2d(
            solution,
            built.f_left.clone(),
            built.f_right.clone(),
            built.model.clone(),
        ) {
            Ok(l) => l,
            Err(e) => {
                summary.status = "numerical_failure".into();
                summary.error = Some(e.to_string());
                return Ok(finish(summary, spec, EXIT_NUMERICAL));
            }
        };
        let form = PdeForm::TwoDim {
            fhat: built.problem.fhat(),
            f_left: &built.f_left,
            f_right: &built.f_right,
        };
        match verify::manifold_residual(
            &built.model,
            &form,
            &lifted,
            vspec.count,
            spec.numerics.rng_seed,
            vspec.tol,
            gradient_mode(vspec),
        ) {
            Ok(r) => {
                if !r.pass {
                    summary.status = "verification_failed".into();
                }
                if let Some(p) = &spec.outputs.residual_json {
                    let rendered = serde_json::to_string_pretty(&r).expect("serializable");
                    if let Err(e) = artifacts::write_atomic(p, rendered.as_bytes()) {
                        summary.status = "numerical_failure".into();
                        summary.error = Some(format!("writing {p}: {e}"));
                        return Ok(finish(summary, spec, EXIT_NUMERICAL));
                    }
                    summary.artifacts.push(p.clone());
                }
                summary.residual = Some(r);
            }
            Err(e) => {
                summary.status = "numerical_failure".into();
                summary.error = Some(e.to_string());
                return Ok(finish(summary, spec, EXIT_NUMERICAL));
            }
        }
    }

    let code = if summary.status == "ok" {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    };
    Ok(finish(summary, spec, code))
}
