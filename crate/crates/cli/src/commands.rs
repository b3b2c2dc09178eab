use chrono::{SecondsFormat, Utc};
use mirrorcert::analysis::{certify, replay_mirror_steps, CertificateResult};
use mirrorcert::interp::check_interpolation;
use mirrorcert::solver::{solve, SolverOptions, SolverReport, StepKind, StopReason};
use mirrorcert::Vector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::CliError;
use crate::problem_file::{load_problem, LoadedProblem};
use crate::{CommandKind, Orientation, OutputFormat, RunConfig};

/// Rendered report plus whether every evaluated check held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub checks_passed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.checks_passed {
            0
        } else {
            1
        }
    }
}

/// Largest tolerated one-step mirror residual when replaying a trace.
const MIRROR_STEP_TOL: f64 = 1e-7;

pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    let loaded = load_problem(&config.problem_file, config.epsilon, config.theta0)?;
    let options = SolverOptions { max_iter_factor: config.max_iter_factor, max_iterations: None };
    let outcome = match &config.command {
        CommandKind::Solve => run_solve(&loaded, &options, config.output_format)?,
        CommandKind::Certify => run_certify(&loaded, &options, config.output_format)?,
        CommandKind::InterpCheck { segments, declared_l, declared_delta, orientation } => run_interp(
            &loaded,
            InterpSettings {
                segments: *segments,
                l: declared_l.unwrap_or(loaded.smoothness.lipschitz_gradient),
                delta: declared_delta.unwrap_or(loaded.smoothness.jump_budget),
                orientation: *orientation,
                seed: config.seed,
            },
            config.output_format,
        )?,
        CommandKind::Bench { epsilons } => run_bench(&loaded, epsilons, &options, config.output_format)?,
    };
    if let Some(path) = &config.output_path {
        std::fs::write(path, &outcome.output)
            .map_err(|e| CliError::Output { message: format!("{}: {e}", path.display()) })?;
    }
    Ok(outcome)
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| CliError::Output { message: e.to_string() })
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Output { message: e.to_string() })?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output { message: e.to_string() })?;
    String::from_utf8(bytes).map_err(|e| CliError::Output { message: e.to_string() })
}

/// One row of the step log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRow {
    pub iteration: usize,
    pub kind: &'static str,
    pub constraint_index: Option<usize>,
    pub step_size: f64,
    pub subgradient_dual_norm: f64,
    pub objective_value: f64,
    pub max_constraint_value: Option<f64>,
}

fn step_rows(report: &SolverReport<f64>) -> Vec<StepRow> {
    report
        .state
        .steps
        .iter()
        .map(|s| {
            let (kind, constraint_index) = match s.kind {
                StepKind::Productive => ("productive", None),
                StepKind::NonProductive { constraint } => ("non_productive", Some(constraint)),
            };
            StepRow {
                iteration: s.index,
                kind,
                constraint_index,
                step_size: s.step_size,
                subgradient_dual_norm: s.subgradient_dual_norm,
                objective_value: s.objective_value,
                max_constraint_value: s.max_constraint_value,
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SolveOutput {
    generated_at: String,
    command: &'static str,
    epsilon: f64,
    theta0: f64,
    constraint_lipschitz: f64,
    iteration_bound: usize,
    iterations_used: usize,
    stop_reason: StopReason,
    within_iteration_bound: Option<bool>,
    best_productive_point: Option<Vector<f64>>,
    best_objective_value: Option<f64>,
    productive_steps: usize,
    nonproductive_weight: f64,
    final_point: Vector<f64>,
    steps: Vec<StepRow>,
}

fn solve_checks(report: &SolverReport<f64>) -> (Option<bool>, bool) {
    let within = (report.stop_reason == StopReason::CriterionMet).then_some(report.iterations_used <= report.iteration_bound);
    let passed = report.stop_reason != StopReason::SafetyCap && within.unwrap_or(true);
    (within, passed)
}

fn run_solve(loaded: &LoadedProblem, options: &SolverOptions, format: OutputFormat) -> Result<Outcome, CliError> {
    let problem = &loaded.problem;
    let report = solve(problem, options)?;
    let (within, passed) = solve_checks(&report);
    let output = match format {
        OutputFormat::Csv => to_csv(&step_rows(&report))?,
        OutputFormat::Json => to_json(&SolveOutput {
            generated_at: timestamp(),
            command: "solve",
            epsilon: problem.epsilon,
            theta0: problem.theta0,
            constraint_lipschitz: problem.constraint_lipschitz(),
            iteration_bound: report.iteration_bound,
            iterations_used: report.iterations_used,
            stop_reason: report.stop_reason,
            within_iteration_bound: within,
            best_productive_point: report.best_productive_point.clone(),
            best_objective_value: report.best_objective_value,
            productive_steps: report.state.productive.len(),
            nonproductive_weight: report.state.nonproductive_weight,
            final_point: report.state.x.clone(),
            steps: step_rows(&report),
        })?,
    };
    Ok(Outcome { output, checks_passed: passed })
}

#[derive(Debug, Serialize)]
struct CertifyOutput {
    generated_at: String,
    command: &'static str,
    epsilon: f64,
    theta0: f64,
    declared_l: f64,
    declared_delta: f64,
    stop_reason: StopReason,
    iterations_used: usize,
    x_star: Option<Vector<f64>>,
    certificate: CertificateResult<f64>,
    mirror_step_max_residual: f64,
    mirror_step_ok: bool,
    holds: bool,
}

#[derive(Debug, Serialize)]
struct CertifyRow {
    epsilon: f64,
    stop_reason: StopReason,
    iterations_used: usize,
    iteration_bound: usize,
    min_vf: Option<f64>,
    vf_bound_holds: Option<bool>,
    objective_gap: Option<f64>,
    gap_bound: Option<f64>,
    gap_bound_holds: Option<bool>,
    constraint_residuals_ok: bool,
    max_productive_constraint: Option<f64>,
    max_nonproductive_constraint: Option<f64>,
    mirror_step_max_residual: f64,
    holds: bool,
}

fn run_certify(loaded: &LoadedProblem, options: &SolverOptions, format: OutputFormat) -> Result<Outcome, CliError> {
    let problem = &loaded.problem;
    let report = solve(problem, options)?;
    let cert = certify(&report, problem, loaded.x_star.as_ref(), loaded.smoothness)?;
    let anchor = loaded
        .x_star
        .clone()
        .or_else(|| report.best_productive_point.clone())
        .unwrap_or_else(|| report.state.x.clone());
    let mirror_residual = replay_mirror_steps(&problem.prox, &report.state.steps, &anchor)?;
    let mirror_step_max_residual = if report.state.steps.is_empty() { 0.0 } else { mirror_residual };
    let mirror_step_ok = mirror_step_max_residual <= MIRROR_STEP_TOL;
    let holds = cert.holds && mirror_step_ok;
    let output = match format {
        OutputFormat::Csv => to_csv(&[CertifyRow {
            epsilon: problem.epsilon,
            stop_reason: report.stop_reason,
            iterations_used: report.iterations_used,
            iteration_bound: cert.iteration_bound,
            min_vf: cert.min_vf,
            vf_bound_holds: cert.vf_bound_holds,
            objective_gap: cert.objective_gap,
            gap_bound: cert.gap_bound,
            gap_bound_holds: cert.gap_bound_holds,
            constraint_residuals_ok: cert.constraint_residuals_ok,
            max_productive_constraint: cert.max_productive_constraint,
            max_nonproductive_constraint: cert.max_nonproductive_constraint,
            mirror_step_max_residual,
            holds,
        }])?,
        OutputFormat::Json => to_json(&CertifyOutput {
            generated_at: timestamp(),
            command: "certify",
            epsilon: problem.epsilon,
            theta0: problem.theta0,
            declared_l: loaded.smoothness.lipschitz_gradient,
            declared_delta: loaded.smoothness.jump_budget,
            stop_reason: report.stop_reason,
            iterations_used: report.iterations_used,
            x_star: loaded.x_star.clone(),
            certificate: cert,
            mirror_step_max_residual,
            mirror_step_ok,
            holds,
        })?,
    };
    Ok(Outcome { output, checks_passed: holds })
}

struct InterpSettings {
    segments: usize,
    l: f64,
    delta: f64,
    orientation: Orientation,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct InterpRow {
    index: usize,
    x: Vector<f64>,
    y: Vector<f64>,
    residual: f64,
    bound: f64,
    tolerance: f64,
    holds: bool,
}

#[derive(Debug, Serialize)]
struct InterpCsvRow {
    index: usize,
    x: String,
    y: String,
    residual: f64,
    bound: f64,
    tolerance: f64,
    holds: bool,
}

#[derive(Debug, Serialize)]
struct InterpOutput {
    generated_at: String,
    command: &'static str,
    seed: u64,
    segments: usize,
    orientation: Orientation,
    declared_l: f64,
    declared_delta: f64,
    failures: usize,
    max_residual: Option<f64>,
    reports: Vec<InterpRow>,
}

fn join(v: &Vector<f64>) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

fn run_interp(loaded: &LoadedProblem, s: InterpSettings, format: OutputFormat) -> Result<Outcome, CliError> {
    let problem = &loaded.problem;
    let set = problem.prox.set();
    let norm = problem.prox.norm();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut rows = Vec::with_capacity(s.segments);
    for index in 0..s.segments {
        let (mut x, mut y) = (set.sample(&mut rng), set.sample(&mut rng));
        let forward = (&y - &x).sum() >= 0.0;
        let swap = match s.orientation {
            Orientation::Forward => !forward,
            Orientation::Reverse => forward,
            Orientation::Any => false,
        };
        if swap {
            std::mem::swap(&mut x, &mut y);
        }
        let r = check_interpolation(problem.objective.as_ref(), &x, &y, s.l, s.delta, norm)?;
        rows.push(InterpRow { index, x, y, residual: r.residual, bound: r.bound, tolerance: r.tolerance, holds: r.holds });
    }
    let failures = rows.iter().filter(|r| !r.holds).count();
    let max_residual = rows.iter().map(|r| r.residual).reduce(f64::max);
    let output = match format {
        OutputFormat::Csv => to_csv(
            &rows
                .iter()
                .map(|r| InterpCsvRow {
                    index: r.index,
                    x: join(&r.x),
                    y: join(&r.y),
                    residual: r.residual,
                    bound: r.bound,
                    tolerance: r.tolerance,
                    holds: r.holds,
                })
                .collect::<Vec<_>>(),
        )?,
        OutputFormat::Json => to_json(&InterpOutput {
            generated_at: timestamp(),
            command: "interp-check",
            seed: s.seed,
            segments: s.segments,
            orientation: s.orientation,
            declared_l: s.l,
            declared_delta: s.delta,
            failures,
            max_residual,
            reports: rows,
        })?,
    };
    Ok(Outcome { output, checks_passed: failures == 0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub epsilon: f64,
    pub iterations_used: usize,
    pub iteration_bound: usize,
    pub stop_reason: StopReason,
    pub within_bound: bool,
    pub best_objective_value: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BenchOutput {
    generated_at: String,
    command: &'static str,
    theta0: f64,
    constraint_lipschitz: f64,
    rows: Vec<BenchRow>,
}

fn run_bench(
    loaded: &LoadedProblem,
    epsilons: &[f64],
    options: &SolverOptions,
    format: OutputFormat,
) -> Result<Outcome, CliError> {
    if epsilons.is_empty() {
        return Err(CliError::Invalid { invariant: "epsilons".into(), message: "no epsilon values given".into() });
    }
    let problems = epsilons
        .iter()
        .map(|&e| loaded.problem.with_epsilon(e).map_err(|err| CliError::invalid("epsilon", err)))
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<Result<SolverReport<f64>, mirrorcert::Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = problems.iter().map(|p| scope.spawn(move || solve(p, options))).collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for (p, r) in problems.iter().zip(results) {
        let report = r?;
        let (_, passed) = solve_checks(&report);
        rows.push(BenchRow {
            epsilon: p.epsilon,
            iterations_used: report.iterations_used,
            iteration_bound: report.iteration_bound,
            stop_reason: report.stop_reason,
            within_bound: passed,
            best_objective_value: report.best_objective_value,
        });
    }
    let passed = rows.iter().all(|r| r.within_bound);
    let output = match format {
        OutputFormat::Csv => to_csv(&rows)?,
        OutputFormat::Json => to_json(&BenchOutput {
            generated_at: timestamp(),
            command: "bench",
            theta0: loaded.problem.theta0,
            constraint_lipschitz: loaded.problem.constraint_lipschitz(),
            rows,
        })?,
    };
    Ok(Outcome { output, checks_passed: passed })
}
