//! JSON problem files.
//!
//! ```json
//! {
//!   "objective": { "type": "maxquad", "pieces": [{ "a": [[1, 0], [0, 1]], "b": [1, 1], "alpha": 0 }] },
//!   "constraints": [{ "type": "norm_ball_residual", "center": [0, 0], "radius": 1, "norm": "l1" }],
//!   "prox": { "kind": "euclidean", "set": { "type": "box", "lower": [-2, -2], "upper": [2, 2] } },
//!   "epsilon": 0.05,
//!   "theta0": 0.7071067811865476
//! }
//! ```

use std::path::Path;
use std::sync::Arc;

use mirrorcert::{
    ConstraintRef, CountableKinkFunction, FeasibleSet, LinearConstraint, MaxQuadObjective, NormBallResidual, NormKind,
    ObjectiveRef, Problem, ProxSetup, QuadraticPiece, SetKind, Smoothness, SymMatrix, Vector,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prox: Option<ProxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    /// Known minimizer, used by `certify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    /// Overrides the objective's declared `(L, delta)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<Smoothness<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// Piecewise-linear function on `[0, 1]` with kinks at `1 - 2^-n`,
    /// optionally lifted along `direction` from `origin`.
    CountableKinks {
        k: f64,
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
    },
    Maxquad {
        pieces: Vec<PieceSpec>,
    },
    Quadratic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Linear {
        a: Vec<f64>,
        b: f64,
    },
    NormBallResidual {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "euclidean")]
        norm: NormKind,
    },
}

fn euclidean() -> NormKind {
    NormKind::Euclidean
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxKindSpec {
    Euclidean,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxSpec {
    pub kind: ProxKindSpec,
    pub set: SetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Simplex { dimension: usize },
}

/// A validated problem together with the file it came from.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub spec: ProblemFile,
    pub problem: Problem<f64>,
    pub smoothness: Smoothness<f64>,
    pub x_star: Option<Vector<f64>>,
}

pub fn parse_problem(text: &str, origin: &str) -> Result<ProblemFile, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let spec: ProblemFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        CliError::Parse {
            path: origin.to_string(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| CliError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        field: String::new(),
        message: e.to_string(),
    })?;
    Ok(spec)
}

pub fn read_problem_file(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_problem(&text, &path.display().to_string())
}

/// Reads, parses and validates a problem file; flags override `epsilon` and `theta0`.
pub fn load_problem(path: &Path, epsilon: Option<f64>, theta0: Option<f64>) -> Result<LoadedProblem, CliError> {
    build(read_problem_file(path)?, epsilon, theta0)
}

fn vector(coords: &[f64], what: &str) -> Result<Vector<f64>, CliError> {
    Vector::from_f64(coords).map_err(|e| CliError::invalid(what, e))
}

fn build_set(spec: &SetSpec) -> Result<FeasibleSet<f64>, CliError> {
    let kind = match spec {
        SetSpec::Box { lower, upper } => {
            SetKind::Box { lower: vector(lower, "prox.set.lower")?, upper: vector(upper, "prox.set.upper")? }
        }
        SetSpec::Ball { center, radius } => {
            SetKind::EuclideanBall { center: vector(center, "prox.set.center")?, radius: *radius }
        }
        SetSpec::Simplex { dimension } => SetKind::Simplex { dimension: *dimension },
    };
    FeasibleSet::new(kind).map_err(|e| CliError::invalid("prox.set", e))
}

fn build_prox(spec: &ProxSpec) -> Result<ProxSetup<f64>, CliError> {
    let set = build_set(&spec.set)?;
    let prox = match spec.kind {
        ProxKindSpec::Euclidean => ProxSetup::euclidean(set),
        ProxKindSpec::Entropy => ProxSetup::entropy(set),
    }
    .map_err(|e| CliError::invalid("prox.kind", e))?;
    match &spec.center {
        Some(c) => prox.with_center(vector(c, "prox.center")?).map_err(|e| CliError::invalid("prox.center", e)),
        None => Ok(prox),
    }
}

fn default_prox(objective: &ObjectiveSpec) -> Result<ProxSpec, CliError> {
    match objective {
        ObjectiveSpec::CountableKinks { origin: None, direction: None, .. } => Ok(ProxSpec {
            kind: ProxKindSpec::Euclidean,
            set: SetSpec::Box { lower: vec![0.0], upper: vec![1.0] },
            center: None,
        }),
        _ => Err(CliError::Invalid {
            invariant: "prox".into(),
            message: "a prox setup is required for this objective".into(),
        }),
    }
}

fn build_objective(spec: &ObjectiveSpec, domain: &FeasibleSet<f64>) -> Result<ObjectiveRef<f64>, CliError> {
    let piece = |i: usize, a: &[Vec<f64>], b: &[f64], alpha: f64| -> Result<QuadraticPiece<f64>, CliError> {
        let field = format!("objective.pieces[{i}]");
        let m = SymMatrix::new(a.to_vec()).map_err(|e| CliError::invalid(&field, e))?;
        QuadraticPiece::new(m, vector(b, &field)?, alpha).map_err(|e| match e {
            mirrorcert::Error::NotPositiveSemidefinite { min_eigenvalue, .. } => CliError::invalid(
                &field,
                mirrorcert::Error::NotPositiveSemidefinite { piece: i, min_eigenvalue },
            ),
            other => CliError::invalid(&field, other),
        })
    };
    let objective: ObjectiveRef<f64> = match spec {
        ObjectiveSpec::CountableKinks { k, delta, origin, direction } => {
            let f = CountableKinkFunction::new(*k, *delta).map_err(|e| CliError::invalid("objective", e))?;
            match (origin, direction) {
                (None, None) => Arc::new(f.lifted_1d()),
                _ => {
                    let dim = domain.dim();
                    let o = origin.clone().unwrap_or_else(|| vec![0.0; dim]);
                    let d = direction.clone().unwrap_or_else(|| {
                        let mut d = vec![0.0; dim];
                        d[0] = 1.0;
                        d
                    });
                    let lifted = mirrorcert::LiftedKinkFunction::new(
                        f,
                        vector(&o, "objective.origin")?,
                        vector(&d, "objective.direction")?,
                    )
                    .map_err(|e| CliError::invalid("objective.direction", e))?;
                    Arc::new(lifted)
                }
            }
        }
        ObjectiveSpec::Maxquad { pieces } => {
            let built = pieces
                .iter()
                .enumerate()
                .map(|(i, p)| piece(i, &p.a, &p.b, p.alpha))
                .collect::<Result<Vec<_>, _>>()?;
            Arc::new(MaxQuadObjective::new(built, domain).map_err(|e| CliError::invalid("objective.pieces", e))?)
        }
        ObjectiveSpec::Quadratic { a, b, alpha } => Arc::new(piece(0, a, b, *alpha)?),
    };
    Ok(objective)
}

fn build_constraint(i: usize, spec: &ConstraintSpec) -> Result<ConstraintRef<f64>, CliError> {
    let field = format!("constraints[{i}]");
    Ok(match spec {
        ConstraintSpec::Linear { a, b } => Arc::new(LinearConstraint::new(vector(a, &field)?, *b)),
        ConstraintSpec::NormBallResidual { center, radius, norm } => Arc::new(
            NormBallResidual::new(vector(center, &field)?, *radius, *norm).map_err(|e| CliError::invalid(&field, e))?,
        ),
    })
}

/// Validates a parsed file into a [`Problem`].
pub fn build(spec: ProblemFile, epsilon: Option<f64>, theta0: Option<f64>) -> Result<LoadedProblem, CliError> {
    let prox_spec = match &spec.prox {
        Some(p) => p.clone(),
        None => default_prox(&spec.objective)?,
    };
    let prox = build_prox(&prox_spec)?;
    let objective = build_objective(&spec.objective, prox.set())?;
    let constraints = spec
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| build_constraint(i, c))
        .collect::<Result<Vec<_>, _>>()?;
    let epsilon = epsilon.or(spec.epsilon).ok_or_else(|| CliError::Invalid {
        invariant: "epsilon".into(),
        message: "epsilon is required (file or --epsilon)".into(),
    })?;
    let x_star = spec.x_star.as_deref().map(|c| vector(c, "x_star")).transpose()?;
    let theta0 = match theta0.or(spec.theta0) {
        Some(t) => t,
        None => match &x_star {
            Some(xs) => prox.theta0_for(xs).map_err(|e| CliError::invalid("x_star", e))?,
            None => {
                return Err(CliError::Invalid {
                    invariant: "theta0".into(),
                    message: "theta0 is required (file, --theta0, or x_star)".into(),
                })
            }
        },
    };
    let smoothness = spec.smoothness.unwrap_or_else(|| objective.smoothness());
    let problem = Problem::new(objective, constraints, prox, epsilon, theta0).map_err(|e| {
        let invariant = match &e {
            mirrorcert::Error::InvalidInput(m) if m.starts_with("epsilon") => "epsilon",
            mirrorcert::Error::InvalidInput(m) if m.starts_with("theta0") => "theta0",
            _ => "dimensions",
        };
        CliError::invalid(invariant, e)
    })?;
    if let Some(xs) = &x_star {
        xs.check_dim(problem.prox.dim()).map_err(|e| CliError::invalid("x_star", e))?;
    }
    Ok(LoadedProblem { spec, problem, smoothness, x_star })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_quadratic_file() {
        let text = r#"{
            "objective": {"type": "quadratic", "a": [[1.0]], "b": [0.0]},
            "prox": {"kind": "euclidean", "set": {"type": "box", "lower": [-1], "upper": [1]}},
            "epsilon": 0.1, "theta0": 1.0
        }"#;
        let loaded = build(parse_problem(text, "inline").unwrap(), None, None).unwrap();
        assert!(loaded.problem.constraints.is_empty());
        assert_eq!(loaded.problem.constraint_lipschitz(), 0.0);
    }

    #[test]
    fn non_psd_piece_is_named() {
        let text = r#"{
            "objective": {"type": "maxquad", "pieces": [
                {"a": [[1.0]], "b": [0.0]},
                {"a": [[-2.0]], "b": [0.0]}
            ]},
            "prox": {"kind": "euclidean", "set": {"type": "box", "lower": [-1], "upper": [1]}},
            "epsilon": 0.1, "theta0": 1.0
        }"#;
        let err = build(parse_problem(text, "inline").unwrap(), None, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("objective.pieces[1]"), "{msg}");
        assert!(msg.contains("piece 1"), "{msg}");
    }

    #[test]
    fn kink_objective_defaults_to_unit_interval_and_round_trips() {
        let text = r#"{"objective": {"type": "countable_kinks", "k": 1.0, "delta": 1.0}, "epsilon": 0.1, "theta0": 1.0}"#;
        let spec = parse_problem(text, "inline").unwrap();
        let loaded = build(spec.clone(), None, None).unwrap();
        assert_eq!(loaded.problem.prox.dim(), 1);
        let again = parse_problem(&serde_json::to_string(&spec).unwrap(), "again").unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn parse_errors_carry_location() {
        let text = "{\n  \"objective\": {\"type\": \"quadratic\", \"a\": [[1.0]], \"b\": \"oops\"}\n}";
        match parse_problem(text, "inline").unwrap_err() {
            CliError::Parse { line, field, .. } => {
                // tagged objects are buffered, so the position is the end of the object
                assert!(line >= 2, "line {line}");
                assert!(field.starts_with("objective"), "field {field}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_problem("{\"objective\": {\"type\": \"nope\"}}", "x"), Err(CliError::Parse { .. })));
    }

    #[test]
    fn missing_parameters_are_reported() {
        let text = r#"{"objective": {"type": "countable_kinks", "k": 1.0, "delta": 1.0}}"#;
        let err = build(parse_problem(text, "inline").unwrap(), None, None).unwrap_err();
        assert!(matches!(err, CliError::Invalid { ref invariant, .. } if invariant == "epsilon"));
        let err = build(parse_problem(text, "inline").unwrap(), Some(-1.0), Some(1.0)).unwrap_err();
        assert!(matches!(err, CliError::Invalid { ref invariant, .. } if invariant == "epsilon"));
        let loaded = build(parse_problem(text, "inline").unwrap(), Some(0.1), Some(1.0)).unwrap();
        assert_eq!(loaded.problem.epsilon, 0.1);
    }

    #[test]
    fn theta0_from_known_minimizer() {
        let text = r#"{
            "objective": {"type": "quadratic", "a": [[2.0]], "b": [0.0]},
            "constraints": [{"type": "linear", "a": [-1.0], "b": 0.0}],
            "prox": {"kind": "euclidean", "set": {"type": "box", "lower": [-1], "upper": [1]}, "center": [-1]},
            "epsilon": 0.05, "x_star": [0.0]
        }"#;
        let loaded = build(parse_problem(text, "inline").unwrap(), None, None).unwrap();
        assert_eq!(loaded.problem.theta0, 0.5f64.sqrt());
        assert_eq!(loaded.smoothness, Smoothness::smooth(2.0));
    }
}
