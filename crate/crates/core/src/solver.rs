//! Adaptive mirror descent with productive and non-productive steps.
//!
//! At iterate `x`:
//! * if every constraint satisfies `g_m(x) <= eps`, take a productive step
//!   `x <- Mirr_x(h grad f(x))` with `h = eps / ||grad f(x)||_*`;
//! * otherwise pick the smallest violating `m` and take a non-productive step
//!   `x <- Mirr_x(h grad g_m(x))` with `h = eps / ||grad g_m(x)||_*^2`.
//!
//! The loop stops as soon as `Theta_0^2 <= eps^2 / 2 * (|I| + sum_{k not in I} 1 / ||grad g_m(x^k)||_*^2)`.
//! The productive step length uses the first power of the dual norm while
//! the non-productive one uses its square; both are implemented as stated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::oracles::{max_constraint, ConstraintRef, ObjectiveRef, SelectionRule};
use crate::prox::ProxSetup;
use crate::scalar::Scalar;

/// `min f(x)` over `x in Q` subject to `g_m(x) <= 0`.
#[derive(Clone)]
pub struct Problem<S: Scalar> {
    pub objective: ObjectiveRef<S>,
    pub constraints: Vec<ConstraintRef<S>>,
    pub prox: ProxSetup<S>,
    pub epsilon: S,
    /// Any `Theta_0` with `d(x_star) <= Theta_0^2`.
    pub theta0: S,
}

impl<S: Scalar> Problem<S> {
    pub fn new(
        objective: ObjectiveRef<S>,
        constraints: Vec<ConstraintRef<S>>,
        prox: ProxSetup<S>,
        epsilon: S,
        theta0: S,
    ) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > S::zero()) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(theta0.is_finite() && theta0 > S::zero()) {
            return Err(Error::InvalidInput(format!("theta0 must be positive, got {theta0}")));
        }
        let dim = prox.dim();
        if objective.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: objective.dim() });
        }
        if let Some(g) = constraints.iter().find(|g| g.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: g.dim() });
        }
        Ok(Self { objective, constraints, prox, epsilon, theta0 })
    }

    pub fn with_epsilon(&self, epsilon: S) -> Result<Self> {
        Self::new(self.objective.clone(), self.constraints.clone(), self.prox.clone(), epsilon, self.theta0)
    }

    pub fn with_theta0(&self, theta0: S) -> Result<Self> {
        Self::new(self.objective.clone(), self.constraints.clone(), self.prox.clone(), self.epsilon, theta0)
    }

    /// Common Lipschitz constant `M_g` in the prox norm; zero without constraints.
    pub fn constraint_lipschitz(&self) -> S {
        let norm = self.prox.norm();
        self.constraints.iter().map(|g| g.lipschitz(norm)).fold(S::zero(), S::max)
    }

    pub fn iteration_bound(&self) -> Result<usize> {
        theoretical_iteration_bound(self.epsilon, self.theta0, self.constraint_lipschitz())
    }
}

impl<S: Scalar> std::fmt::Debug for Problem<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("dim", &self.prox.dim())
            .field("constraints", &self.constraints.len())
            .field("prox", &self.prox.kind())
            .field("epsilon", &self.epsilon)
            .field("theta0", &self.theta0)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Safety cap as a multiple of the theoretical iteration bound.
    pub max_iter_factor: usize,
    /// Absolute cap; overrides `max_iter_factor` when set.
    pub max_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iter_factor: 10, max_iterations: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepKind {
    Productive,
    NonProductive { constraint: usize },
}

/// One iteration: the step taken from `point` along `direction` with length `step_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct StepRecord<S> {
    pub index: usize,
    pub kind: StepKind,
    pub step_size: S,
    pub subgradient_dual_norm: S,
    pub objective_value: S,
    /// `max_m g_m(point)`; absent without constraints.
    pub max_constraint_value: Option<S>,
    pub point: Vector<S>,
    pub direction: Vector<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SolverState<S> {
    pub x: Vector<S>,
    pub iteration: usize,
    /// Indices of productive iterations, increasing.
    pub productive: Vec<usize>,
    /// `sum_{k not in I} 1 / ||grad g_m(x^k)||_*^2`.
    pub nonproductive_weight: S,
    pub steps: Vec<StepRecord<S>>,
}

impl<S: Scalar> SolverState<S> {
    pub fn new(x: Vector<S>) -> Self {
        Self { x, iteration: 0, productive: Vec::new(), nonproductive_weight: S::zero(), steps: Vec::new() }
    }

    pub fn productive_steps(&self) -> impl Iterator<Item = &StepRecord<S>> {
        self.steps.iter().filter(|s| s.kind == StepKind::Productive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CriterionMet,
    /// The objective subgradient vanished at a feasible iterate, which is then optimal.
    ZeroObjectiveSubgradient,
    SafetyCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SolverReport<S> {
    /// Best objective value among productive iterates (or the stationary point).
    pub best_productive_point: Option<Vector<S>>,
    pub best_objective_value: Option<S>,
    pub iterations_used: usize,
    pub stop_reason: StopReason,
    pub iteration_bound: usize,
    pub state: SolverState<S>,
}

/// `theta0^2 <= eps^2 / 2 * (|I| + nonproductive_weight)`.
pub fn stopping_criterion<S: Scalar>(state: &SolverState<S>, epsilon: S, theta0: S) -> bool {
    let count = S::from_count(state.productive.len()) + state.nonproductive_weight;
    theta0 * theta0 <= epsilon * epsilon / S::lit(2.0) * count
}

/// `ceil(2 max{1, M_g^2} theta0^2 / eps^2)`.
///
/// The ceiling is taken in the same arithmetic as [`stopping_criterion`], so
/// the result is the smallest `N` with `c theta0^2 <= eps^2 / 2 * N`.
pub fn theoretical_iteration_bound<S: Scalar>(epsilon: S, theta0: S, m_g: S) -> Result<usize> {
    for (name, v) in [("epsilon", epsilon), ("theta0", theta0)] {
        if !(v.is_finite() && v > S::zero()) {
            return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
        }
    }
    if !(m_g.is_finite() && m_g >= S::zero()) {
        return Err(Error::InvalidInput(format!("M_g must be nonnegative, got {m_g}")));
    }
    let c = (m_g * m_g).max(S::one());
    let target = c * theta0 * theta0;
    let raw = (S::lit(2.0) * target / (epsilon * epsilon)).ceil();
    let mut n = raw.to_usize().ok_or_else(|| Error::InvalidInput("iteration bound overflows".into()))?.max(1);
    let reached = |n: usize| target <= epsilon * epsilon / S::lit(2.0) * S::from_count(n);
    while n > 1 && reached(n - 1) {
        n -= 1;
    }
    while !reached(n) {
        n += 1;
    }
    Ok(n)
}

pub fn solve<S: Scalar>(problem: &Problem<S>, options: &SolverOptions) -> Result<SolverReport<S>> {
    let eps = problem.epsilon;
    let norm = problem.prox.norm();
    let bound = problem.iteration_bound()?;
    let cap = options.max_iterations.unwrap_or_else(|| options.max_iter_factor.saturating_mul(bound)).max(1);

    let mut state = SolverState::new(problem.prox.start_point());
    let mut best: Option<(S, Vector<S>)> = None;
    let mut stop_reason = StopReason::SafetyCap;

    while state.iteration < cap {
        let k = state.iteration;
        let x = state.x.clone();
        let gate = if problem.constraints.is_empty() {
            None
        } else {
            Some(max_constraint(&x, &problem.constraints, Some(eps))?)
        };
        let objective_value = problem.objective.value(&x)?;

        let (kind, direction, dual, h) = match gate {
            Some(c) if c.violated => {
                let gm = problem.constraints[c.index].subgradient(&x);
                let dual = gm.dual_norm(norm);
                if !(dual > S::zero()) {
                    return Err(Error::OracleInconsistency {
                        constraint: c.index,
                        iteration: k,
                        value: c.value.to_string(),
                    });
                }
                let inv = S::one() / (dual * dual);
                state.nonproductive_weight = state.nonproductive_weight + inv;
                (StepKind::NonProductive { constraint: c.index }, gm, dual, eps * inv)
            }
            _ => {
                let grad = problem.objective.subdifferential(&x)?.select(SelectionRule::MinDualNorm(norm));
                let dual = grad.dual_norm(norm);
                if best.as_ref().is_none_or(|(v, _)| objective_value < *v) {
                    best = Some((objective_value, x.clone()));
                }
                if dual == S::zero() {
                    best = Some((objective_value, x));
                    stop_reason = StopReason::ZeroObjectiveSubgradient;
                    break;
                }
                state.productive.push(k);
                (StepKind::Productive, grad, dual, eps / dual)
            }
        };

        let next = problem.prox.mirror_step(&x, &direction, h)?;
        state.steps.push(StepRecord {
            index: k,
            kind,
            step_size: h,
            subgradient_dual_norm: dual,
            objective_value,
            max_constraint_value: gate.map(|c| c.value),
            point: x,
            direction,
        });
        state.x = next;
        state.iteration += 1;

        if stopping_criterion(&state, eps, problem.theta0) {
            stop_reason = StopReason::CriterionMet;
            break;
        }
    }

    let (best_objective_value, best_productive_point) = match best {
        Some((v, p)) => (Some(v), Some(p)),
        None => (None, None),
    };
    Ok(SolverReport {
        best_productive_point,
        best_objective_value,
        iterations_used: state.iteration,
        stop_reason,
        iteration_bound: bound,
        state,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::funclib::{MaxQuadObjective, QuadraticPiece};
    use crate::geometry::FeasibleSet;
    use crate::oracles::LinearConstraint;

    fn v(c: &[f64]) -> Vector<f64> {
        Vector::from_f64(c).unwrap()
    }

    fn state(productive: usize, weight: f64) -> SolverState<f64> {
        let mut s = SolverState::new(v(&[0.0]));
        s.productive = (0..productive).collect();
        s.nonproductive_weight = weight;
        s
    }

    #[test]
    fn stopping_criterion_examples() {
        assert!(stopping_criterion(&state(200, 0.0), 0.1, 1.0));
        assert!(!stopping_criterion(&state(199, 0.0), 0.1, 1.0));
        assert!(stopping_criterion(&state(1, 0.0), 10.0, 1.0));
        assert!(stopping_criterion(&state(100, 100.0), 0.1, 1.0));
    }

    #[test]
    fn iteration_bound_examples() {
        assert_eq!(theoretical_iteration_bound(0.1, 1.0, 1.0).unwrap(), 200);
        assert_eq!(theoretical_iteration_bound(0.1, 1.0, 2.0).unwrap(), 800);
        assert_eq!(theoretical_iteration_bound(1.0, 1.0, 0.5).unwrap(), 2);
        assert_eq!(theoretical_iteration_bound(1.0, 1.0, 0.0).unwrap(), 2);
        assert!(theoretical_iteration_bound(0.0, 1.0, 1.0).is_err());
        assert!(theoretical_iteration_bound(0.1, -1.0, 1.0).is_err());
    }

    fn one_dim_benchmark(eps: f64) -> Problem<f64> {
        let domain = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let f = QuadraticPiece::new(crate::funclib::SymMatrix::diagonal(&[2.0]), v(&[0.0]), 0.0).unwrap();
        let g: ConstraintRef<f64> = Arc::new(LinearConstraint::new(v(&[-1.0]), 0.0));
        let prox = ProxSetup::euclidean(domain).unwrap().with_center(v(&[-1.0])).unwrap();
        let theta0 = prox.theta0_for(&v(&[0.0])).unwrap();
        Problem::new(Arc::new(f), vec![g], prox, eps, theta0).unwrap()
    }

    #[test]
    fn zero_subgradient_at_start() {
        let domain = FeasibleSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let f = MaxQuadObjective::new(vec![QuadraticPiece::half_squared_norm(2)], &domain).unwrap();
        let problem = Problem::new(Arc::new(f), vec![], ProxSetup::euclidean(domain).unwrap(), 0.1, 1.0).unwrap();
        let report = solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(report.stop_reason, StopReason::ZeroObjectiveSubgradient);
        assert_eq!(report.best_productive_point, Some(v(&[0.0, 0.0])));
        assert_eq!(report.iterations_used, 0);
    }

    #[test]
    fn one_dim_benchmark_stops_within_bound() {
        let problem = one_dim_benchmark(0.05);
        let report = solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(report.stop_reason, StopReason::CriterionMet);
        assert!(report.iterations_used <= report.iteration_bound);
        for step in report.state.productive_steps() {
            assert!(step.max_constraint_value.unwrap() <= 0.05);
        }
        let best = report.best_objective_value.unwrap();
        assert!(best <= 0.05 * 0.05 + 1e-12, "best value {best}");
        for w in report.state.productive.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn step_sizes_follow_the_rules() {
        let problem = one_dim_benchmark(0.1);
        let report = solve(&problem, &SolverOptions::default()).unwrap();
        for s in &report.state.steps {
            match s.kind {
                StepKind::Productive => assert_eq!(s.step_size, 0.1 / s.subgradient_dual_norm),
                StepKind::NonProductive { .. } => {
                    assert_eq!(s.step_size, 0.1 / (s.subgradient_dual_norm * s.subgradient_dual_norm))
                }
            }
        }
        assert!(report.state.steps.iter().any(|s| s.kind != StepKind::Productive));
    }

    #[test]
    fn safety_cap_and_determinism() {
        let problem = one_dim_benchmark(0.05);
        let opts = SolverOptions { max_iterations: Some(3), ..SolverOptions::default() };
        let a = solve(&problem, &opts).unwrap();
        assert_eq!(a.stop_reason, StopReason::SafetyCap);
        assert_eq!(a.iterations_used, 3);
        let b = solve(&problem, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_constraint_subgradient_is_inconsistent() {
        let problem = one_dim_benchmark(0.05);
        let bogus: ConstraintRef<f64> = Arc::new(LinearConstraint::new(v(&[0.0]), -1.0));
        let problem = Problem::new(problem.objective.clone(), vec![bogus], problem.prox.clone(), 0.05, 1.0).unwrap();
        let err = solve(&problem, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::OracleInconsistency { constraint: 0, iteration: 0, .. }));
    }

    #[test]
    fn problem_validation() {
        let p = one_dim_benchmark(0.05);
        assert!(p.with_epsilon(0.0).is_err());
        assert!(p.with_theta0(-1.0).is_err());
        assert_eq!(p.constraint_lipschitz(), 1.0);
    }
}
