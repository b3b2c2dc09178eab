//! Post-hoc certificates for solver runs.
//!
//! * `v_f(x, y) = <g / ||g||_*, x - y>` with `g` the minimal-norm subgradient at `x`.
//! * `omega(tau) = max { f(x) - f(x_star) : x in Q, ||x - x_star|| <= tau }`,
//!   evaluated by brute force on a grid of `Q` (dimension at most 3).
//! * `f(x) - f(x_star) <= omega(v_f(x, x_star))`, checked with explicit grid slack.
//! * The run certificate: `min_{k in I} v_f(x^k, x_star) < eps`, the objective
//!   gap bound `eps (||grad f(x_star)||_* + delta) + L eps^2 / 2`, and
//!   `g_m(x^k) <= eps` at productive iterates.
//! * The one-step mirror inequality
//!   `h <p, x - u> <= h^2/2 ||p||_*^2 + V(x, u) - V(z, u)` with `z = Mirr_x(h p)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, NormKind, SetKind, Vector};
use crate::oracles::{Objective, SelectionRule, Smoothness};
use crate::prox::ProxSetup;
use crate::scalar::Scalar;
use crate::solver::{Problem, SolverReport, StepRecord, StopReason};

/// Slack used by every comparison in a [`CertificateResult`].
pub const CERTIFICATE_SLACK: f64 = 1e-9;

/// `<g / ||g||_*, x - y>` for a given nonzero `g`.
pub fn v_f_with<S: Scalar>(g: &Vector<S>, x: &Vector<S>, y: &Vector<S>, norm: NormKind) -> Result<S> {
    let dual = g.dual_norm(norm);
    if dual == S::zero() {
        return Err(Error::ZeroSubgradient);
    }
    Ok(g.dot(&(x - y)) / dual)
}

/// `v_f(x, y)` using the minimal dual-norm subgradient, as the solver does.
pub fn v_f<S: Scalar>(f: &dyn Objective<S>, x: &Vector<S>, y: &Vector<S>, norm: NormKind) -> Result<S> {
    let g = f.subdifferential(x)?.select(SelectionRule::MinDualNorm(norm));
    v_f_with(&g, x, y, norm)
}

/// Euclidean distance from `x_star` to the hyperplane `{y : <g, y - x> = 0}`.
pub fn hyperplane_distance<S: Scalar>(g: &Vector<S>, x: &Vector<S>, x_star: &Vector<S>) -> Result<S> {
    let gg = g.dot(g);
    if gg == S::zero() {
        return Err(Error::ZeroSubgradient);
    }
    let foot = x_star.axpy(g.dot(&(x - x_star)) / gg, g);
    Ok(foot.distance(x_star, NormKind::Euclidean))
}

/// Default grid resolution (points per axis) for a parameter dimension.
fn default_resolution(dim: usize) -> usize {
    match dim {
        0 => 1,
        1 => 10_001,
        2 => 301,
        _ => 61,
    }
}

/// Precomputed brute-force `omega` for one `(f, x_star, Q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct OmegaGrid<S> {
    x_star: Vector<S>,
    f_star: S,
    norm: NormKind,
    /// `(distance to x_star, running max of f - f_star)`, by increasing distance.
    profile: Vec<(S, S)>,
    /// Diameter of one grid cell in `norm`.
    pub cell_diameter: S,
    /// Largest difference quotient between neighbouring grid points.
    pub lipschitz_estimate: S,
}

impl<S: Scalar> OmegaGrid<S> {
    pub fn new(
        f: &dyn Objective<S>,
        x_star: &Vector<S>,
        set: &FeasibleSet<S>,
        norm: NormKind,
        resolution: Option<usize>,
    ) -> Result<Self> {
        let dim = set.dim();
        if dim > 3 {
            return Err(Error::Unsupported(format!("grid search for omega in dimension {dim}")));
        }
        x_star.check_dim(dim)?;
        if !set.contains(x_star)? {
            return Err(Error::NotInSet);
        }
        let f_star = f.value(x_star)?;

        // simplex points are parametrized by their first n - 1 coordinates
        let simplex = matches!(set.kind(), SetKind::Simplex { .. });
        let pdim = if simplex { dim - 1 } else { dim };
        let res = resolution.unwrap_or_else(|| default_resolution(pdim)).max(2);
        let (lo, hi) = if simplex {
            (vec![S::zero(); pdim], vec![S::one(); pdim])
        } else {
            set.bounding_box()
        };
        let steps: Vec<S> = (0..pdim).map(|i| (hi[i] - lo[i]) / S::from_count(res - 1)).collect();
        let count = if pdim == 0 { 1 } else { res.pow(pdim as u32) };

        let embed = |idx: usize| -> Vector<S> {
            let mut rem = idx;
            let mut coords: Vec<S> = (0..pdim)
                .map(|i| {
                    let k = rem % res;
                    rem /= res;
                    if k == res - 1 { hi[i] } else { lo[i] + S::from_count(k) * steps[i] }
                })
                .collect();
            if simplex {
                let rest = S::one() - coords.iter().copied().sum::<S>();
                coords.push(rest);
            }
            Vector::from_vec_unchecked(coords)
        };

        let mut values: Vec<Option<(Vector<S>, S)>> = Vec::with_capacity(count);
        for idx in 0..count {
            let p = embed(idx);
            values.push(if set.contains(&p)? { Some((p.clone(), f.value(&p)?)) } else { None });
        }

        let mut lipschitz = S::zero();
        for idx in 0..count {
            let Some((p, fp)) = &values[idx] else { continue };
            let mut stride = 1;
            for _ in 0..pdim {
                if (idx / stride) % res + 1 < res {
                    if let Some((q, fq)) = &values[idx + stride] {
                        let d = p.distance(q, norm);
                        if d > S::zero() {
                            lipschitz = lipschitz.max((*fq - *fp).abs() / d);
                        }
                    }
                }
                stride *= res;
            }
        }

        let cell_diameter = if simplex {
            S::lit(2.0) * steps.iter().copied().sum::<S>()
        } else if pdim == 0 {
            S::zero()
        } else {
            norm.eval(&steps)
        };

        let mut profile: Vec<(S, S)> = values
            .into_iter()
            .flatten()
            .map(|(p, fp)| (p.distance(x_star, norm), fp - f_star))
            .collect();
        profile.push((S::zero(), S::zero()));
        profile.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut running = S::neg_infinity();
        for entry in profile.iter_mut() {
            running = running.max(entry.1);
            entry.1 = running;
        }

        Ok(Self { x_star: x_star.clone(), f_star, norm, profile, cell_diameter, lipschitz_estimate: lipschitz })
    }

    pub fn x_star(&self) -> &Vector<S> {
        &self.x_star
    }

    pub fn f_star(&self) -> S {
        self.f_star
    }

    /// Grid maximum of `f - f(x_star)` over points within `tau` of `x_star`.
    /// Nondecreasing in `tau` by construction.
    pub fn omega(&self, tau: S) -> Result<S> {
        if !(tau >= S::zero()) {
            return Err(Error::InvalidInput(format!("tau must be nonnegative, got {tau}")));
        }
        let end = self.profile.partition_point(|(d, _)| *d <= tau);
        Ok(self.profile[end - 1].1)
    }

    /// Allowance for grid discretization when comparing against `omega`.
    pub fn slack(&self) -> S {
        S::lit(2.0) * self.lipschitz_estimate * self.cell_diameter + S::lit(1e-12) * (S::one() + self.f_star.abs())
    }

    /// `f(x) - f(x_star) <= omega(v_f(x, x_star)) + slack`.
    pub fn check(&self, f: &dyn Objective<S>, x: &Vector<S>) -> Result<OmegaGapReport<S>> {
        let vf = v_f(f, x, &self.x_star, self.norm)?;
        let gap = f.value(x)? - self.f_star;
        let omega = self.omega(vf.max(S::zero()))?;
        let slack = self.slack();
        Ok(OmegaGapReport { vf, gap, omega, slack, holds: gap <= omega + slack })
    }
}

/// One-shot `omega(tau)`.
pub fn omega<S: Scalar>(
    f: &dyn Objective<S>,
    x_star: &Vector<S>,
    tau: S,
    set: &FeasibleSet<S>,
    norm: NormKind,
    resolution: Option<usize>,
) -> Result<S> {
    if !(tau >= S::zero()) {
        return Err(Error::InvalidInput(format!("tau must be nonnegative, got {tau}")));
    }
    OmegaGrid::new(f, x_star, set, norm, resolution)?.omega(tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct OmegaGapReport<S> {
    pub vf: S,
    pub gap: S,
    pub omega: S,
    pub slack: S,
    pub holds: bool,
}

/// `f(x) - f(x_star) <= omega(v_f(x, x_star))` with a freshly built grid.
pub fn omega_gap_check<S: Scalar>(
    f: &dyn Objective<S>,
    x: &Vector<S>,
    x_star: &Vector<S>,
    set: &FeasibleSet<S>,
    norm: NormKind,
) -> Result<OmegaGapReport<S>> {
    OmegaGrid::new(f, x_star, set, norm, None)?.check(f, x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CertificateResult<S> {
    /// False when the run hit the safety cap; the `v_f` and gap clauses are then not evaluated.
    pub vf_clauses_applicable: bool,
    pub min_vf: Option<S>,
    pub vf_bound_holds: Option<bool>,
    pub objective_gap: Option<S>,
    pub gap_bound: Option<S>,
    pub gap_bound_holds: Option<bool>,
    /// `g_m(x^k) <= eps` for every productive `k` and every `m`.
    pub constraint_residuals_ok: bool,
    pub max_productive_constraint: Option<S>,
    /// Reported for information; not part of the certificate.
    pub max_nonproductive_constraint: Option<S>,
    pub iteration_bound: usize,
    pub within_iteration_bound: Option<bool>,
    /// All evaluated clauses hold.
    pub holds: bool,
}

/// Audits a solver run against the guarantees for the declared `(L, delta)`.
///
/// A stop on a zero objective subgradient contributes its terminal point as
/// a stationary candidate with `v_f = 0`.
pub fn certify<S: Scalar>(
    report: &SolverReport<S>,
    problem: &Problem<S>,
    x_star: Option<&Vector<S>>,
    smoothness: Smoothness<S>,
) -> Result<CertificateResult<S>> {
    let eps = problem.epsilon;
    let slack = S::lit(CERTIFICATE_SLACK);
    let norm = problem.prox.norm();
    let f = problem.objective.as_ref();

    let mut candidates: Vec<&Vector<S>> = report.state.productive_steps().map(|s| &s.point).collect();
    let stationary = match (&report.stop_reason, &report.best_productive_point) {
        (StopReason::ZeroObjectiveSubgradient, Some(p)) => Some(p),
        _ => None,
    };
    candidates.extend(stationary);
    if candidates.is_empty() {
        return Err(Error::EmptyProductiveSet);
    }

    let max_g = |p: &Vector<S>| -> Option<S> {
        problem.constraints.iter().map(|g| g.value(p)).reduce(S::max)
    };
    let max_productive_constraint = candidates.iter().filter_map(|p| max_g(p)).reduce(S::max);
    let max_nonproductive_constraint = report
        .state
        .steps
        .iter()
        .filter(|s| s.kind != crate::solver::StepKind::Productive)
        .filter_map(|s| max_g(&s.point))
        .reduce(S::max);
    let constraint_residuals_ok = max_productive_constraint.is_none_or(|m| m <= eps + slack);

    let vf_clauses_applicable = report.stop_reason != StopReason::SafetyCap;
    let (mut min_vf, mut objective_gap, mut gap_bound) = (None, None, None);
    if let (true, Some(xs)) = (vf_clauses_applicable, x_star) {
        let mut best_vf = S::infinity();
        let mut best_f = S::infinity();
        for p in &candidates {
            let vf = match v_f(f, p, xs, norm) {
                Ok(v) => v,
                Err(Error::ZeroSubgradient) => S::zero(),
                Err(e) => return Err(e),
            };
            best_vf = best_vf.min(vf);
            best_f = best_f.min(f.value(p)?);
        }
        let g_star = f.subdifferential(xs)?.max_dual_norm(norm);
        min_vf = Some(best_vf);
        objective_gap = Some(best_f - f.value(xs)?);
        gap_bound = Some(
            eps * (g_star + smoothness.jump_budget) + smoothness.lipschitz_gradient * eps * eps / S::lit(2.0),
        );
    }
    let vf_bound_holds = min_vf.map(|v| v < eps + slack);
    let gap_bound_holds = objective_gap.zip(gap_bound).map(|(g, b)| g <= b + slack);

    let iteration_bound = problem.iteration_bound()?;
    let within_iteration_bound =
        (report.stop_reason == StopReason::CriterionMet).then_some(report.iterations_used <= iteration_bound);

    let holds = constraint_residuals_ok
        && vf_bound_holds.unwrap_or(true)
        && gap_bound_holds.unwrap_or(true)
        && within_iteration_bound.unwrap_or(true);
    Ok(CertificateResult {
        vf_clauses_applicable,
        min_vf,
        vf_bound_holds,
        objective_gap,
        gap_bound,
        gap_bound_holds,
        constraint_residuals_ok,
        max_productive_constraint,
        max_nonproductive_constraint,
        iteration_bound,
        within_iteration_bound,
        holds,
    })
}

/// `h <p, x - u> - (h^2/2 ||p||_*^2 + V(x, u) - V(z, u))` with `z = Mirr_x(h p)`; never positive in exact arithmetic.
pub fn mirror_step_residual<S: Scalar>(prox: &ProxSetup<S>, x: &Vector<S>, p: &Vector<S>, h: S, u: &Vector<S>) -> Result<S> {
    let z = prox.mirror_step(x, p, h)?;
    let lhs = h * p.dot(&(x - u));
    let dual = p.dual_norm(prox.norm());
    let rhs = h * h / S::lit(2.0) * dual * dual + prox.bregman(x, u)? - prox.bregman(&z, u)?;
    Ok(lhs - rhs)
}

/// Largest one-step residual over a recorded trace, against comparison point `u`.
pub fn replay_mirror_steps<S: Scalar>(prox: &ProxSetup<S>, steps: &[StepRecord<S>], u: &Vector<S>) -> Result<S> {
    steps
        .iter()
        .map(|s| mirror_step_residual(prox, &s.point, &s.direction, s.step_size, u))
        .try_fold(S::neg_infinity(), |m, r| r.map(|r| m.max(r)))
}
