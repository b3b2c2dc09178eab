use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NormKind, Vector};
use crate::scalar::Scalar;

/// Representation of a Clarke subdifferential at a point.
///
/// Polyhedral subdifferentials are stored by their extreme points; a 1-D
/// interval gets its own variant so that kinks of scalar functions read
/// naturally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SubgradientSet<S> {
    Singleton { gradient: Vector<S> },
    Interval1D { lo: S, hi: S },
    VertexHull { vertices: Vec<Vector<S>> },
}

/// How to pick one element of a [`SubgradientSet`].
#[derive(Debug, Clone, Copy)]
pub enum SelectionRule<'a, S> {
    /// Element of minimal dual norm, for the given primal norm.
    MinDualNorm(NormKind),
    /// The i-th extreme point (index taken modulo the number of extreme points).
    ExtremePoint(usize),
    /// Element minimizing `|increment - <g, direction>|`, i.e. the residual of
    /// the interpolation inequality between `x` and `y = x + direction` with
    /// `increment = f(y) - f(x)`.
    BestForInterpolation { direction: &'a Vector<S>, increment: S },
}

const INTERPOLATION_GRID: usize = 10;
const ENUMERATION_LIMIT: usize = 12;

impl<S: Scalar> SubgradientSet<S> {
    pub fn singleton(gradient: Vector<S>) -> Self {
        Self::Singleton { gradient }
    }

    pub fn interval(lo: S, hi: S) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::NonFinite("interval endpoints"));
        }
        if lo > hi {
            return Err(Error::InvalidInput(format!("interval requires lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Self::Interval1D { lo, hi })
    }

    /// Convex hull of `vertices`; exact duplicates are dropped and a single
    /// remaining vertex collapses to a singleton.
    pub fn hull(vertices: Vec<Vector<S>>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidInput("subgradient hull needs at least one vertex".into()))?;
        let dim = first.dim();
        let mut unique: Vec<Vector<S>> = Vec::with_capacity(vertices.len());
        for v in vertices {
            v.check_dim(dim)?;
            if !unique.contains(&v) {
                unique.push(v);
            }
        }
        if unique.len() == 1 {
            Ok(Self::Singleton { gradient: unique.pop().unwrap() })
        } else {
            Ok(Self::VertexHull { vertices: unique })
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Singleton { gradient } => gradient.dim(),
            Self::Interval1D { .. } => 1,
            Self::VertexHull { vertices } => vertices[0].dim(),
        }
    }

    pub fn is_singleton(&self) -> bool {
        match self {
            Self::Singleton { .. } => true,
            Self::Interval1D { lo, hi } => lo == hi,
            Self::VertexHull { .. } => false,
        }
    }

    pub fn extreme_points(&self) -> Vec<Vector<S>> {
        match self {
            Self::Singleton { gradient } => vec![gradient.clone()],
            Self::Interval1D { lo, hi } if lo == hi => vec![Vector::scalar(*lo)],
            Self::Interval1D { lo, hi } => vec![Vector::scalar(*lo), Vector::scalar(*hi)],
            Self::VertexHull { vertices } => vertices.clone(),
        }
    }

    /// `max { ||u - v||_* : u, v in the set }`.
    pub fn diameter(&self, primal: NormKind) -> S {
        let pts = self.extreme_points();
        let mut best = S::zero();
        for (i, u) in pts.iter().enumerate() {
            for v in &pts[i + 1..] {
                best = best.max((u - v).dual_norm(primal));
            }
        }
        best
    }

    /// Support function `max { <v, h> : v in the set }`.
    pub fn support(&self, h: &Vector<S>) -> S {
        self.extreme_points()
            .iter()
            .map(|v| v.dot(h))
            .fold(S::neg_infinity(), S::max)
    }

    /// Largest dual norm over the set (attained at an extreme point).
    pub fn max_dual_norm(&self, primal: NormKind) -> S {
        self.extreme_points()
            .iter()
            .map(|v| v.dual_norm(primal))
            .fold(S::zero(), S::max)
    }

    /// Membership up to an absolute Euclidean tolerance.
    pub fn contains(&self, v: &Vector<S>, tol: S) -> bool {
        if v.dim() != self.dim() {
            return false;
        }
        match self {
            Self::Singleton { gradient } => v.distance(gradient, NormKind::Euclidean) <= tol,
            Self::Interval1D { lo, hi } => v[0] >= *lo - tol && v[0] <= *hi + tol,
            Self::VertexHull { vertices } => {
                let shifted: Vec<Vector<S>> = vertices.iter().map(|u| u - v).collect();
                min_norm_euclidean(&shifted).norm(NormKind::Euclidean) <= tol
            }
        }
    }

    pub fn select(&self, rule: SelectionRule<'_, S>) -> Vector<S> {
        match rule {
            SelectionRule::MinDualNorm(primal) => self.min_dual_norm_element(primal),
            SelectionRule::ExtremePoint(i) => {
                let pts = self.extreme_points();
                pts[i % pts.len()].clone()
            }
            SelectionRule::BestForInterpolation { direction, increment } => {
                let mut best: Option<(S, Vector<S>)> = None;
                for g in self.interpolation_candidates() {
                    let r = (increment - g.dot(direction)).abs();
                    if best.as_ref().is_none_or(|(b, _)| r < *b) {
                        best = Some((r, g));
                    }
                }
                best.expect("candidate list is nonempty").1
            }
        }
    }

    /// Extreme points followed by a uniform grid on each edge between
    /// consecutive extreme points.
    pub fn interpolation_candidates(&self) -> Vec<Vector<S>> {
        let pts = self.extreme_points();
        let mut out = pts.clone();
        let edges: Vec<(usize, usize)> = match pts.len() {
            1 => vec![],
            2 => vec![(0, 1)],
            k => (0..k).map(|i| (i, (i + 1) % k)).collect(),
        };
        let steps = S::from_count(INTERPOLATION_GRID + 1);
        for (a, b) in edges {
            for j in 1..=INTERPOLATION_GRID {
                out.push(pts[a].lerp(&pts[b], S::from_count(j) / steps));
            }
        }
        out
    }

    fn min_dual_norm_element(&self, primal: NormKind) -> Vector<S> {
        match self {
            Self::Singleton { gradient } => gradient.clone(),
            Self::Interval1D { lo, hi } => {
                if *lo <= S::zero() && *hi >= S::zero() {
                    Vector::scalar(S::zero())
                } else if lo.abs() <= hi.abs() {
                    Vector::scalar(*lo)
                } else {
                    Vector::scalar(*hi)
                }
            }
            Self::VertexHull { vertices } => match primal {
                NormKind::Euclidean => min_norm_euclidean(vertices),
                other => min_norm_polyhedral(vertices, other),
            },
        }
    }
}

/// Minimum Euclidean-norm point of `conv(vertices)`.
///
/// Exact for up to `ENUMERATION_LIMIT` vertices: every candidate support
/// set of size at most `n + 1` is solved through the KKT system of the
/// affine-hull problem and infeasible (negative-weight) solutions are
/// discarded. Larger inputs fall back to Frank-Wolfe with exact line search.
pub(crate) fn min_norm_euclidean<S: Scalar>(vertices: &[Vector<S>]) -> Vector<S> {
    let k = vertices.len();
    let n = vertices[0].dim();
    if k > ENUMERATION_LIMIT {
        return frank_wolfe_min_norm(vertices);
    }
    let mut best = vertices
        .iter()
        .min_by(|a, b| {
            a.norm(NormKind::Euclidean)
                .partial_cmp(&b.norm(NormKind::Euclidean))
                .unwrap()
        })
        .unwrap()
        .clone();
    let mut best_norm = best.norm(NormKind::Euclidean);
    let max_size = k.min(n + 1);
    for mask in 1u32..(1u32 << k) {
        let size = mask.count_ones() as usize;
        if size < 2 || size > max_size {
            continue;
        }
        let support: Vec<&Vector<S>> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| &vertices[i]).collect();
        let Some(weights) = affine_min_norm_weights(&support) else {
            continue;
        };
        let slack = S::lit(1e-12);
        if weights.iter().any(|&w| w < -slack) {
            continue;
        }
        let clipped: Vec<S> = weights.iter().map(|&w| w.max(S::zero())).collect();
        let total: S = clipped.iter().copied().sum();
        let mut point = Vector::zeros(n);
        for (w, v) in clipped.iter().zip(&support) {
            point = point.axpy(*w / total, v);
        }
        let nrm = point.norm(NormKind::Euclidean);
        if nrm < best_norm {
            best_norm = nrm;
            best = point;
        }
    }
    best
}

fn affine_min_norm_weights<S: Scalar>(support: &[&Vector<S>]) -> Option<Vec<S>> {
    let s = support.len();
    let mut a = vec![vec![S::zero(); s + 1]; s + 1];
    let mut b = vec![S::zero(); s + 1];
    for i in 0..s {
        for j in 0..s {
            a[i][j] = support[i].dot(support[j]);
        }
        a[i][s] = S::one();
        a[s][i] = S::one();
    }
    b[s] = S::one();
    solve_dense(a, b).map(|mut x| {
        x.truncate(s);
        x
    })
}

/// Gaussian elimination with partial pivoting; `None` when (numerically) singular.
pub(crate) fn solve_dense<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Option<Vec<S>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(S::zero(), |m, v| m.max(v.abs()))
        .max(S::one());
    let eps = S::epsilon() * S::lit(64.0) * scale;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() <= eps {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == S::zero() {
                continue;
            }
            for k in col..n {
                let delta = factor * a[col][k];
                a[row][k] = a[row][k] - delta;
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn frank_wolfe_min_norm<S: Scalar>(vertices: &[Vector<S>]) -> Vector<S> {
    let mut p = vertices[0].clone();
    for _ in 0..10_000 {
        let target = vertices
            .iter()
            .min_by(|a, b| a.dot(&p).partial_cmp(&b.dot(&p)).unwrap())
            .unwrap();
        let d = target - &p;
        let dd = d.dot(&d);
        if dd == S::zero() {
            break;
        }
        let gamma = (-(p.dot(&d)) / dd).max(S::zero()).min(S::one());
        if gamma == S::zero() {
            break;
        }
        p = p.axpy(gamma, &d);
    }
    p
}

/// Minimizes the l1 or linf norm over the hull by entropic mirror descent on
/// the convex weights; never worse than the best vertex.
fn min_norm_polyhedral<S: Scalar>(vertices: &[Vector<S>], primal: NormKind) -> Vector<S> {
    let dual = primal.dual();
    let k = vertices.len();
    let n = vertices[0].dim();
    let combine = |w: &[S]| {
        let mut p = Vector::zeros(n);
        for (wi, v) in w.iter().zip(vertices) {
            p = p.axpy(*wi, v);
        }
        p
    };
    let mut best = vertices
        .iter()
        .min_by(|a, b| dual.eval(a.as_slice()).partial_cmp(&dual.eval(b.as_slice())).unwrap())
        .unwrap()
        .clone();
    let mut best_norm = dual.eval(best.as_slice());
    let scale = vertices
        .iter()
        .map(|v| dual.eval(v.as_slice()))
        .fold(S::zero(), S::max)
        .max(S::min_positive_value());
    let mut weights = vec![S::one() / S::from_count(k); k];
    for t in 1..=4000usize {
        let p = combine(&weights);
        let nrm = dual.eval(p.as_slice());
        if nrm < best_norm {
            best_norm = nrm;
            best = p.clone();
        }
        let s = dual_norm_subgradient(p.as_slice(), dual);
        let step = S::lit(1.0) / (scale * S::from_count(t).sqrt());
        let logits: Vec<S> = weights
            .iter()
            .zip(vertices)
            .map(|(w, v)| w.max(S::log_floor()).ln() - step * v.dot(&s))
            .collect();
        let top = logits.iter().copied().fold(S::neg_infinity(), S::max);
        let exp: Vec<S> = logits.iter().map(|l| (*l - top).exp()).collect();
        let total: S = exp.iter().copied().sum();
        weights = exp.iter().map(|e| *e / total).collect();
    }
    best
}

/// One subgradient of `v -> ||v||_kind`.
pub(crate) fn dual_norm_subgradient<S: Scalar>(v: &[S], kind: NormKind) -> Vector<S> {
    let n = v.len();
    let sign = |c: S| {
        if c > S::zero() {
            S::one()
        } else if c < S::zero() {
            -S::one()
        } else {
            S::zero()
        }
    };
    match kind {
        NormKind::Euclidean => {
            let nrm = kind.eval(v);
            if nrm == S::zero() {
                Vector::zeros(n)
            } else {
                Vector::from_vec_unchecked(v.iter().map(|&c| c / nrm).collect())
            }
        }
        NormKind::L1 => Vector::from_vec_unchecked(v.iter().map(|&c| sign(c)).collect()),
        NormKind::LInf => {
            let (idx, _) = v
                .iter()
                .enumerate()
                .fold((0, S::neg_infinity()), |(bi, bv), (i, c)| if c.abs() > bv { (i, c.abs()) } else { (bi, bv) });
            let mut coords = vec![S::zero(); n];
            coords[idx] = sign(v[idx]);
            Vector::from_vec_unchecked(coords)
        }
    }
}
