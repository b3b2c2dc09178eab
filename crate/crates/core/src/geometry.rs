//! Finite-dimensional vectors, the three supported norm pairs, and feasible sets.

use std::ops::{Add, Index, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default absolute tolerance for set membership.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// A point of `R^n`, `n >= 1`, with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound = "S: Scalar")]
pub struct Vector<S>(Vec<S>);

impl<S: Scalar> Vector<S> {
    pub fn new(coords: Vec<S>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("vector must have dimension >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector coordinates"));
        }
        Ok(Self(coords))
    }

    pub fn from_f64(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&c| S::lit(c)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector must have dimension >= 1");
        Self(vec![S::zero(); dim])
    }

    pub fn scalar(value: S) -> Self {
        Self(vec![value])
    }

    /// Unit basis vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = S::one();
        v
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<S>) -> Self {
        debug_assert!(!coords.is_empty());
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Self) -> S {
        assert_eq!(self.dim(), other.dim(), "dot product dimension mismatch");
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm(&self, kind: NormKind) -> S {
        kind.eval(&self.0)
    }

    /// Dual norm of `self` when the primal space carries `primal`.
    pub fn dual_norm(&self, primal: NormKind) -> S {
        primal.dual().eval(&self.0)
    }

    pub fn scaled(&self, factor: S) -> Self {
        Self(self.0.iter().map(|&c| c * factor).collect())
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: S, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "axpy dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a + factor * b).collect())
    }

    /// Point `(1 - t) * self + t * other` on the segment.
    pub fn lerp(&self, other: &Self, t: S) -> Self {
        assert_eq!(self.dim(), other.dim(), "lerp dimension mismatch");
        let s = S::one() - t;
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| s * a + t * b).collect())
    }

    pub fn distance(&self, other: &Self, kind: NormKind) -> S {
        (self - other).norm(kind)
    }

    pub fn sum(&self) -> S {
        self.0.iter().copied().sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found: self.dim() })
        }
    }
}

impl<S> Index<usize> for Vector<S> {
    type Output = S;

    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S: Scalar> Add for &Vector<S> {
    type Output = Vector<S>;

    fn add(self, rhs: Self) -> Vector<S> {
        self.axpy(S::one(), rhs)
    }
}

impl<S: Scalar> Sub for &Vector<S> {
    type Output = Vector<S>;

    fn sub(self, rhs: Self) -> Vector<S> {
        self.axpy(-S::one(), rhs)
    }
}

impl<S: Scalar> Mul<S> for &Vector<S> {
    type Output = Vector<S>;

    fn mul(self, rhs: S) -> Vector<S> {
        self.scaled(rhs)
    }
}

impl<S: Scalar> Neg for &Vector<S> {
    type Output = Vector<S>;

    fn neg(self) -> Vector<S> {
        self.scaled(-S::one())
    }
}

/// Primal norm on `R^n`. The dual pairing is fixed: l2 <-> l2, l1 <-> linf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Euclidean,
    L1,
    LInf,
}

impl NormKind {
    pub fn dual(self) -> Self {
        match self {
            NormKind::Euclidean => NormKind::Euclidean,
            NormKind::L1 => NormKind::LInf,
            NormKind::LInf => NormKind::L1,
        }
    }

    pub fn eval<S: Scalar>(self, v: &[S]) -> S {
        match self {
            NormKind::Euclidean => {
                // scaled to avoid overflow in the squares
                let scale = v.iter().fold(S::zero(), |m, c| m.max(c.abs()));
                if scale == S::zero() || !scale.is_finite() {
                    return scale;
                }
                let s: S = v.iter().map(|&c| (c / scale) * (c / scale)).sum();
                scale * s.sqrt()
            }
            NormKind::L1 => v.iter().map(|c| c.abs()).sum(),
            NormKind::LInf => v.iter().fold(S::zero(), |m, c| m.max(c.abs())),
        }
    }

    /// Smallest `c` with `||v||_to <= c * ||v||_from` for all `v` in `R^dim`.
    pub fn equivalence_constant<S: Scalar>(from: NormKind, to: NormKind, dim: usize) -> S {
        let n = S::from_count(dim);
        match (from, to) {
            (a, b) if a == b => S::one(),
            (NormKind::L1, _) => S::one(),
            (NormKind::Euclidean, NormKind::LInf) => S::one(),
            (NormKind::Euclidean, NormKind::L1) => n.sqrt(),
            (NormKind::LInf, NormKind::Euclidean) => n.sqrt(),
            (NormKind::LInf, NormKind::L1) => n,
            _ => unreachable!(),
        }
    }
}

/// `||v||` in the given norm.
pub fn norm<S: Scalar>(v: &[S], kind: NormKind) -> Result<S> {
    if v.is_empty() {
        return Err(Error::InvalidInput("norm of a zero-dimensional vector".into()));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("norm argument"));
    }
    Ok(kind.eval(v))
}

/// `||v||_* = max { <v, x> : ||x|| <= 1 }` for the primal norm `primal`.
pub fn dual_norm<S: Scalar>(v: &[S], primal: NormKind) -> Result<S> {
    norm(v, primal.dual())
}

/// Shape of a closed convex feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetKind<S> {
    Box { lower: Vector<S>, upper: Vector<S> },
    EuclideanBall { center: Vector<S>, radius: S },
    Simplex { dimension: usize },
}

/// Closed, convex, nonempty set `Q` with a membership tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct FeasibleSet<S> {
    kind: SetKind<S>,
    tol: S,
}

impl<S: Scalar> FeasibleSet<S> {
    pub fn new(kind: SetKind<S>) -> Result<Self> {
        match &kind {
            SetKind::Box { lower, upper } => {
                lower.check_dim(upper.dim())?;
                if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
                    return Err(Error::InvalidInput("box requires lower <= upper".into()));
                }
            }
            SetKind::EuclideanBall { radius, .. } => {
                if !(radius.is_finite() && *radius > S::zero()) {
                    return Err(Error::InvalidInput("ball radius must be positive".into()));
                }
            }
            SetKind::Simplex { dimension } => {
                if *dimension == 0 {
                    return Err(Error::InvalidInput("simplex dimension must be >= 1".into()));
                }
            }
        }
        Ok(Self { kind, tol: S::lit(DEFAULT_MEMBERSHIP_TOL) })
    }

    pub fn boxed(lower: Vector<S>, upper: Vector<S>) -> Result<Self> {
        Self::new(SetKind::Box { lower, upper })
    }

    /// Box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: S, hi: S) -> Result<Self> {
        Self::boxed(Vector::new(vec![lo; dim])?, Vector::new(vec![hi; dim])?)
    }

    pub fn ball(center: Vector<S>, radius: S) -> Result<Self> {
        Self::new(SetKind::EuclideanBall { center, radius })
    }

    pub fn simplex(dimension: usize) -> Result<Self> {
        Self::new(SetKind::Simplex { dimension })
    }

    pub fn with_tolerance(mut self, tol: S) -> Self {
        assert!(tol >= S::zero(), "membership tolerance must be >= 0");
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> &SetKind<S> {
        &self.kind
    }

    pub fn tolerance(&self) -> S {
        self.tol
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SetKind::Box { lower, .. } => lower.dim(),
            SetKind::EuclideanBall { center, .. } => center.dim(),
            SetKind::Simplex { dimension } => *dimension,
        }
    }

    pub fn contains(&self, x: &Vector<S>) -> Result<bool> {
        x.check_dim(self.dim())?;
        let tol = self.tol;
        Ok(match &self.kind {
            SetKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(&c, (&l, &u))| c >= l - tol && c <= u + tol),
            SetKind::EuclideanBall { center, radius } => {
                x.distance(center, NormKind::Euclidean) <= *radius + tol
            }
            SetKind::Simplex { .. } => {
                x.iter().all(|&c| c >= -tol) && (x.sum() - S::one()).abs() <= tol
            }
        })
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector<S>) -> Result<Vector<S>> {
        x.check_dim(self.dim())?;
        Ok(match &self.kind {
            SetKind::Box { lower, upper } => Vector::from_vec_unchecked(
                x.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(&c, (&l, &u))| c.max(l).min(u))
                    .collect(),
            ),
            SetKind::EuclideanBall { center, radius } => {
                let offset = x - center;
                let dist = offset.norm(NormKind::Euclidean);
                if dist <= *radius {
                    x.clone()
                } else {
                    center.axpy(*radius / dist, &offset)
                }
            }
            SetKind::Simplex { .. } => project_onto_simplex(x),
        })
    }

    /// Axis-aligned bounding box of the set.
    pub fn bounding_box(&self) -> (Vec<S>, Vec<S>) {
        match &self.kind {
            SetKind::Box { lower, upper } => (lower.as_slice().to_vec(), upper.as_slice().to_vec()),
            SetKind::EuclideanBall { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
            SetKind::Simplex { dimension } => (vec![S::zero(); *dimension], vec![S::one(); *dimension]),
        }
    }

    /// Uniformly distributed point of the set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector<S> {
        let coords: Vec<S> = match &self.kind {
            SetKind::Box { lower, upper } => lower
                .iter()
                .zip(upper.iter())
                .map(|(&l, &u)| l + (u - l) * S::lit(rng.random::<f64>()))
                .collect(),
            SetKind::EuclideanBall { center, radius } => {
                let n = center.dim();
                let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let len = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let r = radius.to_f64().unwrap() * rng.random::<f64>().powf(1.0 / n as f64);
                center
                    .iter()
                    .zip(&dir)
                    .map(|(&c, &d)| c + S::lit(r * d / len))
                    .collect()
            }
            SetKind::Simplex { dimension } => {
                // normalized exponentials are uniform on the simplex
                let e: Vec<f64> = (0..*dimension)
                    .map(|_| -(1.0 - rng.random::<f64>()).ln())
                    .collect();
                let total: f64 = e.iter().sum();
                e.iter().map(|&v| S::lit(v / total)).collect()
            }
        };
        Vector::from_vec_unchecked(coords)
    }
}

/// Membership test `x in Q` up to the set's tolerance.
pub fn project_membership<S: Scalar>(x: &Vector<S>, set: &FeasibleSet<S>) -> Result<bool> {
    set.contains(x)
}

fn project_onto_simplex<S: Scalar>(x: &Vector<S>) -> Vector<S> {
    let mut sorted = x.as_slice().to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite coordinates"));
    let mut cumulative = S::zero();
    let mut theta = S::zero();
    for (i, &v) in sorted.iter().enumerate() {
        cumulative = cumulative + v;
        let candidate = (cumulative - S::one()) / S::from_count(i + 1);
        if v - candidate > S::zero() {
            theta = candidate;
        }
    }
    Vector::from_vec_unchecked(x.iter().map(|&c| (c - theta).max(S::zero())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector<f64> {
        Vector::from_f64(c).unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&[3.0, 4.0], NormKind::Euclidean).unwrap(), 5.0);
        assert_eq!(norm(&[1.0, -2.0, 3.0], NormKind::L1).unwrap(), 6.0);
        for kind in [NormKind::Euclidean, NormKind::L1, NormKind::LInf] {
            assert_eq!(norm(&[0.0, 0.0], kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn norm_rejects_empty_and_nan() {
        assert!(matches!(norm::<f64>(&[], NormKind::L1), Err(Error::InvalidInput(_))));
        assert!(matches!(norm(&[f64::NAN], NormKind::L1), Err(Error::NonFinite(_))));
        assert!(Vector::<f64>::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn dual_norm_examples() {
        assert_eq!(dual_norm(&[3.0, 4.0], NormKind::Euclidean).unwrap(), 5.0);
        assert_eq!(dual_norm(&[1.0, -2.0, 3.0], NormKind::L1).unwrap(), 3.0);
        assert_eq!(dual_norm(&[2.0, 2.0], NormKind::LInf).unwrap(), 4.0);
    }

    #[test]
    fn membership_examples() {
        let simplex = FeasibleSet::simplex(2).unwrap();
        assert!(project_membership(&v(&[0.5, 0.5]), &simplex).unwrap());
        assert!(!project_membership(&v(&[0.6, 0.6]), &simplex).unwrap());
        let ball = FeasibleSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert!(!project_membership(&v(&[2.0, 0.0]), &ball).unwrap());
        assert!(matches!(
            project_membership(&v(&[0.0]), &ball),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(FeasibleSet::boxed(v(&[1.0]), v(&[0.0])).is_err());
        assert!(FeasibleSet::ball(v(&[0.0]), 0.0).is_err());
        assert!(FeasibleSet::<f64>::simplex(0).is_err());
    }

    #[test]
    fn projections_land_in_set() {
        let ball = FeasibleSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(ball.project(&v(&[3.0, 0.0])).unwrap(), v(&[1.0, 0.0]));
        let boxed = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        assert_eq!(boxed.project(&v(&[-1.0, 0.5])).unwrap(), v(&[0.0, 0.5]));
        let simplex = FeasibleSet::simplex(3).unwrap();
        let p = simplex.project(&v(&[2.0, 0.0, 0.0])).unwrap();
        assert_eq!(p, v(&[1.0, 0.0, 0.0]));
        let p = simplex.project(&v(&[0.5, 0.5, 0.5])).unwrap();
        assert!(simplex.contains(&p).unwrap());
    }

    #[test]
    fn equivalence_constants_are_attained() {
        // ones vector attains every constant except the l2 -> linf and l1 -> * cases
        let ones = v(&[1.0, 1.0, 1.0, 1.0]);
        let c: f64 = NormKind::equivalence_constant(NormKind::LInf, NormKind::L1, 4);
        assert_eq!(ones.norm(NormKind::L1), c * ones.norm(NormKind::LInf));
        let c: f64 = NormKind::equivalence_constant(NormKind::Euclidean, NormKind::L1, 4);
        assert!((ones.norm(NormKind::L1) - c * ones.norm(NormKind::Euclidean)).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let x = Vector::<f32>::from_f64(&[3.0, 4.0]).unwrap();
        assert_eq!(x.norm(NormKind::Euclidean), 5.0f32);
        assert_eq!(x.dual_norm(NormKind::LInf), 7.0f32);
    }
}
