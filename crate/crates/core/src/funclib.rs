//! Concrete objectives with exact values and exact Clarke subdifferentials.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, NormKind, Vector};
use crate::oracles::{Objective, Smoothness, SubgradientSet};
use crate::scalar::Scalar;

/// Largest branch index tracked by [`CountableKinkFunction`]; beyond it the
/// branches are closer to 1 than any `f64` below 1.
const MAX_BRANCH: usize = 64;
/// Kinks are recognised for `1 <= n <= 52`.
const MAX_KINK: usize = 52;
const KINK_TOL: f64 = 1e-14;

/// Convex piecewise-linear function on `[0, 1]` with kinks at
/// `q_n = 1 - 2^-n`, `n = 1, 2, ...`.
///
/// It equals `k x` on `[0, 1/2]`; on `(q_n, q_{n+1}]` the slope is
/// `k + sum_{i<=n} delta / 2^i`, and `f(1)` is the limit `k + delta / 3`.
/// The subdifferential at `q_n` is an interval of width `delta / 2^n`, so the
/// widths add up to `delta` while the slope never exceeds `k + delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CountableKinkFunction<S> {
    pub k: S,
    pub delta: S,
}

struct Branch<S> {
    slope: S,
    intercept: S,
}

impl<S: Scalar> CountableKinkFunction<S> {
    pub fn new(k: S, delta: S) -> Result<Self> {
        if !(k.is_finite() && k > S::zero()) {
            return Err(Error::InvalidInput("k must be positive".into()));
        }
        if !(delta.is_finite() && delta > S::zero()) {
            return Err(Error::InvalidInput("delta must be positive".into()));
        }
        Ok(Self { k, delta })
    }

    fn check_domain(x: S) -> Result<()> {
        if x.is_finite() && x >= S::zero() && x <= S::one() {
            Ok(())
        } else {
            Err(Error::OutOfDomain(format!("{x} is outside [0, 1]")))
        }
    }

    pub fn limit_value(&self) -> S {
        self.k + self.delta / S::lit(3.0)
    }

    /// Slope on `(q_n, q_{n+1})`, with `q_0 = 0`.
    pub fn slope(&self, n: usize) -> S {
        let mut slope = self.k;
        let mut p = S::one();
        for _ in 0..n {
            p = p * S::lit(0.5);
            slope = slope + self.delta * p;
        }
        slope
    }

    /// `q_n = 1 - 2^-n`.
    pub fn kink_location(n: usize) -> S {
        let mut p = S::one();
        for _ in 0..n {
            p = p * S::lit(0.5);
        }
        S::one() - p
    }

    fn branch(&self, x: S) -> Branch<S> {
        let mut slope = self.k;
        let mut intercept = S::zero();
        if x <= S::lit(0.5) {
            return Branch { slope, intercept };
        }
        let mut p = S::one();
        for _ in 1..=MAX_BRANCH {
            p = p * S::lit(0.5);
            slope = slope + self.delta * p;
            intercept = intercept + self.delta * p * (S::one() - p);
            if x <= S::one() - p * S::lit(0.5) {
                break;
            }
        }
        Branch { slope, intercept }
    }

    pub fn eval(&self, x: S) -> Result<S> {
        Self::check_domain(x)?;
        if x == S::one() {
            return Ok(self.limit_value());
        }
        let b = self.branch(x);
        Ok(b.slope * x - b.intercept)
    }

    /// Index `n` with `x = q_n` (within 1e-14), if any.
    pub fn kink_index(&self, x: S) -> Option<usize> {
        let tol = S::lit(KINK_TOL);
        let mut best: Option<(usize, S)> = None;
        let mut p = S::one();
        for n in 1..=MAX_KINK {
            p = p * S::lit(0.5);
            let gap = (x - (S::one() - p)).abs();
            if gap <= tol && best.is_none_or(|(_, g)| gap < g) {
                best = Some((n, gap));
            }
        }
        best.map(|(n, _)| n)
    }

    pub fn subdiff(&self, x: S) -> Result<SubgradientSet<S>> {
        Self::check_domain(x)?;
        if let Some(n) = self.kink_index(x) {
            return SubgradientSet::interval(self.slope(n - 1), self.slope(n));
        }
        let slope = if x == S::one() { self.k + self.delta } else { self.branch(x).slope };
        Ok(SubgradientSet::singleton(Vector::scalar(slope)))
    }

    /// The function as an objective on `R^1`.
    pub fn lifted_1d(self) -> LiftedKinkFunction<S> {
        LiftedKinkFunction::new(self, Vector::scalar(S::zero()), Vector::scalar(S::one()))
            .expect("unit direction is nonzero")
    }
}

/// Ridge lift `x -> f(<x - origin, d> / <d, d>)` of a [`CountableKinkFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LiftedKinkFunction<S> {
    inner: CountableKinkFunction<S>,
    origin: Vector<S>,
    direction: Vector<S>,
}

impl<S: Scalar> LiftedKinkFunction<S> {
    pub fn new(inner: CountableKinkFunction<S>, origin: Vector<S>, direction: Vector<S>) -> Result<Self> {
        origin.check_dim(direction.dim())?;
        if direction.dot(&direction) == S::zero() {
            return Err(Error::InvalidInput("lift direction must be nonzero".into()));
        }
        Ok(Self { inner, origin, direction })
    }

    pub fn inner(&self) -> &CountableKinkFunction<S> {
        &self.inner
    }

    pub fn origin(&self) -> &Vector<S> {
        &self.origin
    }

    pub fn direction(&self) -> &Vector<S> {
        &self.direction
    }

    /// Scalar parameter `t` of `x` along the lift.
    pub fn parameter(&self, x: &Vector<S>) -> Result<S> {
        x.check_dim(self.origin.dim())?;
        Ok((x - &self.origin).dot(&self.direction) / self.direction.dot(&self.direction))
    }
}

impl<S: Scalar> Objective<S> for LiftedKinkFunction<S> {
    fn dim(&self) -> usize {
        self.origin.dim()
    }

    fn value(&self, x: &Vector<S>) -> Result<S> {
        self.inner.eval(self.parameter(x)?)
    }

    fn subdifferential(&self, x: &Vector<S>) -> Result<SubgradientSet<S>> {
        let t = self.parameter(x)?;
        let scale = self.direction.scaled(S::one() / self.direction.dot(&self.direction));
        match self.inner.subdiff(t)? {
            SubgradientSet::Singleton { gradient } => Ok(SubgradientSet::singleton(scale.scaled(gradient[0]))),
            SubgradientSet::Interval1D { lo, hi } if self.dim() == 1 => {
                let (a, b) = (lo * scale[0], hi * scale[0]);
                SubgradientSet::interval(a.min(b), a.max(b))
            }
            SubgradientSet::Interval1D { lo, hi } => SubgradientSet::hull(vec![scale.scaled(lo), scale.scaled(hi)]),
            SubgradientSet::VertexHull { .. } => unreachable!("scalar subdifferentials are intervals"),
        }
    }

    fn is_kink(&self, x: &Vector<S>) -> Result<bool> {
        Ok(self.inner.kink_index(self.parameter(x)?).is_some())
    }

    fn smoothness(&self) -> Smoothness<S> {
        // interval widths shrink by ||d||_2 / <d, d> under the lift
        Smoothness::new(S::zero(), self.inner.delta / self.direction.norm(NormKind::Euclidean))
    }
}

/// Dense symmetric matrix, stored by rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(transparent)]
pub struct SymMatrix<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> SymMatrix<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("matrix must be nonempty".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        let scale = rows.iter().flatten().fold(S::zero(), |m, v| m.max(v.abs())).max(S::one());
        for i in 0..n {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > S::lit(1e-12) * scale {
                    return Err(Error::InvalidInput(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![S::one(); n])
    }

    pub fn zeros(n: usize) -> Self {
        Self { rows: vec![vec![S::zero(); n]; n] }
    }

    pub fn diagonal(diag: &[S]) -> Self {
        let n = diag.len();
        let mut rows = vec![vec![S::zero(); n]; n];
        for (i, &d) in diag.iter().enumerate() {
            rows[i][i] = d;
        }
        Self { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn mul_vec(&self, x: &Vector<S>) -> Vector<S> {
        assert_eq!(x.dim(), self.dim(), "matrix-vector dimension mismatch");
        Vector::from_vec_unchecked(
            self.rows
                .iter()
                .map(|r| r.iter().zip(x.iter()).map(|(&a, &b)| a * b).sum())
                .collect(),
        )
    }

    /// Eigenvalues in ascending order, computed in double precision.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let m = DMatrix::from_fn(n, n, |i, j| self.rows[i][j].to_f64().unwrap());
        let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eig
    }
}

/// `f(x) = 1/2 <A x, x> - <b, x> + alpha` with `A` positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct QuadraticPiece<S> {
    a: SymMatrix<S>,
    b: Vector<S>,
    alpha: S,
    #[serde(skip)]
    lambda_max: S,
}

const PSD_TOL: f64 = 1e-10;

impl<S: Scalar> QuadraticPiece<S> {
    pub fn new(a: SymMatrix<S>, b: Vector<S>, alpha: S) -> Result<Self> {
        b.check_dim(a.dim())?;
        if !alpha.is_finite() {
            return Err(Error::NonFinite("quadratic constant"));
        }
        let eig = a.eigenvalues();
        let (min, max) = (eig[0], eig[eig.len() - 1]);
        if min < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite { piece: 0, min_eigenvalue: min });
        }
        Ok(Self { a, b, alpha, lambda_max: S::lit(max.max(0.0)) })
    }

    /// `1/2 ||x||^2`.
    pub fn half_squared_norm(dim: usize) -> Self {
        Self::new(SymMatrix::identity(dim), Vector::zeros(dim), S::zero()).expect("identity is PSD")
    }

    pub fn matrix(&self) -> &SymMatrix<S> {
        &self.a
    }

    pub fn linear(&self) -> &Vector<S> {
        &self.b
    }

    pub fn constant(&self) -> S {
        self.alpha
    }

    /// Largest eigenvalue of `A`: the Euclidean Lipschitz constant of the gradient.
    pub fn lambda_max(&self) -> S {
        self.lambda_max
    }

    pub fn eval(&self, x: &Vector<S>) -> S {
        S::lit(0.5) * self.a.mul_vec(x).dot(x) - self.b.dot(x) + self.alpha
    }

    pub fn gradient(&self, x: &Vector<S>) -> Vector<S> {
        &self.a.mul_vec(x) - &self.b
    }
}

impl<S: Scalar> Objective<S> for QuadraticPiece<S> {
    fn dim(&self) -> usize {
        self.b.dim()
    }

    fn value(&self, x: &Vector<S>) -> Result<S> {
        x.check_dim(self.dim())?;
        Ok(self.eval(x))
    }

    fn subdifferential(&self, x: &Vector<S>) -> Result<SubgradientSet<S>> {
        x.check_dim(self.dim())?;
        Ok(SubgradientSet::singleton(self.gradient(x)))
    }

    fn is_kink(&self, _x: &Vector<S>) -> Result<bool> {
        Ok(false)
    }

    fn smoothness(&self) -> Smoothness<S> {
        Smoothness::smooth(self.lambda_max)
    }
}

/// `f(x) = max_i f_i(x)` over quadratic pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MaxQuadObjective<S> {
    pieces: Vec<QuadraticPiece<S>>,
    activity_tol: S,
    smoothness: Smoothness<S>,
}

/// Default relative activity tolerance: a piece is active when
/// `f_i(x) >= f(x) - tol * (1 + |f(x)|)`.
pub const DEFAULT_ACTIVITY_TOL: f64 = 1e-9;

impl<S: Scalar> MaxQuadObjective<S> {
    /// Builds the objective and declares its class parameters over `domain`:
    /// `L = max_i lambda_max(A_i)` and `delta` from [`Self::jump_budget_bound`].
    pub fn new(pieces: Vec<QuadraticPiece<S>>, domain: &FeasibleSet<S>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::InvalidInput("max-of-quadratics needs at least one piece".into()))?;
        let dim = first.dim();
        for p in &pieces {
            p.b.check_dim(dim)?;
        }
        domain.dim().eq(&dim).then_some(()).ok_or(Error::DimensionMismatch { expected: dim, found: domain.dim() })?;
        let lipschitz = pieces.iter().map(|p| p.lambda_max).fold(S::zero(), S::max);
        let mut out = Self {
            pieces,
            activity_tol: S::lit(DEFAULT_ACTIVITY_TOL),
            smoothness: Smoothness::smooth(lipschitz),
        };
        out.smoothness.jump_budget = out.jump_budget_bound(domain);
        Ok(out)
    }

    /// Validates raw `(A_i, b_i, alpha_i)` triples, naming the offending piece.
    pub fn from_parts(parts: Vec<(SymMatrix<S>, Vector<S>, S)>, domain: &FeasibleSet<S>) -> Result<Self> {
        let pieces = parts
            .into_iter()
            .enumerate()
            .map(|(i, (a, b, alpha))| {
                QuadraticPiece::new(a, b, alpha).map_err(|e| match e {
                    Error::NotPositiveSemidefinite { min_eigenvalue, .. } => {
                        Error::NotPositiveSemidefinite { piece: i, min_eigenvalue }
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pieces, domain)
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness<S>) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn with_activity_tol(mut self, tol: S) -> Self {
        self.activity_tol = tol;
        self
    }

    pub fn pieces(&self) -> &[QuadraticPiece<S>] {
        &self.pieces
    }

    /// Upper bound on the total subdifferential jump along any segment of
    /// the domain's bounding box.
    ///
    /// Along a segment each pair of pieces crosses at most twice, so the upper
    /// envelope of `m` pieces has at most `2m - 2` breakpoints; each jump is at
    /// most `max_{i,j} ||grad f_i - grad f_j||_2`, a convex function of `x`
    /// maximized at a vertex of the box.
    pub fn jump_budget_bound(&self, domain: &FeasibleSet<S>) -> S {
        let m = self.pieces.len();
        if m < 2 {
            return S::zero();
        }
        let (lo, hi) = domain.bounding_box();
        let n = lo.len();
        let mut worst = S::zero();
        for i in 0..m {
            for j in i + 1..m {
                let pi = &self.pieces[i];
                let pj = &self.pieces[j];
                let diff_at = |x: &Vector<S>| (&pi.gradient(x) - &pj.gradient(x)).norm(NormKind::Euclidean);
                if n <= 12 {
                    for mask in 0u32..(1u32 << n) {
                        let corner: Vec<S> =
                            (0..n).map(|c| if mask & (1 << c) != 0 { hi[c] } else { lo[c] }).collect();
                        worst = worst.max(diff_at(&Vector::from_vec_unchecked(corner)));
                    }
                } else {
                    let radius = NormKind::Euclidean.eval(
                        &lo.iter().zip(&hi).map(|(a, b)| a.abs().max(b.abs())).collect::<Vec<S>>(),
                    );
                    let frob: S = pi
                        .a
                        .rows
                        .iter()
                        .flatten()
                        .zip(pj.a.rows.iter().flatten())
                        .map(|(a, b)| (*a - *b) * (*a - *b))
                        .sum::<S>()
                        .sqrt();
                    worst = worst.max(frob * radius + (&pi.b - &pj.b).norm(NormKind::Euclidean));
                }
            }
        }
        S::from_count(2 * m - 2) * worst
    }

    /// Value and subdifferential (hull of active-piece gradients).
    pub fn eval_subdiff(&self, x: &Vector<S>) -> Result<(S, SubgradientSet<S>)> {
        x.check_dim(self.dim())?;
        let values: Vec<S> = self.pieces.iter().map(|p| p.eval(x)).collect();
        let value = values.iter().copied().fold(S::neg_infinity(), S::max);
        let cutoff = value - self.activity_tol * (S::one() + value.abs());
        let active: Vec<Vector<S>> = self
            .pieces
            .iter()
            .zip(&values)
            .filter(|(_, &v)| v >= cutoff)
            .map(|(p, _)| p.gradient(x))
            .collect();
        Ok((value, SubgradientSet::hull(active)?))
    }
}

impl<S: Scalar> Objective<S> for MaxQuadObjective<S> {
    fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    fn value(&self, x: &Vector<S>) -> Result<S> {
        x.check_dim(self.dim())?;
        Ok(self.pieces.iter().map(|p| p.eval(x)).fold(S::neg_infinity(), S::max))
    }

    fn subdifferential(&self, x: &Vector<S>) -> Result<SubgradientSet<S>> {
        Ok(self.eval_subdiff(x)?.1)
    }

    fn smoothness(&self) -> Smoothness<S> {
        self.smoothness
    }
}
