//! Prox structures: the prox function `d`, its Bregman divergence and the
//! mirror step `Mirr_x(h p) = argmin_{u in Q} { <h p, u> + V(x, u) }`.
//!
//! Two mirror maps are supported, each with a closed-form step:
//!
//! * Euclidean, `d(x) = 1/2 ||x - c||_2^2` on a box or a Euclidean ball.
//!   `V(x, u) = 1/2 ||u - x||_2^2` and the step is the projection of
//!   `x - h p` onto the set.
//! * Entropy on the probability simplex, `d(x) = sum x_i ln x_i + ln n`,
//!   1-strongly convex with respect to l1. The step is the
//!   multiplicative-weights update `x_i exp(-h p_i) / Z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FeasibleSet, NormKind, SetKind, Vector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxKind {
    EuclideanOnBox,
    EuclideanOnBall,
    EntropyOnSimplex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ProxSetup<S> {
    kind: ProxKind,
    set: FeasibleSet<S>,
    center: Vector<S>,
}

impl<S: Scalar> ProxSetup<S> {
    /// Euclidean prox `1/2 ||x||^2` on a box or ball.
    pub fn euclidean(set: FeasibleSet<S>) -> Result<Self> {
        let kind = match set.kind() {
            SetKind::Box { .. } => ProxKind::EuclideanOnBox,
            SetKind::EuclideanBall { .. } => ProxKind::EuclideanOnBall,
            SetKind::Simplex { .. } => {
                return Err(Error::Unsupported("Euclidean prox on the simplex; use the entropy prox".into()))
            }
        };
        let center = Vector::zeros(set.dim());
        Ok(Self { kind, set, center })
    }

    /// Negative-entropy prox on the simplex.
    pub fn entropy(set: FeasibleSet<S>) -> Result<Self> {
        match set.kind() {
            SetKind::Simplex { dimension } => {
                let center = Vector::new(vec![S::one() / S::from_count(*dimension); *dimension])?;
                Ok(Self { kind: ProxKind::EntropyOnSimplex, set, center })
            }
            _ => Err(Error::Unsupported("entropy prox requires a simplex".into())),
        }
    }

    /// Moves the minimizer of the Euclidean `d` to `center`.
    pub fn with_center(mut self, center: Vector<S>) -> Result<Self> {
        if self.kind == ProxKind::EntropyOnSimplex {
            return Err(Error::Unsupported("the entropy prox has a fixed center".into()));
        }
        center.check_dim(self.set.dim())?;
        self.center = center;
        Ok(self)
    }

    pub fn kind(&self) -> ProxKind {
        self.kind
    }

    pub fn set(&self) -> &FeasibleSet<S> {
        &self.set
    }

    pub fn center(&self) -> &Vector<S> {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// Norm with respect to which `d` is 1-strongly convex.
    pub fn norm(&self) -> NormKind {
        match self.kind {
            ProxKind::EntropyOnSimplex => NormKind::L1,
            _ => NormKind::Euclidean,
        }
    }

    pub fn d(&self, x: &Vector<S>) -> Result<S> {
        x.check_dim(self.dim())?;
        match self.kind {
            ProxKind::EntropyOnSimplex => {
                let n = S::from_count(x.dim());
                Ok(x.iter().map(|&c| xlogx(c)).sum::<S>() + n.ln())
            }
            _ => Ok(half::<S>() * (x - &self.center).dot(&(x - &self.center))),
        }
    }

    pub fn grad_d(&self, x: &Vector<S>) -> Result<Vector<S>> {
        x.check_dim(self.dim())?;
        match self.kind {
            ProxKind::EntropyOnSimplex => {
                if x.iter().any(|&c| c <= S::zero()) {
                    return Err(Error::OutOfDomain("entropy gradient needs positive coordinates".into()));
                }
                Ok(Vector::from_vec_unchecked(x.iter().map(|&c| S::one() + c.ln()).collect()))
            }
            _ => Ok(x - &self.center),
        }
    }

    /// `V(x, y) = d(y) - d(x) - <grad d(x), y - x>`.
    pub fn bregman(&self, x: &Vector<S>, y: &Vector<S>) -> Result<S> {
        x.check_dim(self.dim())?;
        y.check_dim(self.dim())?;
        match self.kind {
            ProxKind::EntropyOnSimplex => {
                if x.iter().any(|&c| c <= S::zero()) {
                    return Err(Error::OutOfDomain(
                        "entropy divergence needs x in the relative interior".into(),
                    ));
                }
                // sum y ln(y / x) - y + x, which reduces to KL(y || x) on the simplex
                Ok(x.iter()
                    .zip(y.iter())
                    .map(|(&a, &b)| {
                        let cross = if b == S::zero() { S::zero() } else { b * (b / a).ln() };
                        cross - b + a
                    })
                    .sum())
            }
            _ => {
                let diff = y - x;
                Ok(half::<S>() * diff.dot(&diff))
            }
        }
    }

    /// `argmin_{u in Q} { <h p, u> + V(x, u) }`.
    pub fn mirror_step(&self, x: &Vector<S>, p: &Vector<S>, h: S) -> Result<Vector<S>> {
        if !(h.is_finite() && h > S::zero()) {
            return Err(Error::InvalidStepSize(h.to_string()));
        }
        p.check_dim(self.dim())?;
        if !p.is_finite() {
            return Err(Error::NonFinite("mirror step direction"));
        }
        if !self.set.contains(x)? {
            return Err(Error::NotInSet);
        }
        match self.kind {
            ProxKind::EntropyOnSimplex => {
                let logits: Vec<S> = x
                    .iter()
                    .zip(p.iter())
                    .map(|(&xi, &pi)| xi.max(S::log_floor()).ln() - h * pi)
                    .collect();
                let top = logits.iter().copied().fold(S::neg_infinity(), S::max);
                let weights: Vec<S> = logits.iter().map(|&l| (l - top).exp()).collect();
                let total: S = weights.iter().copied().sum();
                let clamped: Vec<S> = weights.iter().map(|&w| (w / total).max(S::log_floor())).collect();
                let total: S = clamped.iter().copied().sum();
                Ok(Vector::from_vec_unchecked(clamped.iter().map(|&w| w / total).collect()))
            }
            _ => self.set.project(&x.axpy(-h, p)),
        }
    }

    /// `x0 = argmin_{x in Q} d(x)`.
    pub fn start_point(&self) -> Vector<S> {
        match self.kind {
            ProxKind::EntropyOnSimplex => self.center.clone(),
            _ => self.set.project(&self.center).expect("center has the set's dimension"),
        }
    }

    /// `sqrt(d(x_star))`, the smallest admissible `Theta_0`.
    pub fn theta0_for(&self, x_star: &Vector<S>) -> Result<S> {
        Ok(self.d(x_star)?.max(S::zero()).sqrt())
    }

    /// Whether `d(x_star) <= theta0^2`.
    pub fn theta0_covers(&self, x_star: &Vector<S>, theta0: S) -> Result<bool> {
        Ok(self.d(x_star)? <= theta0 * theta0)
    }
}

fn half<S: Scalar>() -> S {
    S::lit(0.5)
}

fn xlogx<S: Scalar>(c: S) -> S {
    if c <= S::zero() {
        S::zero()
    } else {
        c * c.ln()
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn v(c: &[f64]) -> Vector<f64> {
        Vector::from_f64(c).unwrap()
    }

    fn entropy(n: usize) -> ProxSetup<f64> {
        ProxSetup::entropy(FeasibleSet::simplex(n).unwrap()).unwrap()
    }

    fn huge_box() -> ProxSetup<f64> {
        ProxSetup::euclidean(FeasibleSet::cube(2, -1e6, 1e6).unwrap()).unwrap()
    }

    #[test]
    fn bregman_examples() {
        let x = v(&[0.3, 0.7]);
        assert_eq!(huge_box().bregman(&x, &x).unwrap(), 0.0);
        assert_eq!(huge_box().bregman(&v(&[0.0, 0.0]), &v(&[3.0, 4.0])).unwrap(), 12.5);

        // KL(y || x) by direct summation, and the strong-convexity floor 1/2 ||y - x||_1^2
        let (x, y) = (v(&[0.5, 0.5]), v(&[0.25, 0.75]));
        let kl: f64 = 0.25 * (0.25f64 / 0.5).ln() + 0.75 * (0.75f64 / 0.5).ln();
        let got = entropy(2).bregman(&x, &y).unwrap();
        assert_abs_diff_eq!(got, kl, epsilon = 1e-15);
        assert_abs_diff_eq!(got, 0.130812, epsilon = 1e-6);
        assert!(got >= 0.5 * (&y - &x).norm(NormKind::L1).powi(2));
    }

    #[test]
    fn entropy_bregman_rejects_boundary_x() {
        let r = entropy(2).bregman(&v(&[0.0, 1.0]), &v(&[0.5, 0.5]));
        assert!(matches!(r, Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn mirror_step_examples() {
        let z = huge_box().mirror_step(&v(&[1.0, 1.0]), &v(&[1.0, 0.0]), 0.5).unwrap();
        assert_eq!(z, v(&[0.5, 1.0]));

        let ball = ProxSetup::euclidean(FeasibleSet::ball(v(&[0.0, 0.0]), 1.0).unwrap()).unwrap();
        let z = ball.mirror_step(&v(&[1.0, 0.0]), &v(&[-2.0, 0.0]), 1.0).unwrap();
        assert_eq!(z, v(&[1.0, 0.0]));

        let z = entropy(2).mirror_step(&v(&[0.5, 0.5]), &v(&[2f64.ln(), 0.0]), 1.0).unwrap();
        assert_abs_diff_eq!(z[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn entropy_step_matches_grid_minimization() {
        // brute force over the 1-parameter simplex u = (s, 1 - s)
        let setup = entropy(2);
        let x = v(&[0.5, 0.5]);
        let p = v(&[2f64.ln(), 0.0]);
        let objective = |s: f64| {
            let u = v(&[s, 1.0 - s]);
            p.dot(&u) + setup.bregman(&x, &u).unwrap()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let pts: Vec<f64> = (0..=20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect();
            let best = pts.iter().copied().min_by(|a, b| objective(*a).partial_cmp(&objective(*b)).unwrap()).unwrap();
            let w = (hi - lo) * 0.25;
            lo = (best - w).max(0.0);
            hi = (best + w).min(1.0);
        }
        let z = setup.mirror_step(&x, &p, 1.0).unwrap();
        assert_abs_diff_eq!(z[0], 0.5 * (lo + hi), epsilon = 1e-6);
    }

    #[test]
    fn mirror_step_errors() {
        let setup = huge_box();
        let x = v(&[0.0, 0.0]);
        let p = v(&[1.0, 1.0]);
        assert!(matches!(setup.mirror_step(&x, &p, 0.0), Err(Error::InvalidStepSize(_))));
        assert!(matches!(setup.mirror_step(&x, &p, -1.0), Err(Error::InvalidStepSize(_))));
        assert!(matches!(setup.mirror_step(&v(&[2e6, 0.0]), &p, 1.0), Err(Error::NotInSet)));
    }

    #[test]
    fn start_points() {
        let s = entropy(3).start_point();
        for i in 0..3 {
            assert_abs_diff_eq!(s[i], 1.0 / 3.0, epsilon = 1e-15);
        }
        let unit_box = ProxSetup::euclidean(FeasibleSet::cube(2, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(unit_box.start_point(), v(&[0.0, 0.0]));
        let shifted = ProxSetup::euclidean(FeasibleSet::ball(v(&[2.0, 0.0]), 1.0).unwrap()).unwrap();
        assert_eq!(shifted.start_point(), v(&[1.0, 0.0]));
    }

    #[test]
    fn entropy_d_is_zero_at_uniform() {
        let setup = entropy(4);
        assert_abs_diff_eq!(setup.d(&setup.start_point()).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn centered_euclidean_prox() {
        let setup = ProxSetup::euclidean(FeasibleSet::cube(1, -1.0, 1.0).unwrap())
            .unwrap()
            .with_center(v(&[-1.0]))
            .unwrap();
        assert_eq!(setup.start_point(), v(&[-1.0]));
        assert_eq!(setup.d(&v(&[0.0])).unwrap(), 0.5);
        assert_eq!(setup.theta0_for(&v(&[0.0])).unwrap(), 0.5f64.sqrt());
        assert!(setup.theta0_covers(&v(&[0.0]), 0.75).unwrap());
        assert!(!setup.theta0_covers(&v(&[0.0]), 0.7).unwrap());
    }

    #[test]
    fn setup_kind_validation() {
        assert!(ProxSetup::euclidean(FeasibleSet::<f64>::simplex(2).unwrap()).is_err());
        assert!(ProxSetup::entropy(FeasibleSet::cube(2, 0.0, 1.0).unwrap()).is_err());
    }
}
