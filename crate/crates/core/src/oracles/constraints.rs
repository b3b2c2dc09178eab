use serde::{Deserialize, Serialize};

use super::subgradient::dual_norm_subgradient;
use super::{Constraint, ConstraintRef};
use crate::error::{Error, Result};
use crate::geometry::{NormKind, Vector};
use crate::scalar::Scalar;

/// `g(x) = <a, x> - b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LinearConstraint<S> {
    pub a: Vector<S>,
    pub b: S,
}

impl<S: Scalar> LinearConstraint<S> {
    pub fn new(a: Vector<S>, b: S) -> Self {
        Self { a, b }
    }
}

impl<S: Scalar> Constraint<S> for LinearConstraint<S> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn value(&self, x: &Vector<S>) -> S {
        self.a.dot(x) - self.b
    }

    fn subgradient(&self, _x: &Vector<S>) -> Vector<S> {
        self.a.clone()
    }

    fn lipschitz(&self, primal: NormKind) -> S {
        self.a.dual_norm(primal)
    }
}

/// `g(x) = ||x - center||_norm - radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct NormBallResidual<S> {
    pub center: Vector<S>,
    pub radius: S,
    pub norm: NormKind,
}

impl<S: Scalar> NormBallResidual<S> {
    pub fn new(center: Vector<S>, radius: S, norm: NormKind) -> Result<Self> {
        if !(radius.is_finite() && radius >= S::zero()) {
            return Err(Error::InvalidInput("norm ball radius must be >= 0".into()));
        }
        Ok(Self { center, radius, norm })
    }
}

impl<S: Scalar> Constraint<S> for NormBallResidual<S> {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn value(&self, x: &Vector<S>) -> S {
        x.distance(&self.center, self.norm) - self.radius
    }

    fn subgradient(&self, x: &Vector<S>) -> Vector<S> {
        dual_norm_subgradient((x - &self.center).as_slice(), self.norm)
    }

    fn lipschitz(&self, primal: NormKind) -> S {
        // subgradients of ||.||_K fill the unit ball of K*, measured in the dual of `primal`
        NormKind::equivalence_constant(self.norm.dual(), primal.dual(), self.center.dim())
    }
}

/// Result of [`max_constraint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintMax<S> {
    /// `max_m g_m(x)`.
    pub value: S,
    /// Smallest index exceeding the threshold when one does, otherwise the
    /// smallest index attaining the maximum.
    pub index: usize,
    /// Whether some constraint exceeds the threshold.
    pub violated: bool,
}

/// Evaluates all constraints at `x`; ties resolve to the smallest index.
pub fn max_constraint<S: Scalar>(
    x: &Vector<S>,
    constraints: &[ConstraintRef<S>],
    threshold: Option<S>,
) -> Result<ConstraintMax<S>> {
    if constraints.is_empty() {
        return Err(Error::EmptyConstraints);
    }
    let mut value = S::neg_infinity();
    let mut argmax = 0;
    let mut first_violation = None;
    for (m, g) in constraints.iter().enumerate() {
        x.check_dim(g.dim())?;
        let gx = g.value(x);
        if gx > value {
            value = gx;
            argmax = m;
        }
        if let Some(t) = threshold {
            if first_violation.is_none() && gx > t {
                first_violation = Some(m);
            }
        }
    }
    Ok(ConstraintMax {
        value,
        index: first_violation.unwrap_or(argmax),
        violated: first_violation.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn v(c: &[f64]) -> Vector<f64> {
        Vector::from_f64(c).unwrap()
    }

    fn linear(a: f64, b: f64) -> ConstraintRef<f64> {
        Arc::new(LinearConstraint::new(v(&[a]), b))
    }

    #[test]
    fn max_constraint_examples() {
        // g1 = x - 1, g2 = -x at x = 3
        let cs = vec![linear(1.0, 1.0), linear(-1.0, 0.0)];
        let r = max_constraint(&v(&[3.0]), &cs, None).unwrap();
        assert_eq!((r.value, r.index), (2.0, 0));

        let zero: ConstraintRef<f64> = Arc::new(LinearConstraint::new(v(&[0.0]), 0.0));
        let r = max_constraint(&v(&[5.0]), &[zero], None).unwrap();
        assert_eq!((r.value, r.index), (0.0, 0));

        let cs = vec![linear(1.0, 0.0), linear(1.0, 0.0)];
        assert_eq!(max_constraint(&v(&[2.0]), &cs, None).unwrap().index, 0);
    }

    #[test]
    fn threshold_selects_smallest_violating_index() {
        // g1 = x - 0.95 (0.05 at x = 1), g2 = 2x - 1 (1.0 at x = 1)
        let cs = vec![linear(1.0, 0.95), linear(2.0, 1.0)];
        let r = max_constraint(&v(&[1.0]), &cs, Some(0.01)).unwrap();
        assert_eq!(r.index, 0);
        assert!(r.violated);
        assert_eq!(r.value, 1.0);
        let r = max_constraint(&v(&[1.0]), &cs, Some(2.0)).unwrap();
        assert_eq!(r.index, 1);
        assert!(!r.violated);
    }

    #[test]
    fn empty_constraint_list_is_an_error() {
        assert_eq!(max_constraint::<f64>(&v(&[1.0]), &[], None), Err(Error::EmptyConstraints));
    }

    #[test]
    fn norm_ball_lipschitz_constants() {
        let g = NormBallResidual::new(v(&[0.0, 0.0]), 1.0, NormKind::L1).unwrap();
        assert!((g.lipschitz(NormKind::Euclidean) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.lipschitz(NormKind::L1), 1.0);
        let g = NormBallResidual::new(v(&[0.0, 0.0]), 1.0, NormKind::Euclidean).unwrap();
        assert_eq!(g.lipschitz(NormKind::Euclidean), 1.0);
        assert_eq!(g.subgradient(&v(&[3.0, 4.0])), v(&[0.6, 0.8]));
        let g = NormBallResidual::new(v(&[0.0, 0.0]), 1.0, NormKind::LInf).unwrap();
        assert_eq!(g.subgradient(&v(&[-3.0, 2.0])), v(&[-1.0, 0.0]));
    }
}
