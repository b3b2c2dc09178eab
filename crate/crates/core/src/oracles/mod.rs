//! Oracle abstractions for the objective and the functional constraints.
//!
//! The objective is only assumed quasiconvex and locally Lipschitz, so its
//! oracle returns a whole Clarke subdifferential and the caller picks an
//! element with a [`SelectionRule`]. Constraints are convex and Lipschitz and
//! return one subgradient.

mod constraints;
mod subgradient;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use constraints::{max_constraint, ConstraintMax, LinearConstraint, NormBallResidual};
pub use subgradient::{SelectionRule, SubgradientSet};

use crate::error::Result;
use crate::geometry::Vector;
use crate::scalar::Scalar;

/// Declared regularity class parameters: Lipschitz constant `L` of the
/// subgradient between kinks, and the total subdifferential jump budget `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Smoothness<S> {
    pub lipschitz_gradient: S,
    pub jump_budget: S,
}

impl<S: Scalar> Smoothness<S> {
    pub fn new(lipschitz_gradient: S, jump_budget: S) -> Self {
        Self { lipschitz_gradient, jump_budget }
    }

    pub fn smooth(lipschitz_gradient: S) -> Self {
        Self::new(lipschitz_gradient, S::zero())
    }
}

/// Quasiconvex, locally Lipschitz objective.
pub trait Objective<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector<S>) -> Result<S>;

    /// Clarke subdifferential at `x`; a singleton wherever `f` is differentiable.
    fn subdifferential(&self, x: &Vector<S>) -> Result<SubgradientSet<S>>;

    fn is_kink(&self, x: &Vector<S>) -> Result<bool> {
        Ok(!self.subdifferential(x)?.is_singleton())
    }

    fn smoothness(&self) -> Smoothness<S>;
}

/// Convex Lipschitz functional constraint `g(x) <= 0`.
pub trait Constraint<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector<S>) -> S;

    fn subgradient(&self, x: &Vector<S>) -> Vector<S>;

    /// Lipschitz constant `M_g` with respect to the primal norm `primal`.
    fn lipschitz(&self, primal: crate::geometry::NormKind) -> S;
}

pub type ObjectiveRef<S> = Arc<dyn Objective<S>>;
pub type ConstraintRef<S> = Arc<dyn Constraint<S>>;
