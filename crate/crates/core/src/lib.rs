//! Adaptive mirror descent for quasiconvex objectives with convex functional
//! constraints, plus numerical checks of the accompanying guarantees.
//!
//! The core is generic over the scalar type (`f32` or `f64`); the aliases at
//! the bottom fix it to `f64`.

pub mod analysis;
pub mod error;
pub mod funclib;
pub mod geometry;
pub mod interp;
pub mod oracles;
pub mod prox;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use funclib::{CountableKinkFunction, LiftedKinkFunction, MaxQuadObjective, QuadraticPiece, SymMatrix};
pub use geometry::{FeasibleSet, NormKind, SetKind, Vector};
pub use oracles::{
    max_constraint, Constraint, ConstraintMax, ConstraintRef, LinearConstraint, NormBallResidual, Objective,
    ObjectiveRef, SelectionRule, Smoothness, SubgradientSet,
};
pub use prox::{ProxKind, ProxSetup};
pub use scalar::Scalar;
pub use solver::{solve, Problem, SolverOptions, SolverReport, SolverState, StepKind, StepRecord, StopReason};

pub type Vector64 = Vector<f64>;
pub type FeasibleSet64 = FeasibleSet<f64>;
pub type SubgradientSet64 = SubgradientSet<f64>;
pub type ProxSetup64 = ProxSetup<f64>;
pub type Problem64 = Problem<f64>;
pub type SolverReport64 = SolverReport<f64>;
pub type MaxQuadObjective64 = MaxQuadObjective<f64>;
pub type CountableKinkFunction64 = CountableKinkFunction<f64>;
