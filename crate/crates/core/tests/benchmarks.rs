use std::sync::Arc;

use mirrorcert::analysis::{certify, replay_mirror_steps};
use mirrorcert::solver::{solve, Problem, SolverOptions, StopReason};
use mirrorcert::{
    ConstraintRef, FeasibleSet, LinearConstraint, MaxQuadObjective, NormBallResidual, NormKind, Objective, ProxSetup,
    QuadraticPiece, SymMatrix, Vector,
};

fn v(c: &[f64]) -> Vector<f64> {
    Vector::from_f64(c).unwrap()
}

const EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.02];

fn one_dim(eps: f64) -> Problem<f64> {
    let domain = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
    let f = QuadraticPiece::new(SymMatrix::diagonal(&[2.0]), v(&[0.0]), 0.0).unwrap();
    let g: ConstraintRef<f64> = Arc::new(LinearConstraint::new(v(&[-1.0]), 0.0));
    let prox = ProxSetup::euclidean(domain).unwrap().with_center(v(&[-1.0])).unwrap();
    Problem::new(Arc::new(f), vec![g], prox, eps, 0.5f64.sqrt()).unwrap()
}

fn maxquad(eps: f64) -> (Problem<f64>, MaxQuadObjective<f64>) {
    let domain = FeasibleSet::cube(2, -2.0, 2.0).unwrap();
    let f = MaxQuadObjective::new(
        vec![
            QuadraticPiece::new(SymMatrix::identity(2), v(&[1.0, 1.0]), 0.0).unwrap(),
            QuadraticPiece::new(SymMatrix::diagonal(&[2.0, 1.0]), v(&[-1.0, 0.5]), 0.3).unwrap(),
        ],
        &domain,
    )
    .unwrap();
    let g: ConstraintRef<f64> = Arc::new(NormBallResidual::new(v(&[0.0, 0.0]), 1.0, NormKind::L1).unwrap());
    // d(x) = 1/2 ||x||^2 <= 1/2 on the l1 unit ball
    let prox = ProxSetup::euclidean(domain).unwrap();
    (Problem::new(Arc::new(f.clone()), vec![g], prox, eps, 0.5f64.sqrt()).unwrap(), f)
}

/// Grid search over the feasible region followed by local zooming.
fn brute_force_minimizer(f: &dyn Objective<f64>, feasible: impl Fn(f64, f64) -> bool) -> Vector<f64> {
    let (mut cx, mut cy, mut half) = (0.0, 0.0, 1.0);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for _ in 0..30 {
        let n = 80;
        for i in 0..=n {
            for j in 0..=n {
                let x = cx - half + 2.0 * half * i as f64 / n as f64;
                let y = cy - half + 2.0 * half * j as f64 / n as f64;
                if feasible(x, y) {
                    let val = f.value(&v(&[x, y])).unwrap();
                    if val < best.0 {
                        best = (val, x, y);
                    }
                }
            }
        }
        cx = best.1;
        cy = best.2;
        half *= 0.5;
    }
    v(&[best.1, best.2])
}

#[test]
fn one_dim_benchmark_certificates() {
    for eps in EPSILONS {
        let problem = one_dim(eps);
        let report = solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(report.stop_reason, StopReason::CriterionMet);
        assert!(report.iterations_used <= report.iteration_bound);
        let cert = certify(&report, &problem, Some(&v(&[0.0])), problem.objective.smoothness()).unwrap();
        assert!(cert.holds, "eps {eps}: {cert:?}");
        assert!(replay_mirror_steps(&problem.prox, &report.state.steps, &v(&[0.0])).unwrap() <= 1e-7);
    }
}

#[test]
fn maxquad_benchmark_certificates() {
    let (_, f) = maxquad(0.1);
    let x_star = brute_force_minimizer(&f, |x, y| x.abs() + y.abs() <= 1.0);
    for eps in EPSILONS {
        let (problem, f) = maxquad(eps);
        assert!((problem.constraint_lipschitz() - 2f64.sqrt()).abs() < 1e-15);
        let report = solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(report.stop_reason, StopReason::CriterionMet);
        assert!(report.iterations_used <= report.iteration_bound);
        let cert = certify(&report, &problem, Some(&x_star), f.smoothness()).unwrap();
        assert!(cert.holds, "eps {eps}: {cert:?}");
        assert!(replay_mirror_steps(&problem.prox, &report.state.steps, &x_star).unwrap() <= 1e-7);
    }
}

#[test]
fn entropy_prox_on_the_simplex() {
    // minimize max(<c1, x>, <c2, x>) over the simplex subject to x_0 <= 0.6
    let simplex = FeasibleSet::simplex(3).unwrap();
    let f = MaxQuadObjective::new(
        vec![
            QuadraticPiece::new(SymMatrix::zeros(3), v(&[-1.0, -2.0, -3.0]), 0.0).unwrap(),
            QuadraticPiece::new(SymMatrix::zeros(3), v(&[-3.0, -1.0, -0.5]), 0.0).unwrap(),
        ],
        &simplex,
    )
    .unwrap();
    let g: ConstraintRef<f64> = Arc::new(LinearConstraint::new(v(&[1.0, 0.0, 0.0]), 0.6));
    let prox = ProxSetup::entropy(simplex).unwrap();
    let problem = Problem::new(Arc::new(f), vec![g], prox, 0.05, 3f64.ln().sqrt()).unwrap();
    let report = solve(&problem, &SolverOptions::default()).unwrap();
    assert_eq!(report.stop_reason, StopReason::CriterionMet);
    assert!(report.iterations_used <= report.iteration_bound);
    for s in &report.state.steps {
        assert!((s.point.sum() - 1.0).abs() < 1e-12);
        assert!(replay_mirror_steps(&problem.prox, std::slice::from_ref(s), &v(&[0.0, 0.5, 0.5])).unwrap() <= 1e-7);
    }
}

#[test]
fn single_precision_run() {
    let domain = FeasibleSet::<f32>::cube(1, -1.0, 1.0).unwrap();
    let f = QuadraticPiece::new(SymMatrix::diagonal(&[2.0f32]), Vector::scalar(0.0), 0.0).unwrap();
    let g: ConstraintRef<f32> = Arc::new(LinearConstraint::new(Vector::scalar(-1.0f32), 0.0));
    let prox = ProxSetup::euclidean(domain).unwrap().with_center(Vector::scalar(-1.0f32)).unwrap();
    let problem = Problem::new(Arc::new(f), vec![g], prox, 0.1f32, 0.5f32.sqrt()).unwrap();
    let report = solve(&problem, &SolverOptions::default()).unwrap();
    assert_eq!(report.stop_reason, StopReason::CriterionMet);
    assert!(report.iterations_used <= report.iteration_bound);
    assert!(report.best_objective_value.unwrap() <= 0.01 + 1e-6);
}
