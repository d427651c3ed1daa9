//! Library results against closed forms worked out by hand.

use rotflow_core::kato::solve_mild;
use rotflow_core::ou_kernel::evolve_scalar;
use rotflow_core::propagator::{covariance_q, drift_g, propagator_u};
use rotflow_core::vector_evolution::evolve_vector;
use rotflow_core::{
    Grid, Matrix, MatrixFunSpec, Problem, QuadParams, ScalarField, SolverParams, Vector, VectorField, VectorFunSpec,
};

fn close(a: &Matrix, b: &Matrix, tol: f64) {
    let err = (*a - *b).frobenius_norm();
    assert!(err <= tol * (1.0 + b.frobenius_norm()), "{a:?} vs {b:?}: {err:e}");
}

#[test]
fn saddle_propagator_covariance_and_drift() {
    let m = MatrixFunSpec::Constant(Matrix::diag(&[1.0, -1.0]));
    let f = VectorFunSpec::Constant(Vector::from_slice(&[0.5, -2.0]));
    let quad = QuadParams::default();
    let (s, t) = (0.3, 1.1);
    let tau: f64 = t - s;
    close(&propagator_u(&m, t, s).unwrap(), &Matrix::diag(&[tau.exp(), (-tau).exp()]), 1e-14);
    let q = Matrix::diag(&[((2.0 * tau).exp() - 1.0) / 2.0, (1.0 - (-2.0 * tau).exp()) / 2.0]);
    close(&covariance_q(&m, t, s, &quad).unwrap(), &q, 1e-11);
    let g = drift_g(&m, &f, t, s, &quad).unwrap();
    let expected = [0.5 * (tau.exp() - 1.0), -2.0 * (1.0 - (-tau).exp())];
    for (a, b) in g.as_slice().iter().zip(expected) {
        assert!((a - b).abs() < 1e-11, "{a} vs {b}");
    }
}

#[test]
fn rotation_with_constant_drift() {
    // M² = −b²I, so exp(τM) = cos(bτ)I + sin(bτ)/b·M.
    let b = 1.7;
    let mm = Matrix::rotation_generator(2, 0, 1, b);
    let m = MatrixFunSpec::Constant(mm);
    let fv = Vector::from_slice(&[0.4, 0.9]);
    let f = VectorFunSpec::Constant(fv);
    let tau: f64 = 0.8;
    let u = Matrix::identity(2).scale((b * tau).cos()) + mm.scale((b * tau).sin() / b);
    close(&propagator_u(&m, 2.0 + tau, 2.0).unwrap(), &u, 1e-14);
    let g = drift_g(&m, &f, 2.0 + tau, 2.0, &QuadParams::default()).unwrap();
    let expected = fv.scale((b * tau).sin() / b) + mm.mul_vec(&fv).scale((1.0 - (b * tau).cos()) / (b * b));
    assert!((g - expected).norm() < 1e-12, "{g:?} vs {expected:?}");
}

#[test]
fn heat_smooths_an_isotropic_gaussian() {
    let sigma2 = 0.7;
    let tau = 0.4;
    let g = Grid::new(2, 128, 12.0).unwrap();
    let phi = ScalarField::from_fn(g, |x| (-x.dot(x) / (2.0 * sigma2)).exp());
    let out = evolve_scalar(&Problem::heat(2).unwrap(), &phi, 1.0, 1.0 + tau).unwrap();
    let var = sigma2 + 2.0 * tau;
    let exact = ScalarField::from_fn(g, |x| sigma2 / var * (-x.dot(x) / (2.0 * var)).exp());
    assert!(out.sub(&exact).unwrap().max_abs() < 1e-12);
}

#[test]
fn vector_evolution_rotates_the_components_back() {
    // W = U(s,t)·G(t,s)u: for a constant field the scalar part is the identity.
    let b = 0.9;
    let mm = Matrix::rotation_generator(2, 0, 1, b);
    let p = Problem::new(MatrixFunSpec::Constant(mm), VectorFunSpec::zero(2)).unwrap();
    let g = Grid::new(2, 16, 3.0).unwrap();
    let c = Vector::from_slice(&[1.0, -0.5]);
    let out = evolve_vector(&p, &VectorField::constant(g, &c), 0.0, 0.6).unwrap();
    let back = propagator_u(&p.m, 0.0, 0.6).unwrap().mul_vec(&c);
    // Fields are zero outside the box, so only points whose preimage stays inside keep the constant.
    for flat in (0..g.len()).filter(|&i| g.point(i).norm() < 1.5) {
        assert!((out.value_at(flat) - back).norm() < 1e-12);
    }
}

#[test]
fn zero_data_gives_the_zero_solution() {
    let solver = SolverParams { time_steps: 8, ..SolverParams::default() };
    let p = Problem::heat(2).unwrap().with_solver(solver);
    let u0 = VectorField::zeros(Grid::new(2, 16, 4.0).unwrap());
    let (traj, report) = solve_mild(&p, &u0, 0.5, 2.0, 4.0).unwrap();
    assert!(report.converged);
    assert_eq!(traj.sup_norm(), 0.0);
    assert_eq!(traj.times().len(), 9);
}
