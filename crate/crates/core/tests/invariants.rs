use proptest::prelude::*;
use rotflow_core::propagator::{covariance_q, propagator_u};
use rotflow_core::vector_evolution::leray_project;
use rotflow_core::{Grid, Matrix, MatrixFunSpec, QuadParams, TimeProfile, Vector, VectorField};

fn generator(a: f64, b: f64, c: f64) -> MatrixFunSpec {
    let base = Matrix::rotation_generator(3, 0, 1, a) + Matrix::rotation_generator(3, 1, 2, b) + Matrix::diag(&[c, 0.0, -c]);
    MatrixFunSpec::TimeScaled { base, profile: TimeProfile::Sine { amplitude: 1.0, frequency: 1.5, phase: 0.2 } }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn propagator_cocycle(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -1.0..1.0f64,
                          s in 0.0..2.0f64, dr in 0.0..1.0f64, dt in 0.0..1.0f64) {
        let m = generator(a, b, c);
        let (r, t) = (s + dr, s + dr + dt);
        let lhs = propagator_u(&m, t, r).unwrap() * propagator_u(&m, r, s).unwrap();
        let rhs = propagator_u(&m, t, s).unwrap();
        prop_assert!((lhs - rhs).frobenius_norm() <= 1e-12 * (1.0 + rhs.frobenius_norm()));
        let back = propagator_u(&m, s, t).unwrap() * rhs;
        prop_assert!((back - Matrix::identity(3)).frobenius_norm() <= 1e-12 * (1.0 + rhs.frobenius_norm().powi(2)));
    }

    #[test]
    fn covariance_is_positive_and_bounded(a in -2.0..2.0f64, c in -1.0..1.0f64, s in 0.0..2.0f64, dt in 1e-3..1.0f64) {
        let m = generator(a, 0.3, c);
        let t = s + dt;
        let q = covariance_q(&m, t, s, &QuadParams::default()).unwrap();
        prop_assert!(q.asymmetry() == 0.0);
        let eig = q.symmetric_eigenvalues();
        // ‖∫ₛʳ M‖ ≤ ‖base‖·(t − s) since the profile is bounded by 1, so
        // U(r,s)U(r,s)ᵀ lies between e^{∓2‖base‖(t−s)}.
        let MatrixFunSpec::TimeScaled { base, .. } = &m else { unreachable!() };
        let growth = (2.0 * base.operator_norm() * dt).exp();
        for &l in eig.as_slice() {
            prop_assert!(l > 0.0 && l >= dt / growth * (1.0 - 1e-9) && l <= dt * growth * (1.0 + 1e-9));
        }
    }

    #[test]
    fn leray_projection_is_idempotent(seed in 0u64..1000) {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let w = Vector::from_slice(&[1.0 + (seed % 7) as f64, 2.0 - (seed % 3) as f64]);
        let u = VectorField::from_fn(g, |x| {
            let phase = w.dot(x) * core::f64::consts::PI / 2.0;
            Vector::from_slice(&[phase.sin(), (0.5 * phase).cos() * x[0].cos()])
        });
        let p = leray_project(&u);
        let pp = leray_project(&p);
        let diff: f64 = p.components().iter().zip(pp.components()).map(|(a, b)| a.sub(b).unwrap().max_abs()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
        prop_assert!(p.divergence().max_abs() < 1e-9 * (1.0 + u.max_abs()));
    }
}
