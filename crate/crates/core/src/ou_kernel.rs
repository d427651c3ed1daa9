//! The scalar evolution operator G(t,s)φ(x) = (φ ∗ k_{t,s})(U(t,s)x + g(t,s)),
//! where k_{t,s} is the Gaussian with covariance 2Q(t,s), plus two oracles:
//! brute-force quadrature of the kernel integral and the closed-form image of
//! a Gaussian.

use alloc::vec::Vec;

// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{gaussian_multiply, ScalarField, Spectrum};
use crate::linalg::{Matrix, Vector};
use crate::propagator::{Problem, PropagatorBundle};
use crate::quadrature::{integrate_panels, QuadParams};

/// Below this det Q the direct oracle falls back to φ(Ux + g).
pub const DIRECT_DET_FLOOR: f64 = 1e-30;
/// Half-width of the standardized integration cube of the direct oracle.
pub const DIRECT_CUTOFF: f64 = 10.0;
/// Absolute tolerance of the direct oracle.
pub const DIRECT_TOL: f64 = 1e-9;

/// G(t,s) for one fixed time pair, with its propagator data cached.
#[derive(Debug, Clone)]
pub struct OuEvolution {
    bundle: PropagatorBundle,
    order: usize,
}

impl OuEvolution {
    pub fn new(problem: &Problem, t: f64, s: f64) -> Result<Self> {
        Ok(Self::from_bundle(problem.bundle(t, s)?, problem.solver.interpolation_order))
    }

    pub fn from_bundle(bundle: PropagatorBundle, order: usize) -> Self {
        Self { bundle, order }
    }

    pub fn bundle(&self) -> &PropagatorBundle {
        &self.bundle
    }

    /// Convolve with k_{t,s}, then resample at U(t,s)x + g(t,s).
    pub fn apply(&self, phi: &ScalarField) -> Result<ScalarField> {
        if self.bundle.is_identity() {
            return Ok(phi.clone());
        }
        self.apply_spectrum(&phi.spectrum())
    }

    /// As [`OuEvolution::apply`], starting from the spectrum of φ.
    pub fn apply_spectrum(&self, phi: &Spectrum) -> Result<ScalarField> {
        let b = &self.bundle;
        let smoothed = gaussian_multiply(phi, &b.q)?.to_field();
        if self.bundle.is_identity() {
            return Ok(smoothed);
        }
        let out = smoothed.affine_resample(&b.u, &b.g, self.order)?;
        if !out.is_finite() {
            return Err(Error::NonFinite("scalar evolution"));
        }
        Ok(out)
    }
}

/// G(t,s)φ for t ≥ s.
pub fn evolve_scalar(problem: &Problem, phi: &ScalarField, s: f64, t: f64) -> Result<ScalarField> {
    OuEvolution::new(problem, t, s)?.apply(phi)
}

/// G(t,s)φ at `points` by adaptive quadrature of the kernel integral, for a
/// point-evaluable φ. After y = Cz with CCᵀ = 2Q the integral becomes the
/// standard normal expectation of φ(Ux + g − Cz), taken over |zᵢ| ≤ 10.
pub fn evolve_scalar_direct_fn<F>(
    problem: &Problem,
    phi: F,
    s: f64,
    t: f64,
    points: &[Vector],
) -> Result<Vec<f64>>
where
    F: Fn(&Vector) -> f64,
{
    if t <= s {
        return Err(Error::InvalidArgument(alloc::format!(
            "direct quadrature needs t > s (got s = {s}, t = {t}); use evolve_scalar"
        )));
    }
    let b = problem.bundle(t, s)?;
    let d = problem.dim();
    let centers: Vec<Vector> = points.iter().map(|x| b.u.mul_vec(x) + b.g).collect();
    if b.q.det() < DIRECT_DET_FLOOR {
        return Ok(centers.iter().map(&phi).collect());
    }
    let c = b.q.scale(2.0).cholesky()?;
    let norm = (2.0 * core::f64::consts::PI).powf(-(d as f64) / 2.0);
    let outer = QuadParams { tol: DIRECT_TOL, max_depth: 30 };
    let inner = QuadParams { tol: DIRECT_TOL / 20.0, max_depth: 30 };
    centers
        .iter()
        .map(|center| {
            let integrand = |z: &Vector| {
                let y = *center - c.mul_vec(z);
                phi(&y) * (-0.5 * z.dot(z)).exp() * norm
            };
            nested_integral(d, &integrand, &outer, &inner)
        })
        .collect()
}

/// Direct oracle for a sampled field, evaluated through its trigonometric
/// interpolant (costly: O(n^d) per integrand evaluation).
pub fn evolve_scalar_direct(
    problem: &Problem,
    phi: &ScalarField,
    s: f64,
    t: f64,
    points: &[Vector],
) -> Result<Vec<f64>> {
    let spec = phi.interpolant();
    evolve_scalar_direct_fn(problem, |x| spec.eval(x), s, t, points)
}

fn nested_integral(
    d: usize,
    f: &dyn Fn(&Vector) -> f64,
    outer: &QuadParams,
    inner: &QuadParams,
) -> Result<f64> {
    let panels = 4;
    let lim = DIRECT_CUTOFF;
    let mut failure: Option<Error> = None;
    let mut record = |r: Result<[f64; 1]>| match r {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            [0.0]
        }
    };
    let value = integrate_panels(
        |z0| {
            let level1 = integrate_panels(
                |z1| {
                    if d == 2 {
                        [f(&Vector::from_slice(&[z0, z1]))]
                    } else {
                        let level2 = integrate_panels(
                            |z2| [f(&Vector::from_slice(&[z0, z1, z2]))],
                            -lim,
                            lim,
                            panels,
                            inner,
                        );
                        match level2 {
                            Ok(v) => v,
                            Err(_) => [f64::NAN],
                        }
                    }
                },
                -lim,
                lim,
                panels,
                inner,
            );
            record(level1)
        },
        -lim,
        lim,
        panels,
        outer,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(value[0])
}

/// amp · exp(−½⟨Σ⁻¹(x−m), x−m⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianData {
    pub mean: Vector,
    pub cov: Matrix,
    pub amplitude: f64,
}

impl GaussianData {
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        let r = *x - self.mean;
        let cov_inv = self.cov.inverse()?;
        Ok(self.amplitude * (-0.5 * cov_inv.quadratic_form(&r)).exp())
    }

    pub fn sample(&self, grid: crate::field::Grid) -> Result<ScalarField> {
        let cov_inv = self.cov.inverse()?;
        Ok(ScalarField::from_fn(grid, |x| {
            let r = *x - self.mean;
            self.amplitude * (-0.5 * cov_inv.quadratic_form(&r)).exp()
        }))
    }
}

/// Closed-form G(t,s) image of a Gaussian: the convolved Gaussian
/// (Σ' = Σ + 2Q, amp' = amp·(det Σ / det Σ')^{1/2}) read at Ux + g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianImage {
    pub smoothed: GaussianData,
    pub u: Matrix,
    pub g: Vector,
}

impl GaussianImage {
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        self.smoothed.eval(&(self.u.mul_vec(x) + self.g))
    }

    pub fn sample(&self, grid: crate::field::Grid) -> Result<ScalarField> {
        let cov_inv = self.smoothed.cov.inverse()?;
        let m = self.smoothed;
        Ok(ScalarField::from_fn(grid, |x| {
            let r = self.u.mul_vec(x) + self.g - m.mean;
            m.amplitude * (-0.5 * cov_inv.quadratic_form(&r)).exp()
        }))
    }
}

pub fn gaussian_closed_form(
    problem: &Problem,
    data: &GaussianData,
    s: f64,
    t: f64,
) -> Result<GaussianImage> {
    data.cov.cholesky()?;
    let b = problem.bundle(t, s)?;
    Ok(gaussian_push(data, &b))
}

/// Closed form for an already computed bundle.
pub fn gaussian_push(data: &GaussianData, b: &PropagatorBundle) -> GaussianImage {
    let cov = data.cov + b.q.scale(2.0);
    let amplitude = data.amplitude * (data.cov.det() / cov.det()).sqrt();
    GaussianImage { smoothed: GaussianData { mean: data.mean, cov, amplitude }, u: b.u, g: b.g }
}

/// ‖G(t,s)φ − G(t,r)G(r,s)φ‖₂ / ‖φ‖₂ for s ≤ r ≤ t.
pub fn evolution_law_residual(
    problem: &Problem,
    phi: &ScalarField,
    s: f64,
    r: f64,
    t: f64,
) -> Result<f64> {
    if !(s <= r && r <= t) {
        return Err(Error::InvalidArgument(alloc::format!(
            "need s <= r <= t, got ({s}, {r}, {t})"
        )));
    }
    let norm = phi.lp_norm(2.0);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let direct = evolve_scalar(problem, phi, s, t)?;
    let split = evolve_scalar(problem, &evolve_scalar(problem, phi, s, r)?, r, t)?;
    Ok(direct.sub(&split)?.lp_norm(2.0) / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::propagator::{MatrixFunSpec, VectorFunSpec};

    fn rotating() -> Problem {
        Problem::new(
            MatrixFunSpec::Constant(Matrix::rotation_generator(2, 0, 1, 1.0)),
            VectorFunSpec::zero(2),
        )
        .unwrap()
    }

    fn radial(grid: Grid, sigma2: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x| (-x.dot(x) / (2.0 * sigma2)).exp())
    }

    #[test]
    fn identity_at_coincidence() {
        let g = Grid::new(2, 32, 6.0).unwrap();
        let phi = radial(g, 1.0);
        assert_eq!(evolve_scalar(&rotating(), &phi, 0.4, 0.4).unwrap(), phi);
    }

    #[test]
    fn heat_case_closed_form() {
        let g = Grid::new(2, 128, 10.0).unwrap();
        let sigma2 = 0.8;
        let dt = 0.35;
        let out = evolve_scalar(&Problem::heat(2).unwrap(), &radial(g, sigma2), 0.1, 0.1 + dt).unwrap();
        let s2 = sigma2 + 2.0 * dt;
        let exact = radial(g, s2).scale(sigma2 / s2);
        assert!(out.sub(&exact).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn heat_case_is_plain_convolution() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let phi = ScalarField::from_fn(g, |x| (-(x[0] - 1.0).powi(2) - 0.5 * x[1] * x[1]).exp());
        let out = evolve_scalar(&Problem::heat(2).unwrap(), &phi, 0.0, 0.6).unwrap();
        let conv = phi.gaussian_convolve(&Matrix::identity(2).scale(0.6)).unwrap();
        assert_eq!(out, conv);
    }

    #[test]
    fn rotation_leaves_radial_heat_evolution() {
        let g = Grid::new(2, 256, 10.0).unwrap();
        let phi = radial(g, 1.0);
        let rot = evolve_scalar(&rotating(), &phi, 0.0, 0.7).unwrap();
        let heat = evolve_scalar(&Problem::heat(2).unwrap(), &phi, 0.0, 0.7).unwrap();
        assert!(rot.sub(&heat).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let phi = ScalarField::constant(g, 2.5);
        let p = Problem::new(
            MatrixFunSpec::Constant(Matrix::rotation_generator(2, 0, 1, 0.7)),
            VectorFunSpec::Constant(Vector::from_slice(&[0.3, 0.0])),
        )
        .unwrap();
        let out = evolve_scalar(&p, &phi, 0.0, 0.5).unwrap();
        // Zero extension clips the corners whose image leaves the box.
        let interior: f64 = (0..g.len())
            .filter(|&i| g.point(i).norm() < 3.0)
            .map(|i| (out.values()[i] - 2.5).abs())
            .fold(0.0, f64::max);
        assert!(interior < 1e-12);
    }

    #[test]
    fn direct_oracle_kernel_has_unit_mass() {
        let p = Problem::heat(2).unwrap();
        let pts = [Vector::from_slice(&[0.2, -0.1])];
        let v = evolve_scalar_direct_fn(&p, |_| 1.0, 0.0, 0.3, &pts).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-8);
        assert!(evolve_scalar_direct_fn(&p, |_| 1.0, 0.3, 0.3, &pts).is_err());
    }

    #[test]
    fn direct_oracle_matches_closed_form() {
        let p = Problem::new(
            MatrixFunSpec::Constant(Matrix::diag(&[0.5, -0.5])),
            VectorFunSpec::Constant(Vector::from_slice(&[0.4, 0.1])),
        )
        .unwrap();
        let data = GaussianData {
            mean: Vector::from_slice(&[0.3, -0.2]),
            cov: Matrix::from_row_major(2, &[1.0, 0.2, 0.2, 0.6]).unwrap(),
            amplitude: 1.5,
        };
        let image = gaussian_closed_form(&p, &data, 0.2, 0.9).unwrap();
        let pts: Vec<Vector> =
            [[0.0, 0.0], [1.0, -0.5], [-0.7, 1.2]].iter().map(|v| Vector::from_slice(v)).collect();
        let direct = evolve_scalar_direct_fn(&p, |x| data.eval(x).unwrap(), 0.2, 0.9, &pts).unwrap();
        for (x, v) in pts.iter().zip(direct) {
            assert!((image.eval(x).unwrap() - v).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_trivial_cases() {
        let data = GaussianData { mean: Vector::from_slice(&[0.1, 0.2]), cov: Matrix::identity(2).scale(0.5), amplitude: 2.0 };
        let same = gaussian_closed_form(&rotating(), &data, 1.0, 1.0).unwrap();
        assert_eq!(same.smoothed, data);
        let heat = gaussian_closed_form(&Problem::heat(2).unwrap(), &data, 0.0, 0.25).unwrap();
        assert!((heat.smoothed.cov - Matrix::identity(2).scale(1.0)).frobenius_norm() < 1e-15);
        assert!((heat.smoothed.amplitude - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pipeline_matches_closed_form_with_drift() {
        let g = Grid::new(2, 256, 10.0).unwrap();
        let p = Problem::new(
            MatrixFunSpec::Constant(Matrix::rotation_generator(2, 0, 1, 0.8)),
            VectorFunSpec::Constant(Vector::from_slice(&[0.5, -0.25])),
        )
        .unwrap();
        let data = GaussianData { mean: Vector::from_slice(&[0.5, 0.0]), cov: Matrix::identity(2), amplitude: 1.0 };
        let out = evolve_scalar(&p, &data.sample(g).unwrap(), 0.0, 0.6).unwrap();
        let exact = gaussian_closed_form(&p, &data, 0.0, 0.6).unwrap().sample(g).unwrap();
        let rel = out.sub(&exact).unwrap().max_abs() / exact.max_abs();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn evolution_law() {
        let g = Grid::new(2, 128, 10.0).unwrap();
        let phi = ScalarField::from_fn(g, |x| (-(x[0] - 0.5).powi(2) / 1.5 - x[1] * x[1] / 0.8).exp());
        let heat = Problem::heat(2).unwrap();
        for (s, r, t) in [(0.0, 0.0, 0.5), (0.0, 0.5, 0.5), (0.1, 0.3, 0.9)] {
            assert!(evolution_law_residual(&heat, &phi, s, r, t).unwrap() <= 1e-12);
        }
        let rot = rotating();
        assert!(evolution_law_residual(&rot, &phi, 0.0, 0.0, 0.5).unwrap() <= 1e-12);
        assert!(evolution_law_residual(&rot, &phi, 0.0, 0.5, 0.5).unwrap() <= 1e-12);
    }

    #[test]
    fn positivity_up_to_ringing() {
        let g = Grid::new(2, 128, 8.0).unwrap();
        let phi = ScalarField::from_fn(g, |x| (-x.dot(x) / 0.3).exp());
        let p = Problem::new(
            MatrixFunSpec::Constant(Matrix::from_row_major(2, &[0.3, -1.0, 1.0, 0.3]).unwrap()),
            VectorFunSpec::zero(2),
        )
        .unwrap();
        let out = evolve_scalar(&p, &phi, 0.0, 0.2).unwrap();
        assert!(out.min() >= -1e-8 * phi.max_abs());
    }
}
