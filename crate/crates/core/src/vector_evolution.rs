//! The vector evolution system W(t,s)u = U(s,t)·(G(t,s)u₁, …, G(t,s)u_d), its
//! restriction V(t,s) to solenoidal fields, the Helmholtz–Leray projection
//! and the generator B(t)u = Δu + (M(t)x + f(t))·∇u − M(t)u.

use alloc::vec::Vec;

use num_complex::Complex64;
// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, Spectrum, VectorField};
use crate::ou_kernel::OuEvolution;
use crate::propagator::{Problem, PropagatorBundle};

/// Input divergence ratio accepted by [`evolve_solenoidal`].
pub const SOLENOIDAL_INPUT_TOL: f64 = 1e-8;

/// ℙ on component spectra: û − ξ(ξ·û)/|ξ|² with first-order wavenumbers;
/// modes with ξ = 0 pass through.
pub fn leray_project_spectra(spectra: &[Spectrum]) -> Vec<Spectrum> {
    let grid = *spectra[0].grid();
    let d = grid.dim();
    let odd: Vec<f64> = (0..grid.n()).map(|k| grid.odd_wavenumber(k)).collect();
    let mut out: Vec<Vec<Complex64>> = spectra.iter().map(|s| s.data().to_vec()).collect();
    for flat in 0..grid.len() {
        let idx = grid.unflatten(flat);
        let mut xi = [0.0; 3];
        let mut norm2 = 0.0;
        for a in 0..d {
            xi[a] = odd[idx[a]];
            norm2 += xi[a] * xi[a];
        }
        if norm2 == 0.0 {
            continue;
        }
        let mut dot = Complex64::new(0.0, 0.0);
        for a in 0..d {
            dot += out[a][flat] * xi[a];
        }
        for a in 0..d {
            out[a][flat] -= dot * (xi[a] / norm2);
        }
    }
    out.into_iter().map(|data| Spectrum::from_data(grid, data)).collect()
}

pub fn leray_project(u: &VectorField) -> VectorField {
    let spectra: Vec<Spectrum> = u.components().iter().map(ScalarField::spectrum).collect();
    fields_from_spectra(&leray_project_spectra(&spectra))
}

pub(crate) fn fields_from_spectra(spectra: &[Spectrum]) -> VectorField {
    VectorField::new(spectra.iter().map(Spectrum::to_field).collect())
        .expect("spectra share one grid")
}

/// W(t,s) for one time pair.
#[derive(Debug, Clone)]
pub struct VectorEvolution {
    scalar: OuEvolution,
}

impl VectorEvolution {
    pub fn new(problem: &Problem, t: f64, s: f64) -> Result<Self> {
        Ok(Self { scalar: OuEvolution::new(problem, t, s)? })
    }

    pub fn from_bundle(bundle: PropagatorBundle, order: usize) -> Self {
        Self { scalar: OuEvolution::from_bundle(bundle, order) }
    }

    pub fn bundle(&self) -> &PropagatorBundle {
        self.scalar.bundle()
    }

    pub fn apply(&self, u: &VectorField) -> Result<VectorField> {
        if self.bundle().is_identity() {
            return Ok(u.clone());
        }
        let evolved = u.map_components(|c| self.scalar.apply(c))?;
        Ok(evolved.apply_matrix(&self.bundle().u_inv))
    }

    /// W(t,s) applied to a field given by its component spectra.
    pub fn apply_spectra(&self, spectra: &[Spectrum]) -> Result<VectorField> {
        let comps = spectra
            .iter()
            .map(|s| self.scalar.apply_spectrum(s))
            .collect::<Result<Vec<_>>>()?;
        let evolved = VectorField::new(comps)?;
        if self.bundle().is_identity() {
            return Ok(evolved);
        }
        Ok(evolved.apply_matrix(&self.bundle().u_inv))
    }
}

/// W(t,s)u for t ≥ s.
pub fn evolve_vector(problem: &Problem, u: &VectorField, s: f64, t: f64) -> Result<VectorField> {
    check_dims(problem, u.grid())?;
    VectorEvolution::new(problem, t, s)?.apply(u)
}

/// V(t,s)u: W(t,s) restricted to solenoidal input (divergence ratio ≤ 1e-8).
pub fn evolve_solenoidal(problem: &Problem, u: &VectorField, s: f64, t: f64) -> Result<VectorField> {
    check_dims(problem, u.grid())?;
    let ratio = u.divergence_ratio();
    if !(ratio <= SOLENOIDAL_INPUT_TOL) {
        return Err(Error::NotSolenoidal { ratio });
    }
    VectorEvolution::new(problem, t, s)?.apply(u)
}

fn check_dims(problem: &Problem, grid: &Grid) -> Result<()> {
    if problem.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), found: grid.dim() });
    }
    Ok(())
}

/// B(t)u = Δu + (M(t)x + f(t))·∇u − M(t)u, with the true coordinate x.
pub fn apply_generator(problem: &Problem, u: &VectorField, t: f64) -> Result<VectorField> {
    let grid = *u.grid();
    check_dims(problem, &grid)?;
    let d = grid.dim();
    let m = problem.m.eval(t);
    let f = problem.f.eval(t)?;
    let drift: Vec<crate::linalg::Vector> =
        (0..grid.len()).map(|i| m.mul_vec(&grid.point(i)) + f).collect();
    let reaction = u.apply_matrix(&m);
    let comps = (0..d)
        .map(|a| {
            let c = u.component(a);
            let lap = c.laplacian();
            let grad = c.gradient();
            let values = (0..grid.len())
                .map(|i| {
                    let adv: f64 = (0..d).map(|b| drift[i][b] * grad.component(b).values()[i]).sum();
                    lap.values()[i] + adv - reaction.component(a).values()[i]
                })
                .collect();
            ScalarField::new(grid, values)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)
}

/// Inner sub-box [−ρL, ρL)^d on which generator residuals are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorWindow {
    rho: f64,
}

impl Default for GeneratorWindow {
    fn default() -> Self {
        Self { rho: 0.5 }
    }
}

impl GeneratorWindow {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 0.75) {
            return Err(Error::InvalidArgument(alloc::format!(
                "window fraction {rho} outside (0, 0.75]"
            )));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn contains(&self, grid: &Grid, flat: usize) -> bool {
        let lim = self.rho * grid.half_width();
        let x = grid.point(flat);
        (0..grid.dim()).all(|a| x[a] >= -lim && x[a] < lim)
    }

    /// L² norm of `u` restricted to the window.
    pub fn l2_norm(&self, u: &VectorField) -> f64 {
        let grid = u.grid();
        let sum: f64 = (0..grid.len())
            .filter(|&i| self.contains(grid, i))
            .map(|i| u.components().iter().map(|c| c.values()[i].powi(2)).sum::<f64>())
            .sum();
        (grid.cell_volume() * sum).sqrt()
    }
}

/// Windowed ‖(W(t+dt,s) − W(t−dt,s))u₀/(2dt) − B(t)W(t,s)u₀‖₂ relative to
/// ‖B(t)W(t,s)u₀‖₂ (0 when both vanish).
pub fn generator_residual(
    problem: &Problem,
    u0: &VectorField,
    s: f64,
    t: f64,
    dt: f64,
    window: &GeneratorWindow,
) -> Result<f64> {
    if !(dt > 0.0 && t - dt >= s) {
        return Err(Error::InvalidArgument(alloc::format!(
            "need 0 < dt <= t - s (s = {s}, t = {t}, dt = {dt})"
        )));
    }
    let ahead = evolve_vector(problem, u0, s, t + dt)?;
    let behind = evolve_vector(problem, u0, s, t - dt)?;
    let here = evolve_vector(problem, u0, s, t)?;
    let generator = apply_generator(problem, &here, t)?;
    let fd = ahead.sub(&behind)?.scale(0.5 / dt);
    let reference = window.l2_norm(&generator);
    let diff = window.l2_norm(&fd.sub(&generator)?);
    if reference == 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(diff / reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Vector};
    use crate::propagator::{MatrixFunSpec, VectorFunSpec};
    use core::f64::consts::PI;

    fn rotating(rate: f64) -> Problem {
        Problem::new(
            MatrixFunSpec::Constant(Matrix::rotation_generator(2, 0, 1, rate)),
            VectorFunSpec::zero(2),
        )
        .unwrap()
    }

    fn stream_field(grid: Grid) -> VectorField {
        // u = (−∂₂ψ, ∂₁ψ) for ψ = exp(−|x − c|²/2).
        VectorField::from_fn(grid, |x| {
            let (a, b) = (x[0] - 0.4, x[1] + 0.2);
            let psi = (-(a * a + b * b) / 2.0).exp();
            Vector::from_slice(&[b * psi, -a * psi])
        })
    }

    fn gradient_field(grid: Grid) -> VectorField {
        ScalarField::from_fn(grid, |x| (-(x[0] * x[0] + 0.5 * x[1] * x[1])).exp() * (1.0 + x[0]))
            .gradient()
    }

    #[test]
    fn projection_annihilates_gradients() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let p = leray_project(&gradient_field(g));
        assert!(p.max_abs() < 1e-12);
    }

    #[test]
    fn projection_keeps_solenoidal_fields() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let u = stream_field(g);
        assert!(leray_project(&u).sub(&u).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_solenoidal() {
        let g = Grid::new(3, 16, 3.0).unwrap();
        let u = VectorField::from_fn(g, |x| {
            Vector::from_slice(&[(x[0] * 1.7).sin() * x[1], (x[2] + x[0]).cos(), x[1] * x[2] * 0.1])
        });
        let p = leray_project(&u);
        let pp = leray_project(&p);
        assert!(pp.sub(&p).unwrap().max_abs() < 1e-12);
        assert!(p.divergence().max_abs() < 1e-10 * u.max_abs().max(1.0));
        // (I − ℙ)u is curl-free.
        let rest = u.sub(&p).unwrap();
        let jac = rest.jacobian();
        for a in 0..3 {
            for b in 0..3 {
                let curl = jac[a].component(b).sub(jac[b].component(a)).unwrap().max_abs();
                assert!(curl < 1e-10, "{a}{b}: {curl}");
            }
        }
    }

    #[test]
    fn identity_at_coincidence() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let u = stream_field(g);
        assert_eq!(evolve_vector(&rotating(1.0), &u, 0.3, 0.3).unwrap(), u);
        assert_eq!(evolve_solenoidal(&rotating(1.0), &u, 0.3, 0.3).unwrap(), u);
    }

    #[test]
    fn heat_case_has_no_matrix_factor() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let u = stream_field(g);
        let p = Problem::heat(2).unwrap();
        let w = evolve_vector(&p, &u, 0.0, 0.4).unwrap();
        for a in 0..2 {
            let scalar = crate::ou_kernel::evolve_scalar(&p, u.component(a), 0.0, 0.4).unwrap();
            assert_eq!(&scalar, w.component(a));
        }
    }

    #[test]
    fn constant_field_is_rotated() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let e1 = Vector::unit(2, 0);
        let u = VectorField::constant(g, &e1);
        let p = rotating(1.3);
        let out = evolve_vector(&p, &u, 0.0, 0.6).unwrap();
        let expected = crate::propagator::propagator_u(&p.m, 0.0, 0.6).unwrap().mul_vec(&e1);
        let i = g.flatten([g.n() / 2, g.n() / 2, 0]);
        assert!((out.value_at(i) - expected).norm() < 1e-12);
    }

    #[test]
    fn taylor_green_stays_solenoidal() {
        let g = Grid::new(2, 64, PI).unwrap();
        let k = 2.0;
        let u = VectorField::from_fn(g, |x| {
            Vector::from_slice(&[-(k * x[0]).cos() * (k * x[1]).sin(), (k * x[0]).sin() * (k * x[1]).cos()])
        });
        let out = evolve_solenoidal(&Problem::heat(2).unwrap(), &u, 0.0, 0.3).unwrap();
        assert!(out.divergence().lp_norm(2.0) <= 1e-8 * u.lp_norm(2.0));
    }

    #[test]
    fn gradient_input_rejected() {
        let g = Grid::new(2, 32, 6.0).unwrap();
        let err = evolve_solenoidal(&rotating(1.0), &gradient_field(g), 0.0, 0.1);
        assert!(matches!(err, Err(Error::NotSolenoidal { .. })));
    }

    #[test]
    fn rotation_divergence_invariance() {
        // Wide enough that the smoothed field (σ² = 2) is negligible at the box edge.
        let g = Grid::new(2, 256, 10.0).unwrap();
        let u = stream_field(g);
        let out = evolve_solenoidal(&rotating(0.9), &u, 0.0, 0.5).unwrap();
        assert!(out.divergence().lp_norm(2.0) <= 1e-6 * u.lp_norm(2.0));
        // Orthogonal factor: pointwise norms match the componentwise G part.
        let p = rotating(0.9);
        let ev = VectorEvolution::new(&p, 0.5, 0.0).unwrap();
        let g_part = u
            .map_components(|c| crate::ou_kernel::evolve_scalar(&p, c, 0.0, 0.5))
            .unwrap();
        assert!((out.lp_norm(2.0) - g_part.lp_norm(2.0)).abs() <= 1e-8 * g_part.lp_norm(2.0));
        assert!((ev.bundle().u.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generator_trivial_cases() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let c = Vector::from_slice(&[1.0, -2.0]);
        let m = Matrix::from_row_major(2, &[0.5, -1.0, 1.0, 0.2]).unwrap();
        let p = Problem::new(MatrixFunSpec::Constant(m), VectorFunSpec::zero(2)).unwrap();
        let out = apply_generator(&p, &VectorField::constant(g, &c), 0.0).unwrap();
        let expected = -m.mul_vec(&c);
        for i in (0..g.len()).step_by(37) {
            assert!((out.value_at(i) - expected).norm() < 1e-12);
        }
        // M ≡ 0, f ≡ e₁: B is ∂₁ + Δ.
        let p = Problem::new(MatrixFunSpec::zero(2), VectorFunSpec::Constant(Vector::unit(2, 0))).unwrap();
        let u = VectorField::from_fn(g, |x| Vector::from_slice(&[(PI * x[0] / 4.0).sin(), 0.0]));
        let out = apply_generator(&p, &u, 0.0).unwrap();
        let w = PI / 4.0;
        for i in 0..g.len() {
            let x = g.point(i);
            let exact = w * (w * x[0]).cos() - w * w * (w * x[0]).sin();
            assert!((out.component(0).values()[i] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_residual_heat_mode() {
        let g = Grid::new(2, 32, PI).unwrap();
        let u = VectorField::from_fn(g, |x| {
            Vector::from_slice(&[-(x[0]).cos() * (x[1]).sin(), (x[0]).sin() * (x[1]).cos()])
        });
        let window = GeneratorWindow::default();
        let res = generator_residual(&Problem::heat(2).unwrap(), &u, 0.0, 0.5, 1e-3, &window).unwrap();
        assert!(res <= 1e-4, "{res}");
        let zero = VectorField::zeros(g);
        assert_eq!(generator_residual(&rotating(1.0), &zero, 0.0, 0.5, 1e-3, &window).unwrap(), 0.0);
    }

    #[test]
    fn window_validation() {
        assert!(GeneratorWindow::new(0.0).is_err());
        assert!(GeneratorWindow::new(0.8).is_err());
        assert!(GeneratorWindow::new(0.75).is_ok());
    }
}
