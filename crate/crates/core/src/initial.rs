//! Named analytic initial-data families: a localized vortex, the Taylor–Green
//! vortex and seeded random solenoidal fields.

use alloc::vec::Vec;

use num_complex::Complex64;
// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, Spectrum, VectorField};
use crate::linalg::Vector;
use crate::vector_evolution::fields_from_spectra;

/// Vortex ring around `center` with peak speed `amplitude`:
/// u = A·e^{1/2}/σ · (x₂ − c₂, −(x₁ − c₁), 0)·exp(−|x − c|²/2σ²).
///
/// The profile is divergence-free in both dimensions (in 3D it is the curl of
/// the envelope times e₃). The samples are used as is: projecting them would
/// smear the box-truncation residue over the whole domain.
pub fn gaussian_bump(grid: Grid, sigma: f64, amplitude: f64, center: &Vector) -> Result<VectorField> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("bump width {sigma} must be positive")));
    }
    if center.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), found: center.dim() });
    }
    let d = grid.dim();
    let scale = amplitude * 0.5f64.exp() / sigma;
    let u = VectorField::from_fn(grid, |x| {
        let r = *x - *center;
        let envelope = (-r.dot(&r) / (2.0 * sigma * sigma)).exp();
        let mut v = Vector::zeros(d);
        v[0] = scale * r[1] * envelope;
        v[1] = -scale * r[0] * envelope;
        v
    });
    Ok(u)
}

/// Taylor–Green vortex with wavenumber `k`, which must be periodic on the box
/// (k·L/π an integer). 2D: (−cos kx₁ sin kx₂, sin kx₁ cos kx₂);
/// 3D: (cos kx₁ sin kx₂ cos kx₃, −sin kx₁ cos kx₂ cos kx₃, 0).
pub fn taylor_green(grid: Grid, k: f64, amplitude: f64) -> Result<VectorField> {
    let m = k * grid.half_width() / core::f64::consts::PI;
    if !(k > 0.0 && (m - m.round()).abs() < 1e-9) {
        return Err(Error::InvalidArgument(alloc::format!(
            "Taylor-Green wavenumber {k} is not periodic on [-{L}, {L})",
            L = grid.half_width()
        )));
    }
    let d = grid.dim();
    Ok(VectorField::from_fn(grid, |x| {
        let (c1, s1) = ((k * x[0]).cos(), (k * x[0]).sin());
        let (c2, s2) = ((k * x[1]).cos(), (k * x[1]).sin());
        let mut v = Vector::zeros(d);
        if d == 2 {
            v[0] = -amplitude * c1 * s2;
            v[1] = amplitude * s1 * c2;
        } else {
            let c3 = (k * x[2]).cos();
            v[0] = amplitude * c1 * s2 * c3;
            v[1] = -amplitude * s1 * c2 * c3;
        }
        v
    }))
}

/// Seeded random divergence-free field: white noise shaped to a |ξ|^slope
/// spectrum with a Gaussian cut at ξ = 2/w, localized by a Gaussian envelope
/// of width w = L/8, then curled spectrally
/// (stream function in 2D, vector potential in 3D). Scaled to max |u| = amplitude.
pub fn random_solenoidal(grid: Grid, seed: u64, amplitude: f64, slope: f64) -> Result<VectorField> {
    if !slope.is_finite() || !amplitude.is_finite() {
        return Err(Error::NonFinite("random field parameters"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.dim();
    let potentials = if d == 2 { 1 } else { 3 };
    let width = grid.half_width() / 8.0;
    // Tied to the box, not the grid, so refining n resolves the same field.
    let cut = 2.0 / width;
    let potential: Vec<Spectrum> = (0..potentials)
        .map(|_| {
            let noise: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let shaped = ScalarField::new(grid, noise)
                .expect("finite noise")
                .spectrum()
                .multiply(|xi, _, _| {
                    let k2: f64 = xi.iter().map(|v| v * v).sum();
                    if k2 == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(k2.powf(0.5 * slope) * (-k2 / (cut * cut)).exp(), 0.0)
                    }
                })
                .to_field();
            let values = (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    shaped.values()[i] * (-x.dot(&x) / (2.0 * width * width)).exp()
                })
                .collect();
            ScalarField::new(grid, values).expect("finite potential").spectrum()
        })
        .collect();
    let deriv = |spec: &Spectrum, axis: usize| spec.multiply(|_, odd, _| Complex64::new(0.0, odd[axis]));
    let curl: Vec<Spectrum> = if d == 2 {
        alloc::vec![deriv(&potential[0], 1), deriv(&potential[0], 0).scale(-1.0)]
    } else {
        (0..3)
            .map(|a| {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                deriv(&potential[c], b).add(&deriv(&potential[b], c).scale(-1.0)).expect("same grid")
            })
            .collect()
    };
    let u = fields_from_spectra(&curl);
    let peak = u.max_abs();
    if peak == 0.0 {
        return Ok(u);
    }
    Ok(u.scale(amplitude / peak))
}
