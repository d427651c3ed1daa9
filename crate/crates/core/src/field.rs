//! Periodic truncation [−L, L)^d of ℝ^d: grids, sampled fields, spectral
//! calculus, discrete Lᵖ norms, affine resampling and Gaussian convolution.
//!
//! Sample `j` along an axis sits at `x_j = −L + j·h`, `h = 2L/n`; arrays are
//! row-major with axis 0 slowest. Mode `k` has wavenumber `ξ = k̃·π/L` with
//! `k̃` the signed index. The Nyquist mode is a cosine: its first derivative
//! is zero and it carries `ξ_N = nπ/(2L)` in second-order multipliers.

use alloc::vec::Vec;

use num_complex::Complex64;
// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::{transform_nd, FftPlan};
use crate::linalg::{Matrix, Vector};

/// Largest entry deviation from the identity still treated as A = I.
const IDENTITY_TOL: f64 = 1e-15;
/// Entry tolerance for recognising signed permutation matrices.
const PERMUTATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl Grid {
    /// Box [−L, L)^dim with `n` points per axis; `n` must be a power of two ≥ 16.
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if !matches!(dim, 2 | 3) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !n.is_power_of_two() || n < 16 {
            return Err(Error::InvalidGrid(alloc::format!(
                "n = {n} must be a power of two and at least 16"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(alloc::format!("L = {half_width} must be positive")));
        }
        Ok(Self { dim, n, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Per-axis indices of a flat index.
    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            2 => [flat / n, flat % n, 0],
            _ => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    pub fn flatten(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        match self.dim {
            2 => idx[0] * n + idx[1],
            _ => (idx[0] * n + idx[1]) * n + idx[2],
        }
    }

    pub fn point(&self, flat: usize) -> Vector {
        let idx = self.unflatten(flat);
        let mut x = Vector::zeros(self.dim);
        for a in 0..self.dim {
            x[a] = self.coordinate(idx[a]);
        }
        x
    }

    /// Signed mode number; the Nyquist index maps to +n/2.
    pub fn signed_mode(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.n / 2
    }

    /// ξ for second-order multipliers (Nyquist kept).
    pub fn wavenumber(&self, k: usize) -> f64 {
        self.signed_mode(k) as f64 * core::f64::consts::PI / self.half_width
    }

    /// ξ for first-order multipliers (Nyquist set to zero).
    pub fn odd_wavenumber(&self, k: usize) -> f64 {
        if self.is_nyquist(k) {
            0.0
        } else {
            self.wavenumber(k)
        }
    }

    fn wavenumbers(&self) -> (Vec<f64>, Vec<f64>) {
        let xi = (0..self.n).map(|k| self.wavenumber(k)).collect();
        let odd = (0..self.n).map(|k| self.odd_wavenumber(k)).collect();
        (xi, odd)
    }

    /// True when `flat` lies in the outer `layers` grid layers of the box.
    pub fn in_boundary_shell(&self, flat: usize, layers: usize) -> bool {
        let idx = self.unflatten(flat);
        idx[..self.dim].iter().any(|&j| j < layers || j + layers >= self.n)
    }

    fn plan(&self) -> FftPlan {
        FftPlan::new(self.n)
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Unnormalized forward transform of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, data: alloc::vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Wraps raw coefficients; panics on a length mismatch.
    pub fn from_data(grid: Grid, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), grid.len(), "spectrum length");
        Self { grid, data }
    }

    /// Real part of the normalized inverse transform.
    pub fn to_field(&self) -> ScalarField {
        let mut data = self.data.clone();
        transform_nd(&self.grid.plan(), self.grid.dim, &mut data, true);
        let scale = 1.0 / self.grid.len() as f64;
        ScalarField { grid: self.grid, values: data.iter().map(|c| c.re * scale).collect() }
    }

    /// Mode-by-mode product with `m(ξ_true, ξ_odd)`, both per-axis arrays.
    pub fn multiply<F>(&self, m: F) -> Spectrum
    where
        F: Fn(&[f64; 3], &[f64; 3], &[usize; 3]) -> Complex64,
    {
        let grid = self.grid;
        let (xi, odd) = grid.wavenumbers();
        let mut out = self.data.clone();
        for (flat, value) in out.iter_mut().enumerate() {
            let idx = grid.unflatten(flat);
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            for ax in 0..grid.dim {
                a[ax] = xi[idx[ax]];
                b[ax] = odd[idx[ax]];
            }
            *value *= m(&a, &b, &idx);
        }
        Spectrum { grid, data: out }
    }

    pub fn add(&self, other: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(&other.grid)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Spectrum { grid: self.grid, data })
    }

    pub fn scale(&self, factor: f64) -> Spectrum {
        Spectrum { grid: self.grid, data: self.data.iter().map(|c| c * factor).collect() }
    }

    /// L² norm via Parseval: h^d/N · Σ|ĉ|².
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.data.iter().map(|c| c.norm_sqr()).sum();
        (self.grid.cell_volume() * sum / self.grid.len() as f64).sqrt()
    }

    /// The real band-limited interpolant at an arbitrary point (periodic).
    pub fn eval(&self, x: &Vector) -> f64 {
        let grid = self.grid;
        let n = grid.n;
        let mut basis = [const { Vec::new() }; 3];
        for (a, slot) in basis.iter_mut().enumerate().take(grid.dim) {
            let offset = x[a] + grid.half_width;
            *slot = (0..n)
                .map(|k| {
                    let phase = grid.wavenumber(k) * offset;
                    if grid.is_nyquist(k) {
                        Complex64::new(phase.cos(), 0.0)
                    } else {
                        Complex64::new(phase.cos(), phase.sin())
                    }
                })
                .collect::<Vec<_>>();
        }
        let mut sum = Complex64::new(0.0, 0.0);
        match grid.dim {
            2 => {
                for i in 0..n {
                    let mut row = Complex64::new(0.0, 0.0);
                    for j in 0..n {
                        row += self.data[i * n + j] * basis[1][j];
                    }
                    sum += row * basis[0][i];
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        let mut row = Complex64::new(0.0, 0.0);
                        let base = (i * n + j) * n;
                        for k in 0..n {
                            row += self.data[base + k] * basis[2][k];
                        }
                        sum += row * basis[0][i] * basis[1][j];
                    }
                }
            }
        }
        sum.re / grid.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field samples"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: alloc::vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: alloc::vec![c; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&Vector) -> f64) -> Self {
        Self { grid, values: (0..grid.len()).map(|i| f(&grid.point(i))).collect() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut data: Vec<Complex64> =
            self.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        transform_nd(&self.grid.plan(), self.grid.dim, &mut data, false);
        Spectrum { grid: self.grid, data }
    }

    /// Discrete Lᵖ norm (h^d Σ|f|ᵖ)^{1/p}; `p = ∞` gives max |f|.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_of(self.grid.cell_volume(), self.values.iter().map(|v| v.abs()), p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// max |f| over the outer `layers` grid layers.
    pub fn boundary_max(&self, layers: usize) -> f64 {
        (0..self.values.len())
            .filter(|&i| self.grid.in_boundary_shell(i, layers))
            .fold(0.0, |m, i| m.max(self.values[i].abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(ScalarField { grid: self.grid, values })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, factor: f64) -> ScalarField {
        self.map(|v| v * factor)
    }

    pub fn gradient(&self) -> VectorField {
        gradient_of_spectrum(&self.spectrum())
    }

    pub fn laplacian(&self) -> ScalarField {
        self.spectrum()
            .multiply(|xi, _, _| Complex64::new(-(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]), 0.0))
            .to_field()
    }

    /// x ↦ f(x + b) by an exact spectral phase shift (periodic).
    pub fn translate(&self, b: &Vector) -> Result<ScalarField> {
        if !b.is_finite() {
            return Err(Error::NonFinite("translation vector"));
        }
        if b.as_slice().iter().all(|v| *v == 0.0) {
            return Ok(self.clone());
        }
        let grid = self.grid;
        let shift = *b;
        Ok(self
            .spectrum()
            .multiply(|xi, _, idx| {
                let mut m = Complex64::new(1.0, 0.0);
                for a in 0..grid.dim {
                    let phase = xi[a] * shift[a];
                    m *= if grid.is_nyquist(idx[a]) {
                        Complex64::new(phase.cos(), 0.0)
                    } else {
                        Complex64::new(phase.cos(), phase.sin())
                    };
                }
                m
            })
            .to_field())
    }

    /// Samples of x ↦ f(Ax + b).
    ///
    /// A = I uses the exact periodic phase shift. Otherwise the translation is
    /// applied spectrally and the result is read off at Ax, by index remapping
    /// for signed permutations and by tensor-product Lagrange interpolation
    /// with `order` points per axis in general. Points whose image Ax + b
    /// leaves the box [−L, L]^d evaluate to 0 (fields are assumed to decay).
    pub fn affine_resample(&self, a: &Matrix, b: &Vector, order: usize) -> Result<ScalarField> {
        let grid = self.grid;
        if a.dim() != grid.dim || b.dim() != grid.dim {
            return Err(Error::DimensionMismatch { expected: grid.dim, found: a.dim() });
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite("affine map"));
        }
        let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
        if a.det().abs() <= 1e-14 * scale.powi(grid.dim as i32) {
            return Err(Error::Singular("affine_resample"));
        }
        let identity = Matrix::identity(grid.dim);
        if (*a - identity).entries().all(|e| e.abs() <= IDENTITY_TOL) {
            return self.translate(b);
        }
        let shifted = self.translate(b)?;
        let lim = grid.half_width * (1.0 + 1e-12);
        let inside = |y: &Vector| (0..grid.dim).all(|ax| y[ax].abs() <= lim);
        if let Some(perm) = signed_permutation(a) {
            let n = grid.n;
            let values = (0..grid.len())
                .map(|flat| {
                    let x = grid.point(flat);
                    if !inside(&(a.mul_vec(&x) + *b)) {
                        return 0.0;
                    }
                    let src = grid.unflatten(flat);
                    let mut dst = [0usize; 3];
                    for ax in 0..grid.dim {
                        let (col, sign) = perm[ax];
                        dst[ax] = if sign > 0.0 { src[col] } else { (n - src[col]) % n };
                    }
                    shifted.values[grid.flatten(dst)]
                })
                .collect();
            return Ok(ScalarField { grid, values });
        }
        if !(2..=MAX_INTERPOLATION_ORDER).contains(&order) {
            return Err(Error::InvalidArgument(alloc::format!(
                "interpolation order {order} outside 2..={MAX_INTERPOLATION_ORDER}"
            )));
        }
        let interp = Lagrange::new(grid, order);
        let values = (0..grid.len())
            .map(|flat| {
                let z = a.mul_vec(&grid.point(flat));
                if !inside(&(z + *b)) {
                    return 0.0;
                }
                interp.eval(&shifted.values, &z)
            })
            .collect();
        Ok(ScalarField { grid, values })
    }

    /// Convolution with the Gaussian whose Fourier multiplier is e^{−⟨Qξ,ξ⟩}
    /// (kernel covariance 2Q). Q = 0 is the identity.
    pub fn gaussian_convolve(&self, q: &Matrix) -> Result<ScalarField> {
        if q.dim() == self.grid.dim && q.entries().all(|e| e == 0.0) {
            return Ok(self.clone());
        }
        Ok(gaussian_multiply(&self.spectrum(), q)?.to_field())
    }

    /// Trigonometric interpolant evaluated at arbitrary points.
    pub fn interpolant(&self) -> Spectrum {
        self.spectrum()
    }
}

/// Validates Q and applies e^{−⟨Qξ,ξ⟩} to a spectrum.
pub fn gaussian_multiply(spec: &Spectrum, q: &Matrix) -> Result<Spectrum> {
    let grid = spec.grid;
    if q.dim() != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim, found: q.dim() });
    }
    if !q.is_finite() {
        return Err(Error::NonFinite("covariance matrix"));
    }
    let norm = q.frobenius_norm();
    if norm == 0.0 {
        return Ok(spec.clone());
    }
    let asym = q.asymmetry();
    if asym > 1e-12 * norm {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let q = q.symmetrized();
    if q.symmetric_eigenvalues()[0] < -1e-12 * norm {
        return Err(Error::NotPositiveDefinite);
    }
    let d = grid.dim;
    Ok(spec.multiply(|xi, odd, _| {
        let mut form = 0.0;
        for a in 0..d {
            form += q[(a, a)] * xi[a] * xi[a];
            for b in 0..d {
                if a != b {
                    form += q[(a, b)] * odd[a] * odd[b];
                }
            }
        }
        Complex64::new((-form).exp(), 0.0)
    }))
}

fn gradient_of_spectrum(spec: &Spectrum) -> VectorField {
    let grid = spec.grid;
    let components = (0..grid.dim)
        .map(|a| spec.multiply(|_, odd, _| Complex64::new(0.0, odd[a])).to_field())
        .collect();
    VectorField { grid, components }
}

/// (column, sign) per row when `a` is a signed permutation matrix.
fn signed_permutation(a: &Matrix) -> Option<[(usize, f64); 3]> {
    let d = a.dim();
    let mut out = [(0usize, 0.0); 3];
    let mut used = [false; 3];
    for (row, slot) in out.iter_mut().enumerate().take(d) {
        let mut found = None;
        for col in 0..d {
            let v = a[(row, col)];
            if (v.abs() - 1.0).abs() <= PERMUTATION_TOL {
                if found.is_some() {
                    return None;
                }
                found = Some((col, v.signum()));
            } else if v.abs() > PERMUTATION_TOL {
                return None;
            }
        }
        let (col, sign) = found?;
        if used[col] {
            return None;
        }
        used[col] = true;
        *slot = (col, sign);
    }
    Some(out)
}

/// Tensor-product Lagrange interpolation on a periodic lattice.
struct Lagrange {
    grid: Grid,
    order: usize,
    /// 1 / ∏_{k≠m}(m − k) for each stencil slot m.
    denominators: Vec<f64>,
}

impl Lagrange {
    fn new(grid: Grid, order: usize) -> Self {
        let denominators = (0..order)
            .map(|m| {
                let prod: f64 =
                    (0..order).filter(|&k| k != m).map(|k| m as f64 - k as f64).product();
                1.0 / prod
            })
            .collect();
        Self { grid, order, denominators }
    }

    /// Stencil start index and weights along one axis at coordinate `x`.
    fn axis_weights(&self, x: f64, weights: &mut [f64]) -> i64 {
        let u = (x + self.grid.half_width) / self.grid.spacing();
        let half = ((self.order - 1) / 2) as i64;
        let anchor = if self.order % 2 == 0 { u.floor() } else { (u + 0.5).floor() };
        let base = anchor as i64 - half;
        let t = u - base as f64;
        let mut exact = None;
        for m in 0..self.order {
            if t == m as f64 {
                exact = Some(m);
            }
        }
        if let Some(hit) = exact {
            weights.iter_mut().enumerate().for_each(|(m, w)| *w = if m == hit { 1.0 } else { 0.0 });
            return base;
        }
        let full: f64 = (0..self.order).map(|k| t - k as f64).product();
        for m in 0..self.order {
            weights[m] = full / (t - m as f64) * self.denominators[m];
        }
        base
    }

    fn eval(&self, values: &[f64], z: &Vector) -> f64 {
        let n = self.grid.n as i64;
        let o = self.order;
        let mut w = [[0.0; 16]; 3];
        let mut base = [0i64; 3];
        for a in 0..self.grid.dim {
            base[a] = self.axis_weights(z[a], &mut w[a][..o]);
        }
        let wrap = |i: i64| i.rem_euclid(n) as usize;
        let nu = self.grid.n;
        match self.grid.dim {
            2 => {
                let mut sum = 0.0;
                for i in 0..o {
                    let row = wrap(base[0] + i as i64) * nu;
                    let mut acc = 0.0;
                    for j in 0..o {
                        acc += w[1][j] * values[row + wrap(base[1] + j as i64)];
                    }
                    sum += w[0][i] * acc;
                }
                sum
            }
            _ => {
                let mut sum = 0.0;
                for i in 0..o {
                    let pi = wrap(base[0] + i as i64) * nu;
                    let mut acc_i = 0.0;
                    for j in 0..o {
                        let pj = (pi + wrap(base[1] + j as i64)) * nu;
                        let mut acc = 0.0;
                        for k in 0..o {
                            acc += w[2][k] * values[pj + wrap(base[2] + k as i64)];
                        }
                        acc_i += w[1][j] * acc;
                    }
                    sum += w[0][i] * acc_i;
                }
                sum
            }
        }
    }
}

/// Largest interpolation order supported by the fixed-size stencil buffers.
pub const MAX_INTERPOLATION_ORDER: usize = 16;

fn lp_of(cell: f64, mags: impl Iterator<Item = f64>, p: f64) -> f64 {
    let mags: Vec<f64> = mags.collect();
    let mut scale = 0.0f64;
    for &m in &mags {
        if m.is_nan() {
            return f64::NAN;
        }
        scale = scale.max(m);
    }
    if p.is_infinite() || scale == 0.0 || scale.is_infinite() {
        return scale;
    }
    // Normalizing by the maximum avoids overflow for large p.
    let sum: f64 = mags.iter().map(|m| (m / scale).powf(p)).sum();
    scale * (cell * sum).powf(1.0 / p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let grid = *components.first().ok_or(Error::DimensionMismatch { expected: 2, found: 0 })?.grid();
        if components.len() != grid.dim {
            return Err(Error::DimensionMismatch { expected: grid.dim, found: components.len() });
        }
        if components.iter().any(|c| c.grid != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, components: (0..grid.dim).map(|_| ScalarField::zeros(grid)).collect() }
    }

    pub fn constant(grid: Grid, c: &Vector) -> Self {
        Self { grid, components: (0..grid.dim).map(|a| ScalarField::constant(grid, c[a])).collect() }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&Vector) -> Vector) -> Self {
        let samples: Vec<Vector> = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        let components = (0..grid.dim)
            .map(|a| ScalarField { grid, values: samples.iter().map(|v| v[a]).collect() })
            .collect();
        Self { grid, components }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.components[a]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn value_at(&self, flat: usize) -> Vector {
        let mut v = Vector::zeros(self.grid.dim);
        for a in 0..self.grid.dim {
            v[a] = self.components[a].values[flat];
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    /// Lᵖ norm of the pointwise Euclidean magnitude.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mags = (0..self.grid.len()).map(|i| {
            let sum: f64 = self.components.iter().map(|c| c.values[i] * c.values[i]).sum();
            if sum.is_finite() {
                sum.sqrt()
            } else {
                // Squares overflowed: fall back to the scaled form.
                self.components.iter().fold(0.0f64, |acc, c| acc.hypot(c.values[i]))
            }
        });
        lp_of(self.grid.cell_volume(), mags, p)
    }

    pub fn max_abs(&self) -> f64 {
        self.lp_norm(f64::INFINITY)
    }

    pub fn boundary_max(&self, layers: usize) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.boundary_max(layers)))
    }

    pub fn divergence(&self) -> ScalarField {
        let spectra: Vec<Spectrum> = self.components.iter().map(ScalarField::spectrum).collect();
        divergence_of_spectra(&spectra)
    }

    /// ∇u as d vector fields: entry `a` is the gradient of component `a`.
    pub fn jacobian(&self) -> Vec<VectorField> {
        self.components.iter().map(ScalarField::gradient).collect()
    }

    /// Lᵖ norm of the pointwise Frobenius norm of ∇u.
    pub fn gradient_lp_norm(&self, p: f64) -> f64 {
        frobenius_lp(&self.jacobian(), &self.grid, p)
    }

    /// ‖div u‖₂ / ‖∇u‖₂, the scale-free solenoidality measure (0 for ∇u = 0).
    pub fn divergence_ratio(&self) -> f64 {
        let grad = frobenius_lp(&self.jacobian(), &self.grid, 2.0);
        if grad == 0.0 {
            return 0.0;
        }
        self.divergence().lp_norm(2.0) / grad
    }

    pub fn zip_with(&self, other: &VectorField, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<VectorField> {
        self.grid.check_same(&other.grid)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.zip_with(b, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField { grid: self.grid, components })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, factor: f64) -> VectorField {
        VectorField { grid: self.grid, components: self.components.iter().map(|c| c.scale(factor)).collect() }
    }

    /// Pointwise product with a constant matrix.
    pub fn apply_matrix(&self, m: &Matrix) -> VectorField {
        let d = self.grid.dim;
        let components = (0..d)
            .map(|a| {
                let values = (0..self.grid.len())
                    .map(|i| (0..d).map(|b| m[(a, b)] * self.components[b].values[i]).sum())
                    .collect();
                ScalarField { grid: self.grid, values }
            })
            .collect();
        VectorField { grid: self.grid, components }
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> Result<ScalarField>) -> Result<VectorField> {
        let components = self.components.iter().map(f).collect::<Result<Vec<_>>>()?;
        VectorField::new(components)
    }
}

pub(crate) fn divergence_of_spectra(spectra: &[Spectrum]) -> ScalarField {
    let grid = spectra[0].grid;
    let mut acc = Spectrum::zeros(grid);
    for (a, spec) in spectra.iter().enumerate() {
        let part = spec.multiply(|_, odd, _| Complex64::new(0.0, odd[a]));
        for (x, y) in acc.data.iter_mut().zip(part.data) {
            *x += y;
        }
    }
    acc.to_field()
}

fn frobenius_lp(jac: &[VectorField], grid: &Grid, p: f64) -> f64 {
    let mags = (0..grid.len()).map(|i| {
        jac.iter()
            .flat_map(|g| g.components.iter().map(move |c| c.values[i] * c.values[i]))
            .sum::<f64>()
            .sqrt()
    });
    lp_of(grid.cell_volume(), mags, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_scalar, QuadParams};
    use core::f64::consts::{FRAC_PI_2, PI};
    use proptest::prelude::*;

    fn grid2(n: usize, l: f64) -> Grid {
        Grid::new(2, n, l).unwrap()
    }

    fn gaussian(grid: Grid, sigma2: f64, center: [f64; 3]) -> ScalarField {
        ScalarField::from_fn(grid, move |x| {
            let r2: f64 = (0..grid.dim()).map(|a| (x[a] - center[a]).powi(2)).sum();
            (-r2 / (2.0 * sigma2)).exp()
        })
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(2, 12, 1.0).is_err());
        assert!(Grid::new(2, 8, 1.0).is_err());
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(3, 16, 0.0).is_err());
        let g = grid2(16, 2.0);
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.coordinate(0), -2.0);
        assert_eq!(g.flatten(g.unflatten(37)), 37);
    }

    #[test]
    fn lp_norm_examples() {
        let g = grid2(32, 1.0);
        let c = ScalarField::constant(g, -3.0);
        for p in [1.5, 2.0, 7.0] {
            assert!((c.lp_norm(p) - 3.0 * 4f64.powf(1.0 / p)).abs() < 1e-12);
        }
        assert_eq!(c.lp_norm(f64::INFINITY), 3.0);
        let mut v = alloc::vec![0.0; g.len()];
        v[100] = 1.0;
        let spike = ScalarField::new(g, v).unwrap();
        for p in [2.0, 3.0] {
            assert!((spike.lp_norm(p) - g.spacing().powf(2.0 / p)).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_l2_norm_matches_quadrature() {
        let g = grid2(256, 10.0);
        let f = gaussian(g, 1.0, [0.0; 3]);
        // ∫∫ e^{−x²−y²} over the box, by nested adaptive quadrature.
        let rule = QuadParams { tol: 1e-13, max_depth: 40 };
        let line = integrate_scalar(|x| (-x * x).exp(), -10.0, 10.0, &rule).unwrap();
        let oracle = line;
        assert!((f.lp_norm(2.0) - oracle).abs() < 1e-6);
        assert!((oracle - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_single_mode() {
        let g = grid2(32, 3.0);
        let l = g.half_width();
        let f = ScalarField::from_fn(g, |x| (PI * x[0] / l).sin());
        let grad = f.gradient();
        for i in 0..g.len() {
            let x = g.point(i);
            assert!((grad.component(0).values()[i] - PI / l * (PI * x[0] / l).cos()).abs() < 1e-12);
            assert!(grad.component(1).values()[i].abs() < 1e-12);
        }
        let c = ScalarField::constant(g, 2.5).gradient();
        assert!(c.max_abs() < 1e-15);
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        let g = Grid::new(3, 64, 6.0).unwrap();
        let h = gaussian(g, 0.5, [0.3, -0.2, 0.1]);
        let lap = h.laplacian();
        let div = h.gradient().divergence();
        let diff = lap.sub(&div).unwrap().max_abs();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn parseval_consistency() {
        let g = grid2(64, 5.0);
        let f = ScalarField::from_fn(g, |x| (x[0] * 1.3).sin() * (-x[1] * x[1]).exp() + 0.2);
        let real = f.lp_norm(2.0);
        assert!((f.spectrum().l2_norm() - real).abs() < 1e-10 * real);
    }

    #[test]
    fn affine_identity_and_shift() {
        let g = grid2(32, 4.0);
        let f = gaussian(g, 0.8, [0.5, 0.0, 0.0]);
        let same = f.affine_resample(&Matrix::identity(2), &Vector::zeros(2), 6).unwrap();
        assert_eq!(same, f);
        let h = g.spacing();
        let shifted = f.affine_resample(&Matrix::identity(2), &Vector::from_slice(&[h, 0.0]), 6).unwrap();
        let n = g.n();
        for i in 0..n {
            for j in 0..n {
                let expect = f.values()[((i + 1) % n) * n + j];
                assert!((shifted.values()[i * n + j] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quarter_rotation_leaves_radial_field() {
        let g = grid2(64, 8.0);
        let f = gaussian(g, 1.0, [0.0; 3]);
        let rot = crate::expm::matrix_exp(&Matrix::rotation_generator(2, 0, 1, FRAC_PI_2)).unwrap();
        let out = f.affine_resample(&rot, &Vector::zeros(2), 6).unwrap();
        assert!(out.sub(&f).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn general_affine_map_matches_analytic() {
        let g = grid2(128, 8.0);
        let f = gaussian(g, 1.0, [0.3, -0.4, 0.0]);
        let a = Matrix::from_row_major(2, &[0.9, -0.3, 0.35, 1.1]).unwrap();
        let b = Vector::from_slice(&[0.2, -0.1]);
        let out = f.affine_resample(&a, &b, 8).unwrap();
        let exact = ScalarField::from_fn(g, |x| {
            let y = a.mul_vec(x) + b;
            (-((y[0] - 0.3).powi(2) + (y[1] + 0.4).powi(2)) / 2.0).exp()
        });
        let err = out.sub(&exact).unwrap().max_abs();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn stretching_uses_zero_extension() {
        let g = grid2(64, 8.0);
        let f = gaussian(g, 1.0, [0.0; 3]);
        let a = Matrix::diag(&[3.0, 1.0]);
        let out = f.affine_resample(&a, &Vector::zeros(2), 6).unwrap();
        // Images beyond the box would otherwise wrap onto the bump.
        assert!(out.boundary_max(2) < 1e-12);
    }

    #[test]
    fn singular_affine_map_rejected() {
        let g = grid2(16, 1.0);
        let f = ScalarField::zeros(g);
        let a = Matrix::from_row_major(2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(f.affine_resample(&a, &Vector::zeros(2), 6), Err(Error::Singular(_))));
    }

    #[test]
    fn gaussian_convolution_closed_form() {
        let g = grid2(128, 10.0);
        let sigma2 = 0.5;
        let tau = 0.3;
        let f = gaussian(g, sigma2, [0.0; 3]);
        assert_eq!(f.gaussian_convolve(&Matrix::zeros(2)).unwrap(), f);
        let out = f.gaussian_convolve(&Matrix::identity(2).scale(tau)).unwrap();
        let s2 = sigma2 + 2.0 * tau;
        let amp = sigma2 / s2;
        let exact = gaussian(g, s2, [0.0; 3]).scale(amp);
        assert!(out.sub(&exact).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn gaussian_convolution_damps_single_mode() {
        let g = grid2(32, PI);
        let tau = 0.05;
        let f = ScalarField::from_fn(g, |x| (3.0 * x[0] + 2.0 * x[1]).cos());
        let out = f.gaussian_convolve(&Matrix::identity(2).scale(tau)).unwrap();
        let damp = (-tau * 13.0).exp();
        assert!(out.sub(&f.scale(damp)).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn gaussian_convolution_rejects_asymmetric() {
        let f = ScalarField::zeros(grid2(16, 1.0));
        let q = Matrix::from_row_major(2, &[1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(f.gaussian_convolve(&q), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn interpolant_reproduces_samples_and_modes() {
        let g = grid2(16, 2.0);
        let f = ScalarField::from_fn(g, |x| (PI * x[0] / 2.0).cos() + (PI * x[1]).sin() + 0.5 * (4.0 * PI * x[0] / 2.0).cos());
        let spec = f.interpolant();
        assert!((spec.eval(&g.point(37)) - f.values()[37]).abs() < 1e-13);
        let x = Vector::from_slice(&[0.123, -0.77]);
        let exact = (PI * x[0] / 2.0).cos() + (PI * x[1]).sin() + 0.5 * (4.0 * PI * x[0] / 2.0).cos();
        assert!((spec.eval(&x) - exact).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn convolution_semigroup_and_mass(a in 0.0f64..0.3, b in 0.0f64..0.3, c in -0.1f64..0.1) {
            let g = grid2(64, 6.0);
            let f = ScalarField::from_fn(g, |x| (-(x[0] - 0.5).powi(2) - 2.0 * x[1] * x[1]).exp() * (1.0 + 0.3 * x[0]));
            let q1 = Matrix::from_row_major(2, &[a, c * a.min(b), c * a.min(b), b]).unwrap();
            let q2 = Matrix::identity(2).scale(0.1);
            let two = f.gaussian_convolve(&q1).unwrap().gaussian_convolve(&q2).unwrap();
            let one = f.gaussian_convolve(&(q1 + q2)).unwrap();
            prop_assert!(two.sub(&one).unwrap().max_abs() <= 1e-10 * f.max_abs());
            prop_assert!((one.mean() - f.mean()).abs() <= 1e-12 * f.mean().abs());
        }

        #[test]
        fn rotation_preserves_l2_of_radial_data(theta in 0.0f64..(2.0 * PI)) {
            let g = grid2(128, 8.0);
            let f = gaussian(g, 1.0, [0.0; 3]);
            let rot = crate::expm::matrix_exp(&Matrix::rotation_generator(2, 0, 1, theta)).unwrap();
            let out = f.affine_resample(&rot, &Vector::zeros(2), 8).unwrap();
            prop_assert!((out.lp_norm(2.0) - f.lp_norm(2.0)).abs() <= 1e-8 * f.lp_norm(2.0));
        }
    }
}
