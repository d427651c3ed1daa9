//! Matrix propagator U(t,s) = exp(∫ₛᵗ M), drift g(t,s) = ∫ₛᵗ U(r,s) f(r) dr
//! and covariance Q(t,s) = ∫ₛᵗ U(r,s) U(r,s)ᵀ dr for commuting families M.

use alloc::string::String;
use alloc::vec::Vec;


// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expm::matrix_exp;
use crate::linalg::{Matrix, Vector};
use crate::quadrature::integrate_panels;
use crate::spline::CubicSpline;

pub use crate::quadrature::QuadParams;

/// Skewness tolerance used to pick the orthogonal fast paths.
pub const SKEW_TOL: f64 = 1e-14;

/// Scalar profile a(t) of a time-scaled family M(t) = a(t)·M₀.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    Constant(f64),
    /// amplitude · sin(frequency · t + phase)
    Sine { amplitude: f64, frequency: f64, phase: f64 },
    /// amplitude · cos(frequency · t + phase)
    Cosine { amplitude: f64, frequency: f64, phase: f64 },
    /// Σ cₖ tᵏ, lowest degree first.
    Polynomial(Vec<f64>),
    /// amplitude · exp(rate · t)
    Exponential { amplitude: f64, rate: f64 },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Sine { amplitude, frequency, phase } => amplitude * (frequency * t + phase).sin(),
            Self::Cosine { amplitude, frequency, phase } => {
                amplitude * (frequency * t + phase).cos()
            }
            Self::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * t + ck),
            Self::Exponential { amplitude, rate } => amplitude * (rate * t).exp(),
        }
    }

    /// Closed-form ∫ₛᵗ a(τ) dτ.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        match self {
            Self::Constant(c) => c * (t - s),
            Self::Sine { amplitude, frequency, phase } => {
                if *frequency == 0.0 {
                    amplitude * phase.sin() * (t - s)
                } else {
                    -amplitude / frequency
                        * ((frequency * t + phase).cos() - (frequency * s + phase).cos())
                }
            }
            Self::Cosine { amplitude, frequency, phase } => {
                if *frequency == 0.0 {
                    amplitude * phase.cos() * (t - s)
                } else {
                    amplitude / frequency
                        * ((frequency * t + phase).sin() - (frequency * s + phase).sin())
                }
            }
            Self::Polynomial(c) => {
                let anti = |x: f64| {
                    c.iter()
                        .enumerate()
                        .rev()
                        .fold(0.0, |acc, (k, ck)| acc * x + ck / (k + 1) as f64)
                        * x
                };
                anti(t) - anti(s)
            }
            Self::Exponential { amplitude, rate } => {
                if *rate == 0.0 {
                    amplitude * (t - s)
                } else {
                    amplitude / rate * ((rate * t).exp() - (rate * s).exp())
                }
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Self::Constant(c) => c.is_finite(),
            Self::Sine { amplitude, frequency, phase }
            | Self::Cosine { amplitude, frequency, phase } => {
                amplitude.is_finite() && frequency.is_finite() && phase.is_finite()
            }
            Self::Polynomial(c) => c.iter().all(|x| x.is_finite()),
            Self::Exponential { amplitude, rate } => amplitude.is_finite() && rate.is_finite(),
        }
    }
}

/// Samples (tᵢ, Mᵢ) interpolated entrywise by natural cubic splines.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTable {
    dim: usize,
    samples: Vec<(f64, Matrix)>,
    splines: Vec<CubicSpline>,
}

impl MatrixTable {
    pub fn new(times: &[f64], matrices: &[Matrix]) -> Result<Self> {
        if times.len() != matrices.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: matrices.len() });
        }
        let dim = matrices.first().map(Matrix::dim).ok_or_else(|| {
            Error::InvalidArgument(String::from("matrix table needs at least two samples"))
        })?;
        if let Some(bad) = matrices.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        let mut splines = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let values: Vec<f64> = matrices.iter().map(|m| m[(i, j)]).collect();
                splines.push(CubicSpline::new(times, &values)?);
            }
        }
        let samples = times.iter().copied().zip(matrices.iter().copied()).collect();
        Ok(Self { dim, samples, splines })
    }

    pub fn samples(&self) -> &[(f64, Matrix)] {
        &self.samples
    }

    fn map(&self, f: impl Fn(&CubicSpline) -> f64) -> Matrix {
        let mut m = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = f(&self.splines[i * self.dim + j]);
            }
        }
        m
    }
}

/// Description of t ↦ M(t).
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFunSpec {
    Constant(Matrix),
    /// M(t) = a(t)·M₀; commutes by construction.
    TimeScaled { base: Matrix, profile: TimeProfile },
    Tabulated(MatrixTable),
}

impl MatrixFunSpec {
    pub fn zero(dim: usize) -> Self {
        Self::Constant(Matrix::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(m) | Self::TimeScaled { base: m, .. } => m.dim(),
            Self::Tabulated(t) => t.dim,
        }
    }

    pub fn eval(&self, t: f64) -> Matrix {
        match self {
            Self::Constant(m) => *m,
            Self::TimeScaled { base, profile } => base.scale(profile.eval(t)),
            Self::Tabulated(table) => table.map(|s| s.eval(t)),
        }
    }

    /// ∫ₛᵗ M(τ) dτ in closed form (splines integrate exactly).
    pub fn integral(&self, s: f64, t: f64) -> Matrix {
        match self {
            Self::Constant(m) => m.scale(t - s),
            Self::TimeScaled { base, profile } => base.scale(profile.integral(s, t)),
            Self::Tabulated(table) => table.map(|sp| sp.integral(s, t)),
        }
    }

    /// True when every M(t) is skew-symmetric, so every U(t,s) is orthogonal.
    pub fn is_skew(&self) -> bool {
        match self {
            Self::Constant(m) | Self::TimeScaled { base: m, .. } => m.is_skew(SKEW_TOL),
            // Splines are linear in the samples, so skew samples give skew M(t).
            Self::Tabulated(table) => table.samples.iter().all(|(_, m)| m.is_skew(SKEW_TOL)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant(m) => m.frobenius_norm() == 0.0,
            Self::TimeScaled { base, profile } => {
                base.frobenius_norm() == 0.0 || *profile == TimeProfile::Constant(0.0)
            }
            Self::Tabulated(table) => table.samples.iter().all(|(_, m)| m.frobenius_norm() == 0.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Self::Constant(m) => m.is_finite(),
            Self::TimeScaled { base, profile } => base.is_finite() && profile.is_finite(),
            Self::Tabulated(table) => table.samples.iter().all(|(t, m)| t.is_finite() && m.is_finite()),
        }
    }

    /// Knot times of a tabulated family, empty otherwise.
    pub fn knots(&self) -> Vec<f64> {
        match self {
            Self::Tabulated(table) => table.samples.iter().map(|(t, _)| *t).collect(),
            _ => Vec::new(),
        }
    }
}

/// Description of t ↦ f(t).
#[derive(Debug, Clone, PartialEq)]
pub enum VectorFunSpec {
    Constant(Vector),
    Tabulated { times: Vec<f64>, splines: Vec<CubicSpline> },
    /// f(t) = −U(t,0)ᵀ v∞.
    Outflow { m: MatrixFunSpec, v_infinity: Vector },
}

impl VectorFunSpec {
    pub fn zero(dim: usize) -> Self {
        Self::Constant(Vector::zeros(dim))
    }

    pub fn tabulated(times: &[f64], values: &[Vector]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
        }
        let dim = values.first().map(Vector::dim).ok_or_else(|| {
            Error::InvalidArgument(String::from("vector table needs at least two samples"))
        })?;
        if let Some(bad) = values.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        let splines = (0..dim)
            .map(|i| {
                let comp: Vec<f64> = values.iter().map(|v| v[i]).collect();
                CubicSpline::new(times, &comp)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Tabulated { times: times.to_vec(), splines })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(v) => v.dim(),
            Self::Tabulated { splines, .. } => splines.len(),
            Self::Outflow { v_infinity, .. } => v_infinity.dim(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<Vector> {
        match self {
            Self::Constant(v) => Ok(*v),
            Self::Tabulated { splines, .. } => {
                let mut v = Vector::zeros(splines.len());
                for (i, s) in splines.iter().enumerate() {
                    v[i] = s.eval(t);
                }
                Ok(v)
            }
            Self::Outflow { m, v_infinity } => {
                let u = matrix_exp(&m.integral(0.0, t))?;
                Ok(-u.transpose().mul_vec(v_infinity))
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant(v) => v.norm() == 0.0,
            Self::Tabulated { splines, .. } => {
                splines.iter().all(|s| s.values().iter().all(|x| *x == 0.0))
            }
            Self::Outflow { v_infinity, .. } => v_infinity.norm() == 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Self::Constant(v) => v.is_finite(),
            Self::Tabulated { .. } => true,
            Self::Outflow { m, v_infinity } => m.is_finite() && v_infinity.is_finite(),
        }
    }
}

/// Numerical parameters of the field-level solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Lagrange order for general affine resampling.
    pub interpolation_order: usize,
    pub picard_max_iter: usize,
    /// Relative sup-in-time stopping threshold of the Picard iteration.
    pub picard_tol: f64,
    /// Refinement factor of the time grid used by the Duhamel residual.
    pub duhamel_substeps: usize,
    /// Number of time intervals N_t of the Kato trajectory.
    pub time_steps: usize,
    /// 2/3-rule on the convective product.
    pub dealias: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            interpolation_order: 6,
            picard_max_iter: 40,
            picard_tol: 1e-8,
            duhamel_substeps: 2,
            time_steps: 64,
            dealias: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(String::from(msg)));
        if self.interpolation_order < 2 {
            return bad("interpolation_order must be at least 2");
        }
        if self.picard_max_iter < 1 || self.duhamel_substeps < 1 || self.time_steps < 1 {
            return bad("iteration and step counts must be at least 1");
        }
        if !(self.picard_tol > 0.0 && self.picard_tol.is_finite()) {
            return bad("picard_tol must be positive");
        }
        Ok(())
    }
}

/// The linear problem data: M, f and numerical parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub m: MatrixFunSpec,
    pub f: VectorFunSpec,
    pub quad: QuadParams,
    pub solver: SolverParams,
}

impl Problem {
    pub fn new(m: MatrixFunSpec, f: VectorFunSpec) -> Result<Self> {
        if m.dim() != f.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), found: f.dim() });
        }
        if !matches!(m.dim(), 2 | 3) {
            return Err(Error::UnsupportedDimension(m.dim()));
        }
        if !(m.is_finite() && f.is_finite()) {
            return Err(Error::NonFinite("problem coefficients"));
        }
        Ok(Self { m, f, quad: QuadParams::default(), solver: SolverParams::default() })
    }

    /// M ≡ 0, f ≡ 0.
    pub fn heat(dim: usize) -> Result<Self> {
        Self::new(MatrixFunSpec::zero(dim), VectorFunSpec::zero(dim))
    }

    pub fn with_solver(mut self, solver: SolverParams) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_quad(mut self, quad: QuadParams) -> Self {
        self.quad = quad;
        self
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn bundle(&self, t: f64, s: f64) -> Result<PropagatorBundle> {
        PropagatorBundle::new(self, t, s)
    }
}

/// U(t,s), its inverse U(s,t), g(t,s) and Q(t,s) for one time pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorBundle {
    pub u: Matrix,
    pub u_inv: Matrix,
    pub g: Vector,
    pub q: Matrix,
    pub s: f64,
    pub t: f64,
}

impl PropagatorBundle {
    pub fn new(problem: &Problem, t: f64, s: f64) -> Result<Self> {
        check_order(s, t)?;
        let d = problem.dim();
        if t == s {
            return Ok(Self {
                u: Matrix::identity(d),
                u_inv: Matrix::identity(d),
                g: Vector::zeros(d),
                q: Matrix::zeros(d),
                s,
                t,
            });
        }
        let u = propagator_u(&problem.m, t, s)?;
        let u_inv = if problem.m.is_skew() { u.transpose() } else { u.inverse()? };
        let g = drift_g(&problem.m, &problem.f, t, s, &problem.quad)?;
        let q = covariance_q(&problem.m, t, s, &problem.quad)?;
        Ok(Self { u, u_inv, g, q, s, t })
    }

    pub fn is_identity(&self) -> bool {
        self.t == self.s
    }
}

fn check_order(s: f64, t: f64) -> Result<()> {
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::NonFinite("time arguments"));
    }
    if t < s {
        return Err(Error::TimeOrder { s, t });
    }
    Ok(())
}

/// U(t,s) = exp(∫ₛᵗ M). Either order of t and s is allowed.
pub fn propagator_u(m: &MatrixFunSpec, t: f64, s: f64) -> Result<Matrix> {
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::NonFinite("time arguments"));
    }
    if t == s {
        return Ok(Matrix::identity(m.dim()));
    }
    matrix_exp(&m.integral(s, t))
}

/// ∫ₛᵗ M computed by adaptive Gauss–Legendre instead of in closed form.
pub fn integrated_generator_quadrature(
    m: &MatrixFunSpec,
    t: f64,
    s: f64,
    quad: &QuadParams,
) -> Result<Matrix> {
    let d = m.dim();
    let (panels, lo, hi) = panel_layout(m, s.min(t), s.max(t));
    let entries = integrate_panels(
        |r| {
            let mr = m.eval(r);
            let mut out = [0.0; 9];
            for i in 0..d {
                for j in 0..d {
                    out[i * 3 + j] = mr[(i, j)];
                }
            }
            out
        },
        lo,
        hi,
        panels,
        quad,
    )?;
    let mut out = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = entries[i * 3 + j];
        }
    }
    Ok(if t >= s { out } else { -out })
}

/// Starting panels so that tabulated data has roughly one knot per panel.
fn panel_layout(m: &MatrixFunSpec, lo: f64, hi: f64) -> (usize, f64, f64) {
    let inside = m.knots().iter().filter(|k| **k > lo && **k < hi).count();
    (inside + 1, lo, hi)
}

/// g(t,s) = ∫ₛᵗ U(r,s) f(r) dr, t ≥ s.
pub fn drift_g(
    m: &MatrixFunSpec,
    f: &VectorFunSpec,
    t: f64,
    s: f64,
    quad: &QuadParams,
) -> Result<Vector> {
    check_order(s, t)?;
    let d = m.dim();
    if t == s || f.is_zero() {
        return Ok(Vector::zeros(d));
    }
    if m.is_zero() {
        if let VectorFunSpec::Constant(v) = f {
            return Ok(v.scale(t - s));
        }
    }
    let mut failure = None;
    let (panels, lo, hi) = panel_layout(m, s, t);
    let sum = integrate_panels(
        |r| {
            let value = propagator_u(m, r, s)
                .and_then(|u| f.eval(r).map(|fr| u.mul_vec(&fr)));
            match value {
                Ok(v) => {
                    let mut out = [0.0; 3];
                    out[..d].copy_from_slice(v.as_slice());
                    out
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    [0.0; 3]
                }
            }
        },
        lo,
        hi,
        panels,
        quad,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let sum = sum?;
    Ok(Vector::from_slice(&sum[..d]))
}

/// Q(t,s) = ∫ₛᵗ U(r,s) U(r,s)ᵀ dr, t ≥ s; exactly (t−s)·I for skew M.
pub fn covariance_q(m: &MatrixFunSpec, t: f64, s: f64, quad: &QuadParams) -> Result<Matrix> {
    check_order(s, t)?;
    let d = m.dim();
    if t == s {
        return Ok(Matrix::zeros(d));
    }
    if m.is_skew() {
        return Ok(Matrix::identity(d).scale(t - s));
    }
    let mut failure = None;
    let (panels, lo, hi) = panel_layout(m, s, t);
    let entries = integrate_panels(
        |r| match propagator_u(m, r, s) {
            Ok(u) => {
                let uu = u * u.transpose();
                let mut out = [0.0; 9];
                for i in 0..d {
                    for j in 0..d {
                        out[i * 3 + j] = uu[(i, j)];
                    }
                }
                out
            }
            Err(e) => {
                failure.get_or_insert(e);
                [0.0; 9]
            }
        },
        lo,
        hi,
        panels,
        quad,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let entries = entries?;
    let mut q = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            q[(i, j)] = entries[i * 3 + j];
        }
    }
    Ok(q.symmetrized())
}

/// f(t) = −U(t,0)ᵀ v∞, the drift of the outflow reformulation.
pub fn outflow_drift(m: &MatrixFunSpec, v_infinity: Vector) -> VectorFunSpec {
    VectorFunSpec::Outflow { m: m.clone(), v_infinity }
}

/// Result of a commutation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutationReport {
    /// Largest relative commutator ‖[M(t),M(s)]‖_F / (‖M(t)‖_F ‖M(s)‖_F).
    pub worst: f64,
    /// (t, s, relative residual) for every pair above the tolerance.
    pub violations: Vec<(f64, f64, f64)>,
    pub tol: f64,
}

impl CommutationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative commutator norms over the given time pairs; tabulated families
/// are additionally checked at every pair of knots.
pub fn commutation_check(m: &MatrixFunSpec, pairs: &[(f64, f64)], tol: f64) -> CommutationReport {
    let mut all: Vec<(f64, f64)> = pairs.to_vec();
    let knots = m.knots();
    for (i, a) in knots.iter().enumerate() {
        for b in &knots[i + 1..] {
            all.push((*a, *b));
        }
    }
    let mut report = CommutationReport { worst: 0.0, violations: Vec::new(), tol };
    for (t, s) in all {
        let (a, b) = (m.eval(t), m.eval(s));
        let scale = a.frobenius_norm() * b.frobenius_norm();
        let rel = if scale == 0.0 { 0.0 } else { a.commutator(&b).frobenius_norm() / scale };
        report.worst = report.worst.max(rel);
        if rel > tol || !rel.is_finite() {
            report.violations.push((t, s, rel));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn rot2(rate: f64) -> Matrix {
        Matrix::rotation_generator(2, 0, 1, rate)
    }

    fn sine_skew() -> MatrixFunSpec {
        MatrixFunSpec::TimeScaled {
            base: rot2(1.0),
            profile: TimeProfile::Sine { amplitude: 1.0, frequency: 1.0, phase: 0.0 },
        }
    }

    #[test]
    fn identity_at_coincident_times() {
        let m = MatrixFunSpec::Constant(Matrix::diag(&[1.0, -2.0]));
        assert_eq!(propagator_u(&m, 0.7, 0.7).unwrap(), Matrix::identity(2));
        let p = Problem::new(m, VectorFunSpec::Constant(Vector::from_slice(&[1.0, 1.0]))).unwrap();
        let b = p.bundle(0.7, 0.7).unwrap();
        assert_eq!(b.g, Vector::zeros(2));
        assert_eq!(b.q, Matrix::zeros(2));
    }

    #[test]
    fn quarter_rotation() {
        let omega = 3.0;
        let m = MatrixFunSpec::Constant(rot2(omega));
        let u = propagator_u(&m, 1.0 + PI / (2.0 * omega), 1.0).unwrap();
        let expected = Matrix::from_row_major(2, &[0.0, -1.0, 1.0, 0.0]).unwrap();
        assert!((u - expected).frobenius_norm() < 1e-14);
    }

    #[test]
    fn closed_form_generator_integral_matches_quadrature() {
        let quad = QuadParams { tol: 1e-13, max_depth: 40 };
        let specs = [
            sine_skew(),
            MatrixFunSpec::TimeScaled {
                base: Matrix::diag(&[1.0, -1.0]),
                profile: TimeProfile::Polynomial(alloc::vec![0.5, -1.0, 0.25]),
            },
            MatrixFunSpec::TimeScaled {
                base: rot2(1.0),
                profile: TimeProfile::Exponential { amplitude: 2.0, rate: -0.5 },
            },
            MatrixFunSpec::TimeScaled {
                base: rot2(1.0),
                profile: TimeProfile::Cosine { amplitude: 0.5, frequency: 3.0, phase: 0.2 },
            },
            MatrixFunSpec::Tabulated(
                MatrixTable::new(
                    &[0.0, 0.5, 1.0, 2.0],
                    &[rot2(0.0), rot2(1.0), rot2(0.3), rot2(2.0)],
                )
                .unwrap(),
            ),
        ];
        for m in &specs {
            let exact = m.integral(0.2, 1.9);
            let quad_route = integrated_generator_quadrature(m, 1.9, 0.2, &quad).unwrap();
            assert!((exact - quad_route).frobenius_norm() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn cocycle_for_time_scaled_skew() {
        let m = sine_skew();
        let (s, r, t) = (0.1, 0.8, 2.3);
        let lhs = propagator_u(&m, t, r).unwrap() * propagator_u(&m, r, s).unwrap();
        let quad = QuadParams { tol: 1e-13, max_depth: 40 };
        let direct = matrix_exp(&integrated_generator_quadrature(&m, t, s, &quad).unwrap()).unwrap();
        assert!((lhs - direct).frobenius_norm() < 1e-12);
        let u = propagator_u(&m, t, s).unwrap();
        assert!((u.transpose() * u - Matrix::identity(2)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn reversed_order_is_inverse() {
        let m = MatrixFunSpec::Constant(Matrix::diag(&[0.5, -1.5]));
        let prod = propagator_u(&m, 2.0, 0.5).unwrap() * propagator_u(&m, 0.5, 2.0).unwrap();
        assert!((prod - Matrix::identity(2)).frobenius_norm() < 1e-13);
    }

    #[test]
    fn drift_examples() {
        let quad = QuadParams::default();
        let zero_m = MatrixFunSpec::zero(2);
        let e1 = Vector::from_slice(&[1.0, 0.0]);
        let g = drift_g(&zero_m, &VectorFunSpec::zero(2), 3.0, 1.0, &quad).unwrap();
        assert_eq!(g, Vector::zeros(2));
        let g = drift_g(&zero_m, &VectorFunSpec::Constant(e1), 3.0, 1.0, &quad).unwrap();
        assert!((g - e1.scale(2.0)).norm() < 1e-15);
        // ∫₀^π (cos r, sin r) dr = (0, 2)
        let rot = MatrixFunSpec::Constant(rot2(1.0));
        let g = drift_g(&rot, &VectorFunSpec::Constant(e1), PI, 0.0, &quad).unwrap();
        assert!((g[0] - PI.sin()).abs() < 1e-10);
        assert!((g[1] - (1.0 - PI.cos())).abs() < 1e-10);
    }

    #[test]
    fn drift_rejects_reversed_times() {
        let m = MatrixFunSpec::zero(2);
        let err = drift_g(&m, &VectorFunSpec::zero(2), 0.0, 1.0, &QuadParams::default());
        assert!(matches!(err, Err(Error::TimeOrder { .. })));
    }

    #[test]
    fn covariance_examples() {
        let quad = QuadParams::default();
        let q = covariance_q(&MatrixFunSpec::Constant(rot2(2.0)), 1.5, 1.0, &quad).unwrap();
        assert_eq!(q, Matrix::identity(2).scale(0.5));
        let q = covariance_q(&sine_skew(), 0.3, 0.3, &quad).unwrap();
        assert_eq!(q, Matrix::zeros(2));
        let hyper = MatrixFunSpec::Constant(Matrix::diag(&[1.0, -1.0]));
        let q = covariance_q(&hyper, 1.0, 0.0, &quad).unwrap();
        let e2 = 2f64.exp();
        assert!((q[(0, 0)] - (e2 - 1.0) / 2.0).abs() < 1e-10);
        assert!((q[(1, 1)] - (1.0 - 1.0 / e2) / 2.0).abs() < 1e-10);
        assert!(q[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn outflow_examples() {
        let zero = outflow_drift(&MatrixFunSpec::Constant(rot2(1.0)), Vector::zeros(2));
        assert_eq!(zero.eval(1.3).unwrap(), Vector::zeros(2));
        let v = Vector::from_slice(&[0.3, -2.0]);
        let still = outflow_drift(&MatrixFunSpec::zero(2), v);
        assert_eq!(still.eval(4.0).unwrap(), -v);
        let axis = outflow_drift(
            &MatrixFunSpec::Constant(Matrix::rotation_generator(3, 0, 1, 1.7)),
            Vector::unit(3, 2),
        );
        for t in [0.0, 0.4, 3.0, 11.0] {
            let f = axis.eval(t).unwrap();
            assert!((f + Vector::unit(3, 2)).norm() < 1e-14);
        }
    }

    #[test]
    fn outflow_drift_in_skew_case_is_rotated_constant() {
        // U(r,s)U(r,0)ᵀ = U(0,s) when U is orthogonal, so g = −(t−s)U(0,s)v∞.
        let m = MatrixFunSpec::Constant(Matrix::rotation_generator(3, 0, 2, 0.9));
        let v = Vector::from_slice(&[1.0, 0.5, -0.25]);
        let f = outflow_drift(&m, v);
        let (s, t) = (0.4, 2.1);
        let g = drift_g(&m, &f, t, s, &QuadParams::default()).unwrap();
        let oracle = propagator_u(&m, 0.0, s).unwrap().mul_vec(&v).scale(-(t - s));
        assert!((g - oracle).norm() < 1e-10);
    }

    #[test]
    fn commutation_examples() {
        let c = commutation_check(&MatrixFunSpec::Constant(rot2(1.0)), &[(0.0, 1.0)], 1e-12);
        assert_eq!(c.worst, 0.0);
        let ts = commutation_check(&sine_skew(), &[(0.3, 1.1), (2.0, 5.0)], 1e-12);
        assert!(ts.worst <= 1e-15 && ts.passed());
        let a = Matrix::from_row_major(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let b = Matrix::from_row_major(2, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let tab = MatrixFunSpec::Tabulated(MatrixTable::new(&[0.0, 1.0], &[a, b]).unwrap());
        let report = commutation_check(&tab, &[], 1e-12);
        assert!(!report.passed());
    }

    #[test]
    fn bundle_inverse_matches() {
        let p = Problem::new(
            MatrixFunSpec::Constant(Matrix::from_row_major(2, &[0.3, -1.0, 1.0, 0.3]).unwrap()),
            VectorFunSpec::zero(2),
        )
        .unwrap();
        let b = p.bundle(1.2, 0.2).unwrap();
        assert!((b.u * b.u_inv - Matrix::identity(2)).frobenius_norm() < 1e-13);
    }

    proptest! {
        #[test]
        fn cocycle_holds_on_random_triples(a in 0.0f64..2.0, b in 0.0f64..2.0, c in 0.0f64..2.0) {
            let mut v = [a, b, c];
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let m = MatrixFunSpec::TimeScaled {
                base: Matrix::from_row_major(2, &[0.4, -1.0, 1.0, -0.2]).unwrap(),
                profile: TimeProfile::Cosine { amplitude: 1.0, frequency: 2.0, phase: 0.1 },
            };
            let lhs = propagator_u(&m, v[2], v[1]).unwrap() * propagator_u(&m, v[1], v[0]).unwrap();
            let rhs = propagator_u(&m, v[2], v[0]).unwrap();
            prop_assert!((lhs - rhs).frobenius_norm() <= 1e-11);
        }

        #[test]
        fn skew_case_exactness(w in proptest::array::uniform3(-3.0f64..3.0), dt in 1e-3f64..5.0) {
            let base = Matrix::from_row_major(3, &[0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0]).unwrap();
            let m = MatrixFunSpec::TimeScaled { base, profile: TimeProfile::Sine { amplitude: 1.0, frequency: 1.3, phase: 0.0 } };
            let u = propagator_u(&m, 0.5 + dt, 0.5).unwrap();
            prop_assert!((u.transpose() * u - Matrix::identity(3)).frobenius_norm() <= 1e-12);
            prop_assert!((u.det() - 1.0).abs() <= 1e-12);
            let q = covariance_q(&m, 0.5 + dt, 0.5, &QuadParams::default()).unwrap();
            prop_assert!((q - Matrix::identity(3).scale(dt)).frobenius_norm() <= 1e-12 * dt);
        }

        #[test]
        fn covariance_is_monotone(t1 in 0.01f64..1.0, extra in 0.01f64..1.0) {
            let m = MatrixFunSpec::Constant(Matrix::from_row_major(2, &[1.0, 0.5, 0.0, -1.0]).unwrap());
            let quad = QuadParams::default();
            let q1 = covariance_q(&m, t1, 0.0, &quad).unwrap();
            let q2 = covariance_q(&m, t1 + extra, 0.0, &quad).unwrap();
            let low = (q2 - q1).symmetric_eigenvalues()[0];
            prop_assert!(low >= -1e-12);
        }

        #[test]
        fn drift_is_linear_in_f(a in proptest::array::uniform2(-2.0f64..2.0), b in proptest::array::uniform2(-2.0f64..2.0)) {
            let m = MatrixFunSpec::TimeScaled { base: Matrix::diag(&[0.5, -0.3]), profile: TimeProfile::Sine { amplitude: 1.0, frequency: 1.0, phase: 0.0 } };
            let quad = QuadParams { tol: 1e-13, max_depth: 40 };
            let fa = VectorFunSpec::Constant(Vector::from_slice(&a));
            let fb = VectorFunSpec::Constant(Vector::from_slice(&b));
            let fab = VectorFunSpec::Constant(Vector::from_slice(&[a[0] + b[0], a[1] + b[1]]));
            let ga = drift_g(&m, &fa, 1.7, 0.2, &quad).unwrap();
            let gb = drift_g(&m, &fb, 1.7, 0.2, &quad).unwrap();
            let gab = drift_g(&m, &fab, 1.7, 0.2, &quad).unwrap();
            prop_assert!((gab - (ga + gb)).norm() <= 1e-12 * gab.norm().max(1.0));
        }

        #[test]
        fn small_time_lower_bound(theta in 0.0f64..(2.0 * PI), dt in 1e-4f64..0.05) {
            let m = MatrixFunSpec::Constant(Matrix::from_row_major(2, &[1.0, 2.0, -0.5, -1.0]).unwrap());
            let q = covariance_q(&m, 0.3 + dt, 0.3, &QuadParams::default()).unwrap();
            let x = Vector::from_slice(&[theta.cos(), theta.sin()]);
            prop_assert!(q.quadratic_form(&x) >= 0.25 * dt);
        }
    }
}
