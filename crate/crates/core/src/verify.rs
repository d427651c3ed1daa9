//! Quantitative checks of the smoothing estimates: log-log rate fits for the
//! Lᵖ–L^q and gradient bounds, covariance bounds, small-time limits, and the
//! evolution-law and generator residual suites.

use alloc::vec::Vec;

// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use crate::initial::gaussian_bump;
use crate::linalg::Vector;
use crate::ou_kernel::evolution_law_residual;
use crate::propagator::{covariance_q, Problem, QuadParams};
use crate::vector_evolution::{evolve_vector, generator_residual, GeneratorWindow};

/// Minimum r² of an acceptable fit.
pub const MIN_R_SQUARED: f64 = 0.98;
/// Relative exponent tolerance against a nonzero theory value.
pub const EXPONENT_REL_TOL: f64 = 0.05;
/// Absolute slope tolerance when the theory exponent is 0.
pub const EXPONENT_ABS_TOL: f64 = 0.02;
/// Squared relative scatter below which log-log data count as flat.
pub const R2_FLOOR: f64 = 1e-12;

/// Geometric sample of τ values in [τ_min, τ_max].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateWindow {
    pub tau_min: f64,
    pub tau_max: f64,
    pub samples: usize,
}

impl Default for RateWindow {
    fn default() -> Self {
        Self { tau_min: 2f64.powi(-10), tau_max: 0.25, samples: 9 }
    }
}

impl RateWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_min > 0.0 && self.tau_max > self.tau_min && self.tau_max.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "bad rate window [{}, {}]",
                self.tau_min,
                self.tau_max
            )));
        }
        if self.samples < 5 {
            return Err(Error::InvalidArgument("a rate fit needs at least 5 samples".into()));
        }
        Ok(())
    }

    /// Same lower end, upper end stretched by `factor`.
    pub fn extended(&self, factor: f64) -> Self {
        Self { tau_max: self.tau_max * factor, ..*self }
    }

    pub fn taus(&self) -> Vec<f64> {
        let ratio = self.tau_max / self.tau_min;
        (0..self.samples)
            .map(|k| self.tau_min * ratio.powf(k as f64 / (self.samples - 1) as f64))
            .collect()
    }
}

/// Initial data for a rate fit.
#[derive(Debug, Clone, PartialEq)]
pub enum RateData {
    /// For each τ a fresh vortex of width c·√τ on an n^d grid whose half-width
    /// is 8 standard deviations of the evolved profile. The smoothing scale
    /// then dominates the data scale by the same factor at every τ.
    ScaleMatched { c: f64, n: usize },
    /// One fixed field, reused for every τ.
    Fixed(VectorField),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    /// ‖V(s+τ,s)u‖_q / ‖u‖_p against −(d/2)(1/p − 1/q).
    Lplq,
    /// ‖∇V(s+τ,s)u‖_q / ‖u‖_p against −(d/2)(1/p − 1/q) − 1/2.
    Gradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFitReport {
    pub kind: RateKind,
    pub exponent_fit: f64,
    pub exponent_theory: f64,
    pub r_squared: f64,
    pub time_range: (f64, f64),
    pub samples: usize,
    /// False when the data is too smooth for the window to show the bound.
    pub saturating: bool,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
}

impl RateFitReport {
    pub fn exponent_ok(&self) -> bool {
        if self.exponent_theory == 0.0 {
            self.exponent_fit.abs() <= EXPONENT_ABS_TOL
        } else {
            (self.exponent_fit - self.exponent_theory).abs() <= EXPONENT_REL_TOL * self.exponent_theory.abs()
        }
    }

    pub fn passed(&self) -> bool {
        self.exponent_ok() && self.r_squared >= MIN_R_SQUARED
    }
}

/// Least-squares slope and r² of ln y against ln x. The total variation is
/// floored at a relative scatter of 10⁻⁶ per sample: data flat to within the
/// discretization noise counts as a good fit (of slope ≈ 0) rather than as
/// noise with r² ≈ 0.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("log-log fit needs two or more paired samples".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("log-log fit needs positive finite samples".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = (1.0 - ss_res / ss_tot.max(n * R2_FLOOR)).clamp(0.0, 1.0);
    Ok((slope, r2))
}

fn gamma(d: usize, p: f64, q: f64) -> f64 {
    0.5 * d as f64 * (1.0 / p - 1.0 / q)
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0 && q >= p) {
        return Err(Error::InvalidArgument(alloc::format!("need 1 < p <= q, got p = {p}, q = {q}")));
    }
    Ok(())
}

/// √(d/2)·‖u‖₂/‖∇u‖₂: the standard deviation for a Gaussian profile.
pub fn data_scale(u: &VectorField) -> f64 {
    let grad = u.gradient_lp_norm(2.0);
    if grad == 0.0 {
        return f64::INFINITY;
    }
    (0.5 * u.dim() as f64).sqrt() * u.lp_norm(2.0) / grad
}

/// Scale-matched vortex for one τ, centered so that its image sits at the
/// origin.
fn scale_matched_data(problem: &Problem, c: f64, n: usize, s: f64, tau: f64) -> Result<VectorField> {
    let d = problem.dim();
    let b = problem.bundle(s + tau, s)?;
    let sigma2 = c * c * tau;
    let spread = (b.q.scale(2.0).symmetric_eigenvalues()[d - 1] + sigma2).sqrt();
    let evolved = spread * b.u_inv.operator_norm();
    let half_width = 8.0 * evolved.max(sigma2.sqrt());
    let grid = Grid::new(d, n, half_width)?;
    // φ(Ux + g) is centered where Ux + g = m; m = g puts the image at 0.
    gaussian_bump(grid, sigma2.sqrt(), 1.0, &b.g)
}

/// Both rate fits from one pass over the τ samples.
pub fn fit_rates(
    problem: &Problem,
    data: &RateData,
    p: f64,
    q: f64,
    s: f64,
    window: &RateWindow,
) -> Result<(RateFitReport, RateFitReport)> {
    check_pq(p, q)?;
    window.validate()?;
    let d = problem.dim();
    let taus = window.taus();
    let mut lq = Vec::with_capacity(taus.len());
    let mut grad = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let u = match data {
            RateData::ScaleMatched { c, n } => scale_matched_data(problem, *c, *n, s, tau)?,
            RateData::Fixed(u) => u.clone(),
        };
        let norm = u.lp_norm(p);
        if norm == 0.0 {
            return Err(Error::InvalidArgument("rate fit on zero data".into()));
        }
        let out = evolve_vector(problem, &u, s, s + tau)?;
        lq.push(out.lp_norm(q) / norm);
        grad.push(out.gradient_lp_norm(q) / norm);
    }
    let saturating = match data {
        RateData::ScaleMatched { .. } => true,
        RateData::Fixed(u) => data_scale(u) <= 0.25 * window.tau_min.sqrt(),
    };
    let g = gamma(d, p, q);
    let report = |kind, theory, values: Vec<f64>| -> Result<RateFitReport> {
        let (slope, r2) = loglog_fit(&taus, &values)?;
        Ok(RateFitReport {
            kind,
            exponent_fit: slope,
            exponent_theory: theory,
            r_squared: r2,
            time_range: (window.tau_min, window.tau_max),
            samples: taus.len(),
            saturating,
            taus: taus.clone(),
            values,
        })
    };
    Ok((report(RateKind::Lplq, -g, lq)?, report(RateKind::Gradient, -g - 0.5, grad)?))
}

pub fn fit_lplq_rate(
    problem: &Problem,
    data: &RateData,
    p: f64,
    q: f64,
    s: f64,
    window: &RateWindow,
) -> Result<RateFitReport> {
    Ok(fit_rates(problem, data, p, q, s, window)?.0)
}

pub fn fit_gradient_rate(
    problem: &Problem,
    data: &RateData,
    p: f64,
    q: f64,
    s: f64,
    window: &RateWindow,
) -> Result<RateFitReport> {
    Ok(fit_rates(problem, data, p, q, s, window)?.1)
}

/// Statistics of Q(t,s) over sampled pairs 0 < s < t ≤ T.
#[derive(Debug, Clone, PartialEq)]
pub struct QBoundsReport {
    pub pairs: usize,
    /// sup (t−s)^{1/2}‖Q^{−1/2}‖
    pub sup_inverse_sqrt: f64,
    /// inf (det Q)^{1/2}(t−s)^{−d/2}
    pub inf_sqrt_det: f64,
    /// min ⟨Qx,x⟩/((t−s)‖x‖²) over random unit x and pairs with t−s ≤ `quarter_window`
    pub min_quarter_ratio: f64,
    pub quarter_window: f64,
    /// Largest relative change of the two statistics when the quadrature
    /// tolerance is halved.
    pub refinement_change: f64,
}

impl QBoundsReport {
    pub fn passed(&self) -> bool {
        self.sup_inverse_sqrt.is_finite()
            && self.inf_sqrt_det > 0.0
            && self.min_quarter_ratio >= 0.25
            && self.refinement_change <= 0.02
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBoundsParams {
    pub t_max: f64,
    /// Number of t−s values per start time.
    pub samples: usize,
    pub min_gap: f64,
    /// Random unit vectors per pair for the quarter bound.
    pub directions: usize,
    pub quarter_window: f64,
    pub seed: u64,
}

impl Default for QBoundsParams {
    fn default() -> Self {
        Self { t_max: 1.0, samples: 12, min_gap: 1e-4, directions: 100, quarter_window: 0.5, seed: 0 }
    }
}

fn q_statistics(problem: &Problem, pairs: &[(f64, f64)], quad: &QuadParams) -> Result<(f64, f64, Vec<crate::linalg::Matrix>)> {
    let d = problem.dim();
    let mut sup_inv = 0.0f64;
    let mut inf_det = f64::INFINITY;
    let mut qs = Vec::with_capacity(pairs.len());
    for &(s, t) in pairs {
        let q = covariance_q(&problem.m, t, s, quad)?;
        let eig = q.symmetric_eigenvalues();
        let gap = t - s;
        let lam_min = eig[0];
        sup_inv = sup_inv.max(if lam_min > 0.0 { (gap / lam_min).sqrt() } else { f64::INFINITY });
        let det: f64 = (0..d).map(|a| eig[a]).product();
        inf_det = inf_det.min(det.max(0.0).sqrt() / gap.powf(0.5 * d as f64));
        qs.push(q);
    }
    Ok((sup_inv, inf_det, qs))
}

/// Covariance bounds: (t−s)^{1/2}‖Q^{−1/2}‖ bounded, (det Q)^{1/2}(t−s)^{−d/2}
/// bounded below, and ⟨Qx,x⟩ ≥ ¼(t−s)‖x‖² for small t−s.
pub fn qbounds_check(problem: &Problem, params: &QBoundsParams) -> Result<QBoundsReport> {
    if !(params.t_max > params.min_gap && params.min_gap > 0.0) || params.samples < 2 {
        return Err(Error::InvalidArgument("bad qbounds sampling parameters".into()));
    }
    let d = problem.dim();
    let mut pairs = Vec::new();
    for frac in [0.1, 0.25, 0.5] {
        let s = frac * params.t_max;
        let span = params.t_max - s;
        let ratio = span / params.min_gap;
        for k in 0..params.samples {
            let gap = params.min_gap * ratio.powf(k as f64 / (params.samples - 1) as f64);
            pairs.push((s, (s + gap).min(params.t_max)));
        }
    }
    let (sup_inv, inf_det, qs) = q_statistics(problem, &pairs, &problem.quad)?;
    let strict = QuadParams { tol: 0.5 * problem.quad.tol, ..problem.quad };
    let (sup_inv2, inf_det2, _) = q_statistics(problem, &pairs, &strict)?;
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    let refinement_change = rel(sup_inv, sup_inv2).max(rel(inf_det, inf_det2));
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut min_quarter = f64::INFINITY;
    for (&(s, t), q) in pairs.iter().zip(&qs) {
        if t - s > params.quarter_window {
            continue;
        }
        for _ in 0..params.directions {
            let mut x = Vector::zeros(d);
            for a in 0..d {
                x[a] = rng.sample(StandardNormal);
            }
            let x = x.scale(1.0 / x.norm());
            min_quarter = min_quarter.min(q.quadratic_form(&x) / (t - s));
        }
    }
    Ok(QBoundsReport {
        pairs: pairs.len(),
        sup_inverse_sqrt: sup_inv,
        inf_sqrt_det: inf_det,
        min_quarter_ratio: min_quarter,
        quarter_window: params.quarter_window,
        refinement_change,
    })
}

/// Weighted norms τ^γ‖V(s+τ,s)u‖_q and τ^{1/2}‖∇V(s+τ,s)u‖_p at τ = 2^{−k},
/// k = 2..=12.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallTimeReport {
    pub taus: Vec<f64>,
    pub weighted: Vec<f64>,
    pub weighted_gradient: Vec<f64>,
    /// The first limit is only claimed for p < q.
    pub lq_limit_applies: bool,
    pub lq_ratio: f64,
    pub gradient_ratio: f64,
    /// Monotone decrease (within 1e-9 relative) from k = 4 on.
    pub lq_monotone: bool,
    pub gradient_monotone: bool,
}

/// Target of the small-time limits: final over initial weighted norm.
pub const SMALL_TIME_TARGET: f64 = 1e-3;

impl SmallTimeReport {
    pub fn passed(&self) -> bool {
        let grad = self.gradient_ratio <= SMALL_TIME_TARGET;
        if self.lq_limit_applies {
            grad && self.lq_ratio <= SMALL_TIME_TARGET
        } else {
            grad
        }
    }
}

fn monotone_from(values: &[f64], start: usize) -> bool {
    values[start..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
}

pub fn small_time_limits(problem: &Problem, u: &VectorField, p: f64, q: f64, s: f64) -> Result<SmallTimeReport> {
    check_pq(p, q)?;
    let g = gamma(problem.dim(), p, q);
    let ks: Vec<i32> = (2..=12).collect();
    let taus: Vec<f64> = ks.iter().map(|k| 2f64.powi(-k)).collect();
    let mut weighted = Vec::with_capacity(taus.len());
    let mut weighted_gradient = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let out = evolve_vector(problem, u, s, s + tau)?;
        weighted.push(tau.powf(g) * out.lp_norm(q));
        weighted_gradient.push(tau.sqrt() * out.gradient_lp_norm(p));
    }
    let ratio = |v: &[f64]| if v[0] == 0.0 { 0.0 } else { v[v.len() - 1] / v[0] };
    // k = 4 is the third entry.
    Ok(SmallTimeReport {
        lq_limit_applies: p < q,
        lq_ratio: ratio(&weighted),
        gradient_ratio: ratio(&weighted_gradient),
        lq_monotone: monotone_from(&weighted, 2),
        gradient_monotone: monotone_from(&weighted_gradient, 2),
        taus,
        weighted,
        weighted_gradient,
    })
}

/// ‖W(t,s)u − W(t,r)W(r,s)u‖₂ / ‖u‖₂.
pub fn vector_evolution_law_residual(problem: &Problem, u: &VectorField, s: f64, r: f64, t: f64) -> Result<f64> {
    if !(s <= r && r <= t) {
        return Err(Error::InvalidArgument(alloc::format!("need s <= r <= t, got ({s}, {r}, {t})")));
    }
    let norm = u.lp_norm(2.0);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let direct = evolve_vector(problem, u, s, t)?;
    let split = evolve_vector(problem, &evolve_vector(problem, u, s, r)?, r, t)?;
    Ok(direct.sub(&split)?.lp_norm(2.0) / norm)
}

/// One sampled (s, r, t) triple and its scalar and vector residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionLawSample {
    pub s: f64,
    pub r: f64,
    pub t: f64,
    pub scalar: f64,
    pub vector: f64,
}

/// Evolution-law residuals over `triples` seeded random s < r < t in [0, t_max].
pub fn evolution_law_check(
    problem: &Problem,
    u: &VectorField,
    triples: usize,
    t_max: f64,
    seed: u64,
) -> Result<Vec<EvolutionLawSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi: &ScalarField = u.component(0);
    (0..triples)
        .map(|_| {
            let mut v = [rng.gen_range(0.0..t_max), rng.gen_range(0.0..t_max), rng.gen_range(0.0..t_max)];
            v.sort_by(f64::total_cmp);
            let [s, r, t] = v;
            Ok(EvolutionLawSample {
                s,
                r,
                t,
                scalar: evolution_law_residual(problem, phi, s, r, t)?,
                vector: vector_evolution_law_residual(problem, u, s, r, t)?,
            })
        })
        .collect()
}

/// Generator residuals at several dt and their log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorReport {
    pub dts: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
}

pub fn generator_convergence(
    problem: &Problem,
    u0: &VectorField,
    s: f64,
    t: f64,
    dts: &[f64],
    window: &GeneratorWindow,
) -> Result<GeneratorReport> {
    let residuals = dts
        .iter()
        .map(|&dt| generator_residual(problem, u0, s, t, dt, window))
        .collect::<Result<Vec<_>>>()?;
    let (slope, _) = loglog_fit(dts, &residuals)?;
    Ok(GeneratorReport { dts: dts.to_vec(), residuals, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::propagator::{MatrixFunSpec, VectorFunSpec};
    use proptest::prelude::*;

    fn skew2() -> Problem {
        Problem::new(MatrixFunSpec::Constant(Matrix::rotation_generator(2, 0, 1, 1.0)), VectorFunSpec::zero(2))
            .unwrap()
    }

    fn saddle() -> Problem {
        Problem::new(MatrixFunSpec::Constant(Matrix::diag(&[1.0, -1.0])), VectorFunSpec::zero(2)).unwrap()
    }

    proptest! {
        #[test]
        fn loglog_recovers_power_laws(a in 0.1f64..10.0, k in -2.0f64..2.0) {
            let xs: Vec<f64> = (0..7).map(|i| 2f64.powi(-i)).collect();
            let ys: Vec<f64> = xs.iter().map(|x| a * x.powf(k)).collect();
            let (slope, r2) = loglog_fit(&xs, &ys).unwrap();
            prop_assert!((slope - k).abs() < 1e-10);
            prop_assert!(r2 > 1.0 - 1e-12);
        }
    }

    #[test]
    fn loglog_flags_scatter() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let ys = [1.0, 5.0, 0.5, 7.0, 0.3];
        let (_, r2) = loglog_fit(&xs, &ys).unwrap();
        assert!(r2 < 0.5);
        // Relative jitter of 10⁻⁷ around a constant is flat, not scatter.
        let flat: Vec<f64> = (0..5).map(|i| 1.0 + 1e-7 * [1.0, -1.0, 0.5, -0.5, 0.0][i]).collect();
        let (slope, r2) = loglog_fit(&xs, &flat).unwrap();
        assert!(slope.abs() < 1e-6 && r2 > 0.98, "{r2}");
        assert!(loglog_fit(&xs, &[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn window_samples() {
        let w = RateWindow::default();
        let t = w.taus();
        assert_eq!(t.len(), 9);
        assert!((t[0] - 2f64.powi(-10)).abs() < 1e-18 && (t[8] - 0.25).abs() < 1e-15);
        assert!(RateWindow { samples: 4, ..w }.validate().is_err());
    }

    #[test]
    fn heat_rates_match_theory_2d() {
        let p = Problem::heat(2).unwrap();
        let data = RateData::ScaleMatched { c: 1.0, n: 64 };
        for (pp, qq) in [(2.0, 2.0), (2.0, 4.0)] {
            let (lq, grad) = fit_rates(&p, &data, pp, qq, 0.0, &RateWindow::default()).unwrap();
            assert!(lq.passed(), "{lq:?}");
            assert!(grad.passed(), "{grad:?}");
        }
    }

    #[test]
    fn wide_data_is_not_saturating() {
        let g = Grid::new(2, 64, 12.0).unwrap();
        let u = gaussian_bump(g, 1.5, 1.0, &Vector::zeros(2)).unwrap();
        let grad = fit_gradient_rate(&Problem::heat(2).unwrap(), &RateData::Fixed(u), 2.0, 2.0, 0.0, &RateWindow::default())
            .unwrap();
        assert!(!grad.saturating);
        assert!(grad.exponent_fit.abs() < 0.1, "{grad:?}");
    }

    #[test]
    fn skew_qbounds_are_exactly_one() {
        let r = qbounds_check(&skew2(), &QBoundsParams::default()).unwrap();
        assert!((r.sup_inverse_sqrt - 1.0).abs() < 1e-12);
        assert!((r.inf_sqrt_det - 1.0).abs() < 1e-12);
        assert!((r.min_quarter_ratio - 1.0).abs() < 1e-12);
        assert!(r.passed());
    }

    #[test]
    fn saddle_qbounds_match_closed_form() {
        let params = QBoundsParams { t_max: 2.0, ..QBoundsParams::default() };
        let r = qbounds_check(&saddle(), &params).unwrap();
        assert!(r.passed(), "{r:?}");
        // Q = diag((e^{2τ}−1)/2, (1−e^{−2τ})/2): the smallest eigenvalue ratio is
        // (1−e^{−2τ})/(2τ), smallest at the longest gap.
        let tau = 2.0 - 0.1 * 2.0;
        let expected = (2.0 * tau / (1.0 - (-2.0 * tau).exp())).sqrt();
        assert!((r.sup_inverse_sqrt - expected).abs() < 1e-9 * expected);
        assert!(r.min_quarter_ratio >= 0.25);
    }

    #[test]
    fn small_time_for_equal_exponents_tends_to_the_data_norm() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let u = gaussian_bump(g, 1.0, 1.0, &Vector::zeros(2)).unwrap();
        let r = small_time_limits(&Problem::heat(2).unwrap(), &u, 2.0, 2.0, 0.0).unwrap();
        assert!(!r.lq_limit_applies);
        let last = r.weighted[r.weighted.len() - 1];
        assert!((last - u.lp_norm(2.0)).abs() < 1e-3 * u.lp_norm(2.0));
        assert!(r.gradient_monotone);
        // Bounded gradient: the weighted gradient halves per two dyadic steps.
        let w = &r.weighted_gradient;
        assert!((w[w.len() - 1] / w[w.len() - 3] - 0.5).abs() < 0.01);
    }

    #[test]
    fn evolution_law_heat_and_rotation() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let u = gaussian_bump(g, 1.0, 1.0, &Vector::from_slice(&[0.3, 0.1])).unwrap();
        for s in evolution_law_check(&Problem::heat(2).unwrap(), &u, 3, 1.0, 1).unwrap() {
            assert!(s.scalar < 1e-12 && s.vector < 1e-12, "{s:?}");
        }
        let a = evolution_law_check(&skew2(), &u, 3, 1.0, 1).unwrap();
        let b = evolution_law_check(&skew2(), &u, 3, 1.0, 1).unwrap();
        assert_eq!(a, b);
    }
}
