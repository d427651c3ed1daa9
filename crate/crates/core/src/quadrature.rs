//! Adaptive composite Gauss–Legendre quadrature (8 nodes per panel, bisection
//! refinement) for vector-valued integrands.


use crate::error::{Error, Result};

const NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Tolerance and refinement limit for the adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    /// Absolute error target for the whole interval.
    pub tol: f64,
    /// Maximum bisection depth of any panel.
    pub max_depth: usize,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self { tol: 1e-10, max_depth: 40 }
    }
}

/// Single 8-point Gauss–Legendre panel on [a, b].
pub fn gauss_legendre_panel<const K: usize, F>(f: &mut F, a: f64, b: f64) -> [f64; K]
where
    F: FnMut(f64) -> [f64; K],
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = [0.0; K];
    for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
        let lo = f(mid - half * x);
        let hi = f(mid + half * x);
        for k in 0..K {
            acc[k] += w * (lo[k] + hi[k]);
        }
    }
    acc.iter_mut().for_each(|v| *v *= half);
    acc
}

/// ∫ₐᵇ f over `initial_panels` equal panels, each refined by bisection until
/// the panel-vs-halves discrepancy is within its share of `rule.tol`.
///
/// Reversed limits (b < a) give the negated integral.
pub fn integrate_panels<const K: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    rule: &QuadParams,
) -> Result<[f64; K]>
where
    F: FnMut(f64) -> [f64; K],
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("quadrature limits"));
    }
    if a == b {
        return Ok([0.0; K]);
    }
    if b < a {
        let mut out = integrate_panels(f, b, a, initial_panels, rule)?;
        out.iter_mut().for_each(|v| *v = -*v);
        return Ok(out);
    }
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = [0.0; K];
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let hi = if p + 1 == panels { b } else { lo + width };
        let coarse = gauss_legendre_panel(&mut f, lo, hi);
        let part = refine(&mut f, lo, hi, coarse, rule.tol / panels as f64, 0, rule, (a, b))?;
        for k in 0..K {
            total[k] += part[k];
        }
    }
    if total.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quadrature result"));
    }
    Ok(total)
}

/// ∫ₐᵇ f with a single starting panel.
pub fn integrate<const K: usize, F>(f: F, a: f64, b: f64, rule: &QuadParams) -> Result<[f64; K]>
where
    F: FnMut(f64) -> [f64; K],
{
    integrate_panels(f, a, b, 1, rule)
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, rule: &QuadParams) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate(|x| [f(x)], a, b, rule).map(|v| v[0])
}

#[allow(clippy::too_many_arguments)]
fn refine<const K: usize, F>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: [f64; K],
    tol: f64,
    depth: usize,
    rule: &QuadParams,
    span: (f64, f64),
) -> Result<[f64; K]>
where
    F: FnMut(f64) -> [f64; K],
{
    let mid = 0.5 * (a + b);
    let left = gauss_legendre_panel(f, a, mid);
    let right = gauss_legendre_panel(f, mid, b);
    let mut halves = [0.0; K];
    let mut err: f64 = 0.0;
    let mut magnitude: f64 = 0.0;
    for k in 0..K {
        halves[k] = left[k] + right[k];
        err = err.max((halves[k] - whole[k]).abs());
        magnitude = magnitude.max(halves[k].abs());
    }
    if !err.is_finite() {
        return Err(Error::NonFinite("quadrature integrand"));
    }
    // The relative floor keeps large integrals from chasing round-off.
    if err <= tol.max(64.0 * f64::EPSILON * magnitude) {
        return Ok(halves);
    }
    if depth >= rule.max_depth {
        return Err(Error::QuadratureDiverged { a: span.0, b: span.1, max_depth: rule.max_depth });
    }
    let l = refine(f, a, mid, left, 0.5 * tol, depth + 1, rule, span)?;
    let r = refine(f, mid, b, right, 0.5 * tol, depth + 1, rule, span)?;
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = l[k] + r[k];
    }
    Ok(out)
}
