//! Natural cubic splines for tabulated coefficient functions.

use alloc::vec::Vec;


// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CubicSpline {
    /// Natural spline through `(knots[i], values[i])`. Knots must be strictly
    /// increasing; two knots give linear interpolation.
    pub fn new(knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: knots.len(), found: values.len() });
        }
        if knots.len() < 2 {
            return Err(Error::InvalidArgument("spline needs at least two samples".into()));
        }
        if knots.iter().chain(values).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("spline samples"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("spline knots must be strictly increasing".into()));
        }
        let n = knots.len();
        let mut second = alloc::vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the interior second derivatives.
            let m = n - 2;
            let mut diag = Vec::with_capacity(m);
            let mut rhs = Vec::with_capacity(m);
            let mut upper = Vec::with_capacity(m);
            for i in 1..n - 1 {
                let h0 = knots[i] - knots[i - 1];
                let h1 = knots[i + 1] - knots[i];
                diag.push(2.0 * (h0 + h1));
                upper.push(h1);
                rhs.push(
                    6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0),
                );
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = alloc::vec![0.0; m];
            sol[m - 1] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
            }
            second[1..n - 1].copy_from_slice(&sol);
        }
        let mut cumulative = alloc::vec![0.0; n];
        for i in 1..n {
            let h = knots[i] - knots[i - 1];
            let seg = 0.5 * h * (values[i - 1] + values[i])
                - h * h * h * (second[i - 1] + second[i]) / 24.0;
            cumulative[i] = cumulative[i - 1] + seg;
        }
        Ok(Self { knots: knots.to_vec(), values: values.to_vec(), second, cumulative })
    }

    /// Exact ∫ₐᵇ of the (end-value extended) spline.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0] * (x - self.knots[0]);
        }
        if x >= self.knots[n - 1] {
            return self.cumulative[n - 1] + self.values[n - 1] * (x - self.knots[n - 1]);
        }
        let i = self.knots.partition_point(|&k| k <= x).clamp(1, n - 1) - 1;
        let h = self.knots[i + 1] - self.knots[i];
        let b = (x - self.knots[i]) / h;
        let a = 1.0 - b;
        let linear = h * ((b - 0.5 * b * b) * self.values[i] + 0.5 * b * b * self.values[i + 1]);
        let curv = h * h * h / 6.0
            * ((-0.25 * a.powi(4) + 0.5 * a * a - 0.25) * self.second[i]
                + (0.25 * b.powi(4) - 0.5 * b * b) * self.second[i + 1]);
        self.cumulative[i] + linear + curv
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Evaluates the spline; outside the knot range the end value is held.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if t <= self.knots[0] {
            return self.values[0];
        }
        if t >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let i = self.knots.partition_point(|&k| k <= t).clamp(1, n - 1) - 1;
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_and_reproduces_lines() {
        let knots = [0.0, 0.5, 1.5, 2.0, 3.0];
        let values: Vec<f64> = knots.iter().map(|t| 2.0 * t - 1.0).collect();
        let s = CubicSpline::new(&knots, &values).unwrap();
        for (k, v) in knots.iter().zip(&values) {
            assert!((s.eval(*k) - v).abs() < 1e-14);
        }
        assert!((s.eval(1.1) - 1.2).abs() < 1e-14);
        assert_eq!(s.eval(-1.0), -1.0);
    }

    #[test]
    fn smooth_function_converges() {
        let knots: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = knots.iter().map(|t| libm_sin(*t)).collect();
        let s = CubicSpline::new(&knots, &values).unwrap();
        for i in 5..35 {
            let t = i as f64 * 0.1 + 0.037;
            assert!((s.eval(t) - libm_sin(t)).abs() < 1e-5);
        }
    }

    fn libm_sin(t: f64) -> f64 {
        t.sin()
    }

    #[test]
    fn integral_matches_quadrature() {
        use crate::quadrature::{integrate_scalar, QuadParams};
        let knots = [0.0, 0.3, 1.0, 1.2, 2.5];
        let values = [1.0, -0.5, 2.0, 0.7, 0.1];
        let s = CubicSpline::new(&knots, &values).unwrap();
        let rule = QuadParams { tol: 1e-13, max_depth: 50 };
        for (a, b) in [(0.1, 2.2), (-1.0, 3.0), (0.3, 1.0), (1.1, 1.15)] {
            let mut oracle = 0.0;
            // Split at knots so each panel is polynomial.
            let mut cuts = alloc::vec![a];
            cuts.extend(knots.iter().copied().filter(|k| *k > a && *k < b));
            cuts.push(b);
            for w in cuts.windows(2) {
                oracle += integrate_scalar(|t| s.eval(t), w[0], w[1], &rule).unwrap();
            }
            assert!((s.integral(a, b) - oracle).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(CubicSpline::new(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(CubicSpline::new(&[0.0], &[1.0]).is_err());
    }
}
