//! Mild solutions of the nonlinear system by Picard iteration on the Duhamel
//! equation u(t) = V(t,0)u₀ − ∫₀ᵗ V(t,s)ℙ((u·∇)u)(s) ds, tracking the
//! time-weighted constants K_j, K'_j, L_j, L'_j and R_j of each iterate.

use alloc::vec::Vec;

use num_complex::Complex64;
// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, Spectrum, VectorField};
use crate::propagator::Problem;
use crate::vector_evolution::{fields_from_spectra, leray_project_spectra, VectorEvolution};

/// A velocity field sampled on an increasing time grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<VectorField>,
    p: f64,
    q: f64,
    gamma: f64,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, fields: Vec<VectorField>, p: f64, q: f64) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("times must start at 0 and increase".into()));
        }
        let grid = *fields[0].grid();
        if fields.iter().any(|f| *f.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        check_exponents(p, q)?;
        let gamma = 0.5 * grid.dim() as f64 * (1.0 / p - 1.0 / q);
        Ok(Self { times, fields, p, q, gamma })
    }

    /// The zero trajectory, the starting point of the iteration.
    pub fn zeros(grid: Grid, times: Vec<f64>, p: f64, q: f64) -> Result<Self> {
        let fields = times.iter().map(|_| VectorField::zeros(grid)).collect();
        Self::new(times, fields, p, q)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// γ = (d/2)(1/p − 1/q).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// sup over stored times of ‖u(t)‖_p.
    pub fn sup_norm(&self) -> f64 {
        self.fields.iter().fold(0.0, |m, f| m.max(f.lp_norm(self.p)))
    }

    /// sup over stored times of ‖u(t) − v(t)‖_p.
    pub fn sup_difference(&self, other: &Trajectory) -> Result<f64> {
        self.check_compatible(other)?;
        let mut worst = 0.0f64;
        for (a, b) in self.fields.iter().zip(&other.fields) {
            worst = worst.max(a.sub(b)?.lp_norm(self.p));
        }
        Ok(worst)
    }

    fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.times != other.times || self.grid() != other.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0 && q >= p && q.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("need 1 < p <= q < inf, got p = {p}, q = {q}")));
    }
    Ok(())
}

/// t_i = i·T₀/N_t for i = 0..=N_t.
pub fn uniform_times(t0: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t0 > 0.0 && t0.is_finite()) || steps == 0 {
        return Err(Error::InvalidArgument(alloc::format!("bad time window T0 = {t0}, steps = {steps}")));
    }
    Ok((0..=steps).map(|i| t0 * i as f64 / steps as f64).collect())
}

/// Composite weights on `intervals` equal steps of width h: trapezoid for one
/// interval, Simpson for an even count, Simpson plus a closing 3/8 panel for
/// an odd count ≥ 3.
pub fn composite_weights(intervals: usize, h: f64) -> Vec<f64> {
    let mut w = alloc::vec![0.0; intervals + 1];
    match intervals {
        0 => {}
        1 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let simpson = if intervals % 2 == 0 { intervals } else { intervals - 3 };
            for k in (0..simpson).step_by(2) {
                w[k] += h / 3.0;
                w[k + 1] += 4.0 * h / 3.0;
                w[k + 2] += h / 3.0;
            }
            if simpson < intervals {
                let s = simpson;
                for (off, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                    w[s + off] += 3.0 * h / 8.0 * c;
                }
            }
        }
    }
    w
}

fn dealias_mask(grid: &Grid) -> impl Fn(&[usize; 3]) -> bool + '_ {
    let n = grid.n() as i64;
    move |idx: &[usize; 3]| (0..grid.dim()).all(|a| 3 * grid.signed_mode(idx[a]).abs() <= n)
}

fn truncate(spec: &Spectrum, keep: &impl Fn(&[usize; 3]) -> bool) -> Spectrum {
    spec.multiply(|_, _, idx| if keep(idx) { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}

/// (u·∇)u from spectral gradients, without projection or dealiasing.
pub fn convective_term(u: &VectorField) -> VectorField {
    let spectra: Vec<Spectrum> = u.components().iter().map(ScalarField::spectrum).collect();
    fields_from_spectra(&convective_spectra(&spectra, None))
}

fn convective_spectra(spectra: &[Spectrum], keep: Option<&dyn Fn(&[usize; 3]) -> bool>) -> Vec<Spectrum> {
    let d = spectra.len();
    let filtered: Vec<Spectrum> = match keep {
        Some(k) => spectra.iter().map(|s| truncate(s, &k)).collect(),
        None => spectra.to_vec(),
    };
    let u = fields_from_spectra(&filtered);
    let grid = *u.grid();
    (0..d)
        .map(|a| {
            let mut acc = alloc::vec![0.0; grid.len()];
            for b in 0..d {
                let deriv = filtered[a].multiply(|_, odd, _| Complex64::new(0.0, odd[b])).to_field();
                for ((slot, ub), da) in acc.iter_mut().zip(u.component(b).values()).zip(deriv.values()) {
                    *slot += ub * da;
                }
            }
            let spec = ScalarField::new(grid, acc).map(|f| f.spectrum()).unwrap_or_else(|_| nan_spectrum(grid));
            match keep {
                Some(k) => truncate(&spec, &k),
                None => spec,
            }
        })
        .collect()
}

fn nan_spectrum(grid: Grid) -> Spectrum {
    Spectrum::from_data(grid, alloc::vec![Complex64::new(f64::NAN, 0.0); grid.len()])
}

/// Spectra of ℙ((u·∇)u), optionally with the 2/3 rule applied to the factors
/// and to the product.
pub fn nonlinear_spectra(u: &VectorField, dealias: bool) -> Vec<Spectrum> {
    let grid = *u.grid();
    let spectra: Vec<Spectrum> = u.components().iter().map(ScalarField::spectrum).collect();
    let mask = dealias_mask(&grid);
    let keep: Option<&dyn Fn(&[usize; 3]) -> bool> = if dealias { Some(&mask) } else { None };
    leray_project_spectra(&convective_spectra(&spectra, keep))
}

/// ℙ((u·∇)u).
pub fn nonlinear_term(u: &VectorField, dealias: bool) -> VectorField {
    fields_from_spectra(&nonlinear_spectra(u, dealias))
}

fn spectra_are_zero(spectra: &[Spectrum]) -> bool {
    spectra.iter().all(|s| s.data().iter().all(|c| c.re == 0.0 && c.im == 0.0))
}

/// W(t_i, t_k) for all k ≤ i on one time grid, plus the linear part V(t_i,0)u₀.
struct DuhamelPlan {
    times: Vec<f64>,
    evolutions: Vec<Vec<VectorEvolution>>,
    linear: Vec<VectorField>,
}

impl DuhamelPlan {
    fn new(problem: &Problem, times: &[f64], u0: &VectorField) -> Result<Self> {
        let order = problem.solver.interpolation_order;
        let mut evolutions = Vec::with_capacity(times.len());
        let mut linear = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            let row = times[..=i]
                .iter()
                .map(|&s| Ok(VectorEvolution::from_bundle(problem.bundle(t, s)?, order)))
                .collect::<Result<Vec<_>>>()?;
            linear.push(row[0].apply(u0)?);
            evolutions.push(row);
        }
        Ok(Self { times: times.to_vec(), evolutions, linear })
    }

    fn step(&self, prev: &Trajectory, dealias: bool, iterate: usize) -> Result<Trajectory> {
        let nonlinear: Vec<Vec<Spectrum>> = prev.fields.iter().map(|u| nonlinear_spectra(u, dealias)).collect();
        let h = self.times[1] - self.times[0];
        let mut fields = Vec::with_capacity(self.times.len());
        for i in 0..self.times.len() {
            let weights = composite_weights(i, h);
            let mut integral: Option<VectorField> = None;
            for (k, w) in weights.iter().enumerate() {
                if spectra_are_zero(&nonlinear[k]) {
                    continue;
                }
                let term = self.evolutions[i][k].apply_spectra(&nonlinear[k])?.scale(*w);
                integral = Some(match integral {
                    Some(acc) => acc.add(&term)?,
                    None => term,
                });
            }
            let u = match integral {
                Some(int) => self.linear[i].sub(&int)?,
                None => self.linear[i].clone(),
            };
            if !u.is_finite() {
                return Err(Error::NonFiniteIterate { iterate, time_index: i });
            }
            fields.push(u);
        }
        Trajectory::new(self.times.clone(), fields, prev.p, prev.q)
    }
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument("time grid needs at least two points".into()));
    }
    let h = times[1] - times[0];
    let end = times[times.len() - 1];
    if times.iter().enumerate().any(|(i, t)| (t - i as f64 * h).abs() > 1e-12 * end.max(1.0)) {
        return Err(Error::InvalidArgument("time grid must be uniform".into()));
    }
    Ok(h)
}

fn check_start(problem: &Problem, u0: &VectorField) -> Result<()> {
    if problem.dim() != u0.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), found: u0.dim() });
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite("initial field"));
    }
    Ok(())
}

/// One Picard update u_{j+1}(t) = V(t,0)u₀ − ∫₀ᵗ V(t,s)ℙ((u_j·∇)u_j)(s) ds on the
/// time grid of `prev`, with composite Newton–Cotes weights over the samples.
pub fn picard_iterate(problem: &Problem, prev: &Trajectory, u0: &VectorField) -> Result<Trajectory> {
    check_start(problem, u0)?;
    check_uniform(prev.times())?;
    if u0.grid() != prev.grid() {
        return Err(Error::GridMismatch);
    }
    DuhamelPlan::new(problem, prev.times(), u0)?.step(prev, problem.solver.dealias, 0)
}

/// Constants of one iterate. `l` and `l_prime` need the successor iterate and
/// are absent for the last one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateConstants {
    pub j: usize,
    /// sup t^γ ‖u_j(t)‖_q
    pub k: f64,
    /// sup t^{1/2} ‖∇u_j(t)‖_p
    pub k_prime: f64,
    /// sup t^γ ‖u_{j+1}(t) − u_j(t)‖_q
    pub l: Option<f64>,
    /// sup t^{1/2} ‖∇u_{j+1}(t) − ∇u_j(t)‖_p
    pub l_prime: Option<f64>,
    /// max(K_j, K'_j)
    pub r: f64,
}

/// Weighted sups over the stored times with t = 0 excluded.
fn weighted_sups(traj: &Trajectory, fields: &[VectorField]) -> (f64, f64) {
    let mut lq = 0.0f64;
    let mut grad = 0.0f64;
    for (t, u) in traj.times.iter().zip(fields).skip(1) {
        lq = lq.max(t.powf(traj.gamma) * u.lp_norm(traj.q));
        grad = grad.max(t.sqrt() * u.gradient_lp_norm(traj.p));
    }
    (lq, grad)
}

/// K_j, K'_j, R_j of `current`, and L_j, L'_j when the next iterate is given.
pub fn kato_constants(j: usize, current: &Trajectory, next: Option<&Trajectory>) -> Result<IterateConstants> {
    let (k, k_prime) = weighted_sups(current, &current.fields);
    let (l, l_prime) = match next {
        Some(next) => {
            current.check_compatible(next)?;
            let diffs = next
                .fields
                .iter()
                .zip(&current.fields)
                .map(|(a, b)| a.sub(b))
                .collect::<Result<Vec<_>>>()?;
            let (l, lp) = weighted_sups(current, &diffs);
            (Some(l), Some(lp))
        }
        None => (None, None),
    };
    Ok(IterateConstants { j, k, k_prime, l, l_prime, r: k.max(k_prime) })
}

/// max over sampled s > 0 of s^{γ+1/2}‖(u·∇)u(s)‖_r / (K·K'), 1/r = 1/p + 1/q.
/// Hölder's inequality bounds it by 1; 0 when K·K' vanishes.
pub fn holder_ratio(traj: &Trajectory) -> f64 {
    let c = kato_constants(0, traj, None).expect("self-compatible");
    let denom = c.k * c.k_prime;
    if denom == 0.0 {
        return 0.0;
    }
    let r = 1.0 / (1.0 / traj.p + 1.0 / traj.q);
    traj.times
        .iter()
        .zip(&traj.fields)
        .skip(1)
        .map(|(s, u)| s.powf(traj.gamma + 0.5) * convective_term(u).lp_norm(r) / denom)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KatoReport {
    /// One entry per iterate u_1, …, u_J.
    pub constants: Vec<IterateConstants>,
    /// sup_t ‖u_j − u_{j−1}‖_p / sup_t ‖u_{j−1}‖_p per update (∞ when the
    /// reference vanishes but the update does not).
    pub differences: Vec<f64>,
    /// Number of Picard updates performed.
    pub iterations: usize,
    pub converged: bool,
    /// Present for converged runs.
    pub duhamel_residual: Option<f64>,
}

/// Picard iteration from the zero trajectory on the uniform grid of
/// `problem.solver.time_steps` intervals over [0, T₀]. Stops once
/// sup_t‖u_{j+1} − u_j‖_p ≤ tol·sup_t‖u_j‖_p. Iterates that stop being
/// finite end the run as non-converged with the last finite iterate returned.
pub fn solve_mild(problem: &Problem, u0: &VectorField, t0: f64, p: f64, q: f64) -> Result<(Trajectory, KatoReport)> {
    problem.solver.validate()?;
    check_start(problem, u0)?;
    check_exponents(p, q)?;
    let times = uniform_times(t0, problem.solver.time_steps)?;
    let plan = DuhamelPlan::new(problem, &times, u0)?;
    let tol = problem.solver.picard_tol;
    let mut current = Trajectory::zeros(*u0.grid(), times, p, q)?;
    let mut constants = Vec::new();
    let mut differences = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for j in 1..=problem.solver.picard_max_iter {
        let next = match plan.step(&current, problem.solver.dealias, j) {
            Ok(next) => next,
            Err(Error::NonFiniteIterate { .. }) | Err(Error::NonFinite(_)) => break,
            Err(e) => return Err(e),
        };
        if j >= 2 {
            constants.push(kato_constants(j - 1, &current, Some(&next))?);
        }
        let diff = next.sup_difference(&current)?;
        let reference = current.sup_norm();
        differences.push(if reference > 0.0 {
            diff / reference
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
        iterations = j;
        current = next;
        if !diff.is_finite() {
            break;
        }
        if diff <= tol * reference {
            converged = true;
            break;
        }
    }
    if iterations > 0 {
        constants.push(kato_constants(iterations, &current, None)?);
    }
    let duhamel_residual = if converged { Some(duhamel_residual(problem, &current, u0)?) } else { None };
    Ok((current, KatoReport { constants, differences, iterations, converged, duhamel_residual }))
}

/// Cubic (4-point) Lagrange interpolation in time of stored spectra.
fn interpolate_spectra(times: &[f64], data: &[Vec<Spectrum>], t: f64) -> Vec<Spectrum> {
    let n = times.len();
    let points = n.min(4);
    let h = times[1] - times[0];
    let base = ((t / h).floor() as isize - 1).clamp(0, (n - points) as isize) as usize;
    let nodes = &times[base..base + points];
    let weights: Vec<f64> = (0..points)
        .map(|a| {
            (0..points)
                .filter(|&b| b != a)
                .map(|b| (t - nodes[b]) / (nodes[a] - nodes[b]))
                .product()
        })
        .collect();
    let d = data[0].len();
    (0..d)
        .map(|c| {
            let grid = *data[0][c].grid();
            let mut acc = alloc::vec![Complex64::new(0.0, 0.0); grid.len()];
            for (a, w) in weights.iter().enumerate() {
                for (slot, v) in acc.iter_mut().zip(data[base + a][c].data()) {
                    *slot += v * w;
                }
            }
            Spectrum::from_data(grid, acc)
        })
        .collect()
}

/// max over stored t of ‖u(t) − [V(t,0)u₀ − ∫₀ᵗ V(t,s)ℙ((u·∇)u)(s) ds]‖_p / ‖u₀‖_p,
/// with the integral recomputed on a grid refined `duhamel_substeps` times.
/// The nonlinear term at the new nodes is interpolated cubically in time.
pub fn duhamel_residual(problem: &Problem, traj: &Trajectory, u0: &VectorField) -> Result<f64> {
    check_start(problem, u0)?;
    let h = check_uniform(traj.times())?;
    let sub = problem.solver.duhamel_substeps.max(1);
    let order = problem.solver.interpolation_order;
    let dealias = problem.solver.dealias;
    let coarse: Vec<Vec<Spectrum>> = traj.fields.iter().map(|u| nonlinear_spectra(u, dealias)).collect();
    let fine_h = h / sub as f64;
    let fine_count = sub * (traj.times.len() - 1) + 1;
    let fine: Vec<Vec<Spectrum>> = (0..fine_count)
        .map(|m| {
            if m % sub == 0 {
                coarse[m / sub].clone()
            } else {
                interpolate_spectra(&traj.times, &coarse, m as f64 * fine_h)
            }
        })
        .collect();
    let norm0 = u0.lp_norm(traj.p);
    let mut worst = 0.0f64;
    for (i, (&t, u)) in traj.times.iter().zip(&traj.fields).enumerate().skip(1) {
        let mut rhs = VectorEvolution::from_bundle(problem.bundle(t, 0.0)?, order).apply(u0)?;
        let intervals = sub * i;
        for (m, w) in composite_weights(intervals, fine_h).iter().enumerate() {
            if spectra_are_zero(&fine[m]) {
                continue;
            }
            let s = if m == intervals { t } else { m as f64 * fine_h };
            let ev = VectorEvolution::from_bundle(problem.bundle(t, s)?, order);
            rhs = rhs.sub(&ev.apply_spectra(&fine[m])?.scale(*w))?;
        }
        worst = worst.max(u.sub(&rhs)?.lp_norm(traj.p));
    }
    if norm0 == 0.0 {
        return Ok(if worst == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(worst / norm0)
}
