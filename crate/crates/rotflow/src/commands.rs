//! The four subcommands. Each writes its files, prints a short summary to
//! `out`, and returns the failure that decides the exit code.

use std::io::Write;
use std::path::{Path, PathBuf};

use rotflow_core::kato::{holder_ratio, solve_mild};
use rotflow_core::ou_kernel::evolve_scalar;
use rotflow_core::propagator::propagator_u;
use rotflow_core::vector_evolution::{evolve_solenoidal, evolve_vector, GeneratorWindow};
use rotflow_core::verify::{
    evolution_law_check, fit_rates, generator_convergence, qbounds_check, small_time_limits, RateData,
    RateFitReport, RateKind,
};
use rotflow_core::{Matrix, Problem};

use crate::dump::{write_dump, Dump};
use crate::report::{num, opt, save_dat, Table};
use crate::scenario::{Purpose, RateSource, Scenario};
use crate::Failure;

fn say(out: &mut dyn Write, text: impl AsRef<str>) -> Result<(), Failure> {
    writeln!(out, "{}", text.as_ref())?;
    Ok(())
}

fn matrix_rows(m: &Matrix) -> String {
    let d = m.dim();
    (0..d)
        .map(|i| (0..d).map(|j| num(m[(i, j)])).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(" / ")
}

fn window(sc: &Scenario, s: Option<f64>, t: Option<f64>) -> Result<(f64, f64), Failure> {
    let s = s.unwrap_or(sc.s0);
    let t = t.unwrap_or(s + sc.t0);
    if !(s.is_finite() && t.is_finite() && t >= s) {
        return Err(Failure::Validation(format!("need finite s <= t, got s = {s}, t = {t}")));
    }
    Ok((s, t))
}

fn save_dump(path: &Path, dump: &Dump) -> Result<(), Failure> {
    let file = std::fs::File::create(path)
        .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))?;
    write_dump(std::io::BufWriter::new(file), dump)?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Validation(format!("cannot create {}: {e}", dir.display())))
}

/// U, g, Q at (t, s) plus the skew and cocycle diagnostics. The scenario's u0
/// is not needed and not checked.
pub fn cmd_propagator(
    sc: &Scenario,
    s: Option<f64>,
    t: Option<f64>,
    csv: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let (s, t) = window(sc, s, t)?;
    let problem = sc.problem()?;
    let report = sc.commutation_report()?;
    if !report.passed() {
        return Err(Failure::NonCommuting(report));
    }
    let b = problem.bundle(t, s)?;
    let d = problem.dim();
    let id = Matrix::identity(d);
    let orthogonality = (b.u.transpose() * b.u - id).frobenius_norm();
    let q_dev = if t > s { (b.q - id.scale(t - s)).frobenius_norm() / (t - s) } else { b.q.frobenius_norm() };
    let r = 0.5 * (s + t);
    let cocycle = (b.u - propagator_u(&problem.m, t, r)? * propagator_u(&problem.m, r, s)?).frobenius_norm();
    let skew = problem.m.is_skew();
    say(out, format!("s = {}\nt = {}", num(s), num(t)))?;
    say(out, format!("U = {}", matrix_rows(&b.u)))?;
    say(out, format!("g = {}", b.g.as_slice().iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")))?;
    say(out, format!("Q = {}", matrix_rows(&b.q)))?;
    say(out, format!("skew = {skew}"))?;
    say(out, format!("orthogonality = {}", num(orthogonality)))?;
    say(out, format!("q_deviation = {}", num(q_dev)))?;
    say(out, format!("cocycle = {}", num(cocycle)))?;
    say(out, format!("commutator = {}", num(report.worst)))?;
    if let Some(path) = csv {
        let mut table = Table::new(&["quantity", "i", "j", "value"]);
        for (name, m) in [("U", &b.u), ("Q", &b.q)] {
            for i in 0..d {
                for j in 0..d {
                    table.push(vec![name.into(), i.to_string(), j.to_string(), num(m[(i, j)])]);
                }
            }
        }
        for i in 0..d {
            table.push(vec!["g".into(), i.to_string(), String::new(), num(b.g[i])]);
        }
        for (name, v) in [
            ("orthogonality", orthogonality),
            ("q_deviation", q_dev),
            ("cocycle", cocycle),
            ("commutator", report.worst),
        ] {
            table.push(vec![name.into(), String::new(), String::new(), num(v)]);
        }
        table.save(path)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveMode {
    /// G(t,s) on the first component of u0.
    Scalar,
    /// W(t,s)
    Vector,
    /// V(t,s); rejects non-solenoidal input.
    Solenoidal,
}

/// Writes `evolve.rnsf` and `evolve.csv` into `out_dir`.
pub fn cmd_evolve(
    sc: &Scenario,
    s: Option<f64>,
    t: Option<f64>,
    mode: EvolveMode,
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let (s, t) = window(sc, s, t)?;
    let (problem, u0) = sc.validate(Purpose::Linear)?;
    let mut table =
        Table::new(&["mode", "s", "t", "l2_norm", "lq_norm", "linf_norm", "divergence_l2", "divergence_ratio"]);
    let (dump, row) = match mode {
        EvolveMode::Scalar => {
            let phi = evolve_scalar(&problem, u0.component(0), s, t)?;
            let row = vec![
                "scalar".into(),
                num(s),
                num(t),
                num(phi.lp_norm(2.0)),
                num(phi.lp_norm(sc.q)),
                num(phi.lp_norm(f64::INFINITY)),
                String::new(),
                String::new(),
            ];
            (Dump::Scalar(phi), row)
        }
        EvolveMode::Vector | EvolveMode::Solenoidal => {
            let u = if mode == EvolveMode::Vector {
                evolve_vector(&problem, &u0, s, t)?
            } else {
                evolve_solenoidal(&problem, &u0, s, t)?
            };
            let name = if mode == EvolveMode::Vector { "vector" } else { "solenoidal" };
            let row = vec![
                name.into(),
                num(s),
                num(t),
                num(u.lp_norm(2.0)),
                num(u.lp_norm(sc.q)),
                num(u.lp_norm(f64::INFINITY)),
                num(u.divergence().lp_norm(2.0)),
                num(u.divergence_ratio()),
            ];
            (Dump::Vector(u), row)
        }
    };
    say(out, format!("{} evolution from s = {} to t = {}: L2 norm {}", row[0], row[1], row[2], row[3]))?;
    table.push(row);
    ensure_dir(out_dir)?;
    save_dump(&out_dir.join("evolve.rnsf"), &dump)?;
    table.save(&out_dir.join("evolve.csv"))?;
    Ok(())
}

/// Picard solve on [0, T0]. Writes `kato.csv` (one row per iterate),
/// `kato_summary.csv`, and with `dumps` one `u_NNNN.rnsf` per stored time.
pub fn cmd_solve(sc: &Scenario, out_dir: &Path, dumps: bool, out: &mut dyn Write) -> Result<(), Failure> {
    let (problem, u0) = sc.validate(Purpose::Solve)?;
    let (traj, report) = solve_mild(&problem, &u0, sc.t0, sc.p, sc.q)?;
    ensure_dir(out_dir)?;
    let mut table = Table::new(&["iterate", "k", "k_prime", "l", "l_prime", "r", "difference"]);
    for (c, diff) in report.constants.iter().zip(&report.differences) {
        table.push(vec![c.j.to_string(), num(c.k), num(c.k_prime), opt(c.l), opt(c.l_prime), num(c.r), num(*diff)]);
    }
    table.save(&out_dir.join("kato.csv"))?;
    let mut summary =
        Table::new(&["iterations", "converged", "duhamel_residual", "holder_ratio", "sup_norm", "times"]);
    summary.push(vec![
        report.iterations.to_string(),
        report.converged.to_string(),
        opt(report.duhamel_residual),
        num(holder_ratio(&traj)),
        num(traj.sup_norm()),
        traj.times().len().to_string(),
    ]);
    summary.save(&out_dir.join("kato_summary.csv"))?;
    if dumps {
        for (k, u) in traj.fields().iter().enumerate() {
            save_dump(&out_dir.join(format!("u_{k:04}.rnsf")), &Dump::Vector(u.clone()))?;
        }
    }
    say(
        out,
        format!(
            "{} after {} Picard updates; Duhamel residual {}",
            if report.converged { "converged" } else { "not converged" },
            report.iterations,
            opt(report.duhamel_residual)
        ),
    )?;
    if !report.converged {
        return Err(Failure::NotConverged(format!(
            "Picard iteration did not converge within {} updates",
            report.iterations
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lplq,
    Gradient,
    QBounds,
    SmallTime,
    EvolutionLaw,
    Generator,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lplq => "lplq",
            Self::Gradient => "gradient",
            Self::QBounds => "qbounds",
            Self::SmallTime => "smalltime",
            Self::EvolutionLaw => "evolutionlaw",
            Self::Generator => "generator",
        }
    }
}

/// Evolution-law tolerance: exact multiplier paths (M ≡ 0) versus
/// interpolating ones.
pub fn evolution_law_tolerance(problem: &Problem) -> f64 {
    if problem.m.is_zero() {
        1e-10
    } else {
        1e-8
    }
}

/// Allowed distance of the generator slope from 2.
pub const GENERATOR_SLOPE_TOL: f64 = 0.2;

fn rate_status(r: &RateFitReport) -> &'static str {
    if !r.saturating {
        "non-saturating"
    } else if r.passed() {
        "pass"
    } else {
        "fail"
    }
}

/// Runs one suite and writes `verify_<suite>.csv` (plus `.dat` series for the
/// rate fits and a summary for the small-time limits) into `out_dir`.
/// Returns the paths written.
pub fn cmd_verify(sc: &Scenario, suite: Suite, out_dir: &Path, out: &mut dyn Write) -> Result<Vec<PathBuf>, Failure> {
    let (problem, u0) = sc.validate(Purpose::Linear)?;
    ensure_dir(out_dir)?;
    let name = suite.name();
    let main = out_dir.join(format!("verify_{name}.csv"));
    let mut written = vec![main.clone()];
    let v = &sc.verify;
    let passed = match suite {
        Suite::Lplq | Suite::Gradient => {
            let data = match v.rate_source {
                RateSource::ScaleMatched { c, n } => RateData::ScaleMatched { c, n },
                RateSource::InitialData => RateData::Fixed(u0),
            };
            let kind = if suite == Suite::Lplq { RateKind::Lplq } else { RateKind::Gradient };
            let mut windows = vec![("default", v.window)];
            if problem.m.is_skew() {
                windows.push(("extended", v.window.extended(v.skew_range)));
            }
            let mut table = Table::new(&[
                "range",
                "exponent_fit",
                "exponent_theory",
                "r_squared",
                "tau_min",
                "tau_max",
                "samples",
                "saturating",
                "status",
            ]);
            let mut ok = true;
            for (label, w) in windows {
                let (lq, grad) = fit_rates(&problem, &data, sc.p, sc.q, sc.s0, &w)?;
                let r = if kind == RateKind::Lplq { lq } else { grad };
                let status = rate_status(&r);
                ok &= status != "fail";
                say(
                    out,
                    format!(
                        "{name} ({label}): slope {} vs {} (r2 {}) {status}",
                        num(r.exponent_fit),
                        num(r.exponent_theory),
                        num(r.r_squared)
                    ),
                )?;
                table.push(vec![
                    label.into(),
                    num(r.exponent_fit),
                    num(r.exponent_theory),
                    num(r.r_squared),
                    num(r.time_range.0),
                    num(r.time_range.1),
                    r.samples.to_string(),
                    r.saturating.to_string(),
                    status.into(),
                ]);
                let dat = out_dir.join(format!("verify_{name}_{label}.dat"));
                save_dat(&dat, &r.taus, &r.values)?;
                written.push(dat);
            }
            table.save(&main)?;
            ok
        }
        Suite::QBounds => {
            let r = qbounds_check(&problem, &v.qbounds)?;
            let mut table = Table::new(&[
                "pairs",
                "sup_inverse_sqrt",
                "inf_sqrt_det",
                "min_quarter_ratio",
                "quarter_window",
                "refinement_change",
                "passed",
            ]);
            table.push(vec![
                r.pairs.to_string(),
                num(r.sup_inverse_sqrt),
                num(r.inf_sqrt_det),
                num(r.min_quarter_ratio),
                num(r.quarter_window),
                num(r.refinement_change),
                r.passed().to_string(),
            ]);
            table.save(&main)?;
            say(
                out,
                format!(
                    "qbounds: sup {} inf {} quarter {}",
                    num(r.sup_inverse_sqrt),
                    num(r.inf_sqrt_det),
                    num(r.min_quarter_ratio)
                ),
            )?;
            r.passed()
        }
        Suite::SmallTime => {
            let r = small_time_limits(&problem, &u0, sc.p, sc.q, sc.s0)?;
            let mut table = Table::new(&["k", "tau", "weighted", "weighted_gradient"]);
            for (i, tau) in r.taus.iter().enumerate() {
                table.push(vec![(i + 2).to_string(), num(*tau), num(r.weighted[i]), num(r.weighted_gradient[i])]);
            }
            table.save(&main)?;
            let summary_path = out_dir.join("verify_smalltime_summary.csv");
            let mut summary = Table::new(&[
                "lq_limit_applies",
                "lq_ratio",
                "gradient_ratio",
                "lq_monotone",
                "gradient_monotone",
                "passed",
            ]);
            summary.push(vec![
                r.lq_limit_applies.to_string(),
                num(r.lq_ratio),
                num(r.gradient_ratio),
                r.lq_monotone.to_string(),
                r.gradient_monotone.to_string(),
                r.passed().to_string(),
            ]);
            summary.save(&summary_path)?;
            written.push(summary_path);
            say(out, format!("smalltime: ratios {} (Lq), {} (gradient)", num(r.lq_ratio), num(r.gradient_ratio)))?;
            r.passed()
        }
        Suite::EvolutionLaw => {
            let tol = evolution_law_tolerance(&problem);
            let samples = evolution_law_check(&problem, &u0, v.triples, sc.s0 + sc.t0, sc.seed)?;
            let mut table = Table::new(&["s", "r", "t", "scalar_residual", "vector_residual", "tolerance", "passed"]);
            let mut ok = true;
            let mut worst = 0.0f64;
            for x in &samples {
                let pass = x.scalar <= tol && x.vector <= tol;
                ok &= pass;
                worst = worst.max(x.scalar).max(x.vector);
                table.push(vec![num(x.s), num(x.r), num(x.t), num(x.scalar), num(x.vector), num(tol), pass.to_string()]);
            }
            table.save(&main)?;
            say(out, format!("evolutionlaw: worst residual {} (tolerance {})", num(worst), num(tol)))?;
            ok
        }
        Suite::Generator => {
            let w = GeneratorWindow::new(v.generator_rho)?;
            let t = sc.s0 + 0.5 * sc.t0;
            let r = generator_convergence(&problem, &u0, sc.s0, t, &v.generator_dts, &w)?;
            let ok = (r.slope - 2.0).abs() <= GENERATOR_SLOPE_TOL;
            let mut table = Table::new(&["dt", "residual", "slope", "passed"]);
            for (dt, res) in r.dts.iter().zip(&r.residuals) {
                table.push(vec![num(*dt), num(*res), num(r.slope), ok.to_string()]);
            }
            table.save(&main)?;
            say(out, format!("generator: slope {}", num(r.slope)))?;
            ok
        }
    };
    if passed {
        say(out, format!("{name}: PASS"))?;
        Ok(written)
    } else {
        say(out, format!("{name}: FAIL"))?;
        Err(Failure::Numerical(format!("suite {name}: tolerances not met (see {})", main.display())))
    }
}

