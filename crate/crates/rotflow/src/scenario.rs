//! Scenario files: `[section]` headers followed by `key = value` lines.
//! Arrays are comma-separated, matrices row-major. `#` starts a comment line.
//!
//! ```text
//! [problem]
//! d = 2
//! m.kind = constant
//! m.matrix = 0, -0.5, 0.5, 0
//! u0 = gaussian-bump
//! u0.sigma = 0.75
//!
//! [grid]
//! L = 8
//! n = 64
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rotflow_core::initial::{gaussian_bump, random_solenoidal, taylor_green};
use rotflow_core::propagator::{commutation_check, outflow_drift, MatrixTable};
use rotflow_core::vector_evolution::GeneratorWindow;
use rotflow_core::verify::{QBoundsParams, RateWindow};
use rotflow_core::{
    Grid, Matrix, MatrixFunSpec, Problem, QuadParams, SolverParams, TimeProfile, Vector, VectorField,
    VectorFunSpec,
};

use crate::dump::{read_dump, Dump};
use crate::Failure;

/// Boundary-shell depth and bound checked on the initial data.
pub const SHELL_LAYERS: usize = 2;
pub const SHELL_LIMIT: f64 = 1e-10;
/// Relative commutator tolerance of the load-time commutation scan.
pub const COMMUTATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSpec {
    Zero,
    Constant(Matrix),
    TimeScaled { base: Matrix, profile: TimeProfile },
    Table { times: Vec<f64>, matrices: Vec<Matrix> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    Zero,
    Constant(Vector),
    Table { times: Vec<f64>, values: Vec<Vector> },
    /// f(t) = −U(t,0)ᵀ v∞
    Outflow(Vector),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Solenoidal vortex of width σ (see [`gaussian_bump`]).
    GaussianBump { sigma: f64, amplitude: f64, center: Vector },
    /// amplitude·exp(−|x − c|²/2σ²) in the first component, zero elsewhere.
    /// Not solenoidal; meant for scalar runs.
    Gaussian { sigma: f64, amplitude: f64, center: Vector },
    TaylorGreen { k: f64, amplitude: f64 },
    /// Seeded by the scenario seed.
    RandomSolenoidal { amplitude: f64, slope: f64 },
    File(PathBuf),
}

/// Data used by the rate fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSource {
    ScaleMatched { c: f64, n: usize },
    InitialData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub window: RateWindow,
    pub rate_source: RateSource,
    /// Factor on τ_max for the extra skew-M fit.
    pub skew_range: f64,
    pub qbounds: QBoundsParams,
    pub triples: usize,
    pub generator_dts: Vec<f64>,
    pub generator_rho: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            window: RateWindow::default(),
            rate_source: RateSource::ScaleMatched { c: 1.0, n: 64 },
            skew_range: 10.0,
            qbounds: QBoundsParams::default(),
            triples: 10,
            generator_dts: vec![4e-3, 2e-3, 1e-3],
            generator_rho: GeneratorWindow::default().rho(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dim: usize,
    pub m: MatrixSpec,
    pub f: DriftSpec,
    pub u0: InitialData,
    pub seed: u64,
    pub half_width: f64,
    pub n: usize,
    pub s0: f64,
    pub t0: f64,
    pub p: f64,
    pub q: f64,
    pub quad: QuadParams,
    /// `time_steps` holds the `[time] Nt` value.
    pub solver: SolverParams,
    pub verify: VerifySettings,
}

/// What the scenario is about to be used for; `solve` has stricter exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Linear,
    Solve,
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

const SECTIONS: &[&str] = &["problem", "grid", "time", "exponents", "quadrature", "solver", "verify"];

struct Entries {
    map: BTreeMap<(String, String), (String, usize)>,
}

impl Entries {
    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.map.remove(&(section.to_string(), key.to_string()))
    }

    fn parse<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>, Failure> {
        match self.take(section, key) {
            None => Ok(None),
            Some((raw, line)) => raw
                .parse()
                .map(Some)
                .map_err(|_| invalid(format!("line {line}: cannot parse [{section}] {key} = {raw}"))),
        }
    }

    fn floats(&mut self, section: &str, key: &str) -> Result<Option<Vec<f64>>, Failure> {
        match self.take(section, key) {
            None => Ok(None),
            Some((raw, line)) => parse_list(&raw)
                .map(Some)
                .map_err(|_| invalid(format!("line {line}: cannot parse [{section}] {key} = {raw}"))),
        }
    }

    fn require<T>(&mut self, value: Option<T>, section: &str, key: &str) -> Result<T, Failure> {
        value.ok_or_else(|| invalid(format!("missing [{section}] {key}")))
    }
}

fn parse_list(raw: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    raw.split(',').map(|s| s.trim().parse::<f64>()).collect()
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn vector_of(values: Vec<f64>, dim: usize, what: &str) -> Result<Vector, Failure> {
    if values.len() != dim {
        return Err(invalid(format!("{what} needs {dim} entries, got {}", values.len())));
    }
    Ok(Vector::from_slice(&values))
}

fn matrix_of(values: &[f64], dim: usize, what: &str) -> Result<Matrix, Failure> {
    if values.len() != dim * dim {
        return Err(invalid(format!("{what} needs {} entries, got {}", dim * dim, values.len())));
    }
    Matrix::from_row_major(dim, values).map_err(|e| invalid(format!("{what}: {e}")))
}

fn parse_profile(raw: &str) -> Result<TimeProfile, Failure> {
    let bad = || invalid(format!("bad time profile `{raw}`"));
    let (kind, args) = raw.split_once(':').ok_or_else(bad)?;
    let args = parse_list(args).map_err(|_| bad())?;
    let exact = |n: usize| if args.len() == n { Ok(()) } else { Err(bad()) };
    Ok(match kind.trim() {
        "const" => {
            exact(1)?;
            TimeProfile::Constant(args[0])
        }
        "sin" => {
            exact(3)?;
            TimeProfile::Sine { amplitude: args[0], frequency: args[1], phase: args[2] }
        }
        "cos" => {
            exact(3)?;
            TimeProfile::Cosine { amplitude: args[0], frequency: args[1], phase: args[2] }
        }
        "poly" => TimeProfile::Polynomial(args),
        "exp" => {
            exact(2)?;
            TimeProfile::Exponential { amplitude: args[0], rate: args[1] }
        }
        _ => return Err(bad()),
    })
}

fn fmt_profile(p: &TimeProfile) -> String {
    match p {
        TimeProfile::Constant(c) => format!("const:{c}"),
        TimeProfile::Sine { amplitude, frequency, phase } => format!("sin:{amplitude},{frequency},{phase}"),
        TimeProfile::Cosine { amplitude, frequency, phase } => format!("cos:{amplitude},{frequency},{phase}"),
        TimeProfile::Polynomial(c) => format!("poly:{}", fmt_list(c).replace(' ', "")),
        TimeProfile::Exponential { amplitude, rate } => format!("exp:{amplitude},{rate}"),
    }
}

fn tokenize(text: &str) -> Result<Entries, Failure> {
    let mut map = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(invalid(format!("line {line_no}: unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("line {line_no}: expected `key = value`")))?;
        let sec = section
            .clone()
            .ok_or_else(|| invalid(format!("line {line_no}: key outside of a section")))?;
        let key = key.trim().to_string();
        if map.insert((sec.clone(), key.clone()), (value.trim().to_string(), line_no)).is_some() {
            return Err(invalid(format!("line {line_no}: duplicate key [{sec}] {key}")));
        }
    }
    Ok(Entries { map })
}

impl Scenario {
    /// Reads a scenario file; a relative `u0.path` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read scenario {}: {e}", path.display())))?;
        let mut scenario = Self::parse(&text)?;
        if let InitialData::File(p) = &mut scenario.u0 {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(scenario)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut e = tokenize(text)?;
        let d: usize = e.parse("problem", "d")?.unwrap_or(2);
        if !matches!(d, 2 | 3) {
            return Err(invalid(format!("d = {d}; only 2 and 3 are supported")));
        }

        let m_kind: String = e.parse("problem", "m.kind")?.unwrap_or_else(|| "zero".into());
        let m = match m_kind.as_str() {
            "zero" => MatrixSpec::Zero,
            "constant" => {
                let v = e.floats("problem", "m.matrix")?;
                MatrixSpec::Constant(matrix_of(&e.require(v, "problem", "m.matrix")?, d, "m.matrix")?)
            }
            "time-scaled" => {
                let v = e.floats("problem", "m.matrix")?;
                let base = matrix_of(&e.require(v, "problem", "m.matrix")?, d, "m.matrix")?;
                let raw: Option<String> = e.parse("problem", "m.profile")?;
                MatrixSpec::TimeScaled { base, profile: parse_profile(&e.require(raw, "problem", "m.profile")?)? }
            }
            "table" => {
                let t = e.floats("problem", "m.table.times")?;
                let times = e.require(t, "problem", "m.table.times")?;
                let v = e.floats("problem", "m.table.values")?;
                let values = e.require(v, "problem", "m.table.values")?;
                if values.len() != times.len() * d * d {
                    return Err(invalid(format!(
                        "m.table.values needs {} entries ({} times of {d}x{d}), got {}",
                        times.len() * d * d,
                        times.len(),
                        values.len()
                    )));
                }
                let matrices = values
                    .chunks(d * d)
                    .map(|c| matrix_of(c, d, "m.table.values"))
                    .collect::<Result<_, _>>()?;
                MatrixSpec::Table { times, matrices }
            }
            other => return Err(invalid(format!("unknown m.kind `{other}`"))),
        };

        let v_inf = e.floats("problem", "v_infinity")?;
        let f_kind: Option<String> = e.parse("problem", "f.kind")?;
        let f_kind = f_kind.unwrap_or_else(|| if v_inf.is_some() { "outflow".into() } else { "zero".into() });
        if v_inf.is_some() && f_kind != "outflow" {
            return Err(invalid("v_infinity given together with a non-outflow f.kind"));
        }
        let f = match f_kind.as_str() {
            "zero" => DriftSpec::Zero,
            "constant" => {
                let v = e.floats("problem", "f.value")?;
                DriftSpec::Constant(vector_of(e.require(v, "problem", "f.value")?, d, "f.value")?)
            }
            "table" => {
                let t = e.floats("problem", "f.table.times")?;
                let times = e.require(t, "problem", "f.table.times")?;
                let v = e.floats("problem", "f.table.values")?;
                let values = e.require(v, "problem", "f.table.values")?;
                if values.len() != times.len() * d {
                    return Err(invalid(format!(
                        "f.table.values needs {} entries, got {}",
                        times.len() * d,
                        values.len()
                    )));
                }
                DriftSpec::Table { times, values: values.chunks(d).map(Vector::from_slice).collect() }
            }
            "outflow" => DriftSpec::Outflow(vector_of(e.require(v_inf, "problem", "v_infinity")?, d, "v_infinity")?),
            other => return Err(invalid(format!("unknown f.kind `{other}`"))),
        };

        let u0_kind: String = e.parse("problem", "u0")?.unwrap_or_else(|| "gaussian-bump".into());
        let center = match e.floats("problem", "u0.center")? {
            Some(v) => vector_of(v, d, "u0.center")?,
            None => Vector::zeros(d),
        };
        let sigma = e.parse("problem", "u0.sigma")?;
        let amplitude = e.parse("problem", "u0.amplitude")?.unwrap_or(1.0);
        let u0 = match u0_kind.as_str() {
            "gaussian-bump" => InitialData::GaussianBump { sigma: sigma.unwrap_or(1.0), amplitude, center },
            "gaussian" => InitialData::Gaussian { sigma: sigma.unwrap_or(1.0), amplitude, center },
            "taylor-green" => InitialData::TaylorGreen { k: e.parse("problem", "u0.k")?.unwrap_or(1.0), amplitude },
            "random-solenoidal" => {
                InitialData::RandomSolenoidal { amplitude, slope: e.parse("problem", "u0.slope")?.unwrap_or(-2.0) }
            }
            "file" => {
                let p: Option<String> = e.parse("problem", "u0.path")?;
                InitialData::File(PathBuf::from(e.require(p, "problem", "u0.path")?))
            }
            other => return Err(invalid(format!("unknown u0 family `{other}`"))),
        };
        let seed = e.parse("problem", "seed")?.unwrap_or(0);

        let half_width = e.parse("grid", "L")?.unwrap_or(8.0);
        let n = e.parse("grid", "n")?.unwrap_or(64);
        let s0 = e.parse("time", "s0")?.unwrap_or(0.0);
        let t0 = e.parse("time", "T0")?.unwrap_or(1.0);
        let defaults = SolverParams::default();
        let p = e.parse("exponents", "p")?.unwrap_or(2.0);
        let q = e.parse("exponents", "q")?.unwrap_or(4.0);
        let dq = QuadParams::default();
        let quad = QuadParams {
            tol: e.parse("quadrature", "tol")?.unwrap_or(dq.tol),
            max_depth: e.parse("quadrature", "max_depth")?.unwrap_or(dq.max_depth),
        };
        let solver = SolverParams {
            time_steps: e.parse("time", "Nt")?.unwrap_or(defaults.time_steps),
            interpolation_order: e.parse("solver", "interpolation_order")?.unwrap_or(defaults.interpolation_order),
            picard_max_iter: e.parse("solver", "picard_max_iter")?.unwrap_or(defaults.picard_max_iter),
            picard_tol: e.parse("solver", "picard_tol")?.unwrap_or(defaults.picard_tol),
            duhamel_substeps: e.parse("solver", "duhamel_substeps")?.unwrap_or(defaults.duhamel_substeps),
            dealias: e.parse("solver", "dealias")?.unwrap_or(defaults.dealias),
        };

        let dv = VerifySettings::default();
        let window = RateWindow {
            tau_min: e.parse("verify", "tau_min")?.unwrap_or(dv.window.tau_min),
            tau_max: e.parse("verify", "tau_max")?.unwrap_or(dv.window.tau_max),
            samples: e.parse("verify", "samples")?.unwrap_or(dv.window.samples),
        };
        let source: String = e.parse("verify", "rate_data")?.unwrap_or_else(|| "scale-matched".into());
        let c = e.parse("verify", "rate_c")?;
        let rn = e.parse("verify", "rate_n")?;
        let rate_source = match source.as_str() {
            "scale-matched" => RateSource::ScaleMatched { c: c.unwrap_or(1.0), n: rn.unwrap_or(64) },
            "u0" => RateSource::InitialData,
            other => return Err(invalid(format!("unknown rate_data `{other}`"))),
        };
        let qd = dv.qbounds;
        let qbounds = QBoundsParams {
            t_max: e.parse("verify", "qbounds_t")?.unwrap_or(qd.t_max),
            samples: e.parse("verify", "qbounds_samples")?.unwrap_or(qd.samples),
            min_gap: e.parse("verify", "qbounds_min_gap")?.unwrap_or(qd.min_gap),
            directions: e.parse("verify", "directions")?.unwrap_or(qd.directions),
            quarter_window: e.parse("verify", "quarter_window")?.unwrap_or(qd.quarter_window),
            seed,
        };
        let verify = VerifySettings {
            window,
            rate_source,
            skew_range: e.parse("verify", "skew_range")?.unwrap_or(dv.skew_range),
            qbounds,
            triples: e.parse("verify", "triples")?.unwrap_or(dv.triples),
            generator_dts: e.floats("verify", "generator_dt")?.unwrap_or(dv.generator_dts),
            generator_rho: e.parse("verify", "generator_rho")?.unwrap_or(dv.generator_rho),
        };

        if let Some(((sec, key), (_, line))) = e.map.into_iter().next() {
            return Err(invalid(format!("line {line}: unknown key [{sec}] {key}")));
        }
        Ok(Self { dim: d, m, f, u0, seed, half_width, n, s0, t0, p, q, quad, solver, verify })
    }

    /// Canonical text form; `parse` reads it back to an equal scenario.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let flat = |m: &Matrix| fmt_list(&m.to_row_major());
        let _ = writeln!(w, "[problem]\nd = {}", self.dim);
        match &self.m {
            MatrixSpec::Zero => {
                let _ = writeln!(w, "m.kind = zero");
            }
            MatrixSpec::Constant(m) => {
                let _ = writeln!(w, "m.kind = constant\nm.matrix = {}", flat(m));
            }
            MatrixSpec::TimeScaled { base, profile } => {
                let _ = writeln!(w, "m.kind = time-scaled\nm.matrix = {}\nm.profile = {}", flat(base), fmt_profile(profile));
            }
            MatrixSpec::Table { times, matrices } => {
                let values: Vec<f64> = matrices.iter().flat_map(|m| m.to_row_major()).collect();
                let _ = writeln!(w, "m.kind = table\nm.table.times = {}\nm.table.values = {}", fmt_list(times), fmt_list(&values));
            }
        }
        match &self.f {
            DriftSpec::Zero => {
                let _ = writeln!(w, "f.kind = zero");
            }
            DriftSpec::Constant(v) => {
                let _ = writeln!(w, "f.kind = constant\nf.value = {}", fmt_list(v.as_slice()));
            }
            DriftSpec::Table { times, values } => {
                let flat: Vec<f64> = values.iter().flat_map(|v| v.as_slice().to_vec()).collect();
                let _ = writeln!(w, "f.kind = table\nf.table.times = {}\nf.table.values = {}", fmt_list(times), fmt_list(&flat));
            }
            DriftSpec::Outflow(v) => {
                let _ = writeln!(w, "f.kind = outflow\nv_infinity = {}", fmt_list(v.as_slice()));
            }
        }
        match &self.u0 {
            InitialData::GaussianBump { sigma, amplitude, center } | InitialData::Gaussian { sigma, amplitude, center } => {
                let name = if matches!(self.u0, InitialData::GaussianBump { .. }) { "gaussian-bump" } else { "gaussian" };
                let _ = writeln!(
                    w,
                    "u0 = {name}\nu0.sigma = {sigma}\nu0.amplitude = {amplitude}\nu0.center = {}",
                    fmt_list(center.as_slice())
                );
            }
            InitialData::TaylorGreen { k, amplitude } => {
                let _ = writeln!(w, "u0 = taylor-green\nu0.k = {k}\nu0.amplitude = {amplitude}");
            }
            InitialData::RandomSolenoidal { amplitude, slope } => {
                let _ = writeln!(w, "u0 = random-solenoidal\nu0.amplitude = {amplitude}\nu0.slope = {slope}");
            }
            InitialData::File(p) => {
                let _ = writeln!(w, "u0 = file\nu0.path = {}", p.display());
            }
        }
        let _ = writeln!(w, "seed = {}\n", self.seed);
        let _ = writeln!(w, "[grid]\nL = {}\nn = {}\n", self.half_width, self.n);
        let _ = writeln!(w, "[time]\ns0 = {}\nT0 = {}\nNt = {}\n", self.s0, self.t0, self.solver.time_steps);
        let _ = writeln!(w, "[exponents]\np = {}\nq = {}\n", self.p, self.q);
        let _ = writeln!(w, "[quadrature]\ntol = {}\nmax_depth = {}\n", self.quad.tol, self.quad.max_depth);
        let s = &self.solver;
        let _ = writeln!(
            w,
            "[solver]\ninterpolation_order = {}\npicard_max_iter = {}\npicard_tol = {}\nduhamel_substeps = {}\ndealias = {}\n",
            s.interpolation_order, s.picard_max_iter, s.picard_tol, s.duhamel_substeps, s.dealias
        );
        let v = &self.verify;
        let _ = writeln!(w, "[verify]\ntau_min = {}\ntau_max = {}\nsamples = {}", v.window.tau_min, v.window.tau_max, v.window.samples);
        match v.rate_source {
            RateSource::ScaleMatched { c, n } => {
                let _ = writeln!(w, "rate_data = scale-matched\nrate_c = {c}\nrate_n = {n}");
            }
            RateSource::InitialData => {
                let _ = writeln!(w, "rate_data = u0");
            }
        }
        let qb = &v.qbounds;
        let _ = writeln!(
            w,
            "skew_range = {}\nqbounds_t = {}\nqbounds_samples = {}\nqbounds_min_gap = {}\ndirections = {}\nquarter_window = {}\ntriples = {}\ngenerator_dt = {}\ngenerator_rho = {}",
            v.skew_range,
            qb.t_max,
            qb.samples,
            qb.min_gap,
            qb.directions,
            qb.quarter_window,
            v.triples,
            fmt_list(&v.generator_dts),
            v.generator_rho
        );
        out
    }

    pub fn grid(&self) -> Result<Grid, Failure> {
        Grid::new(self.dim, self.n, self.half_width).map_err(|e| invalid(e.to_string()))
    }

    pub fn matrix_fun(&self) -> Result<MatrixFunSpec, Failure> {
        Ok(match &self.m {
            MatrixSpec::Zero => MatrixFunSpec::zero(self.dim),
            MatrixSpec::Constant(m) => MatrixFunSpec::Constant(*m),
            MatrixSpec::TimeScaled { base, profile } => {
                MatrixFunSpec::TimeScaled { base: *base, profile: profile.clone() }
            }
            MatrixSpec::Table { times, matrices } => {
                MatrixFunSpec::Tabulated(MatrixTable::new(times, matrices).map_err(|e| invalid(format!("m.table: {e}")))?)
            }
        })
    }

    /// The linear problem, without the commutation scan.
    pub fn problem(&self) -> Result<Problem, Failure> {
        let m = self.matrix_fun()?;
        let f = match &self.f {
            DriftSpec::Zero => VectorFunSpec::zero(self.dim),
            DriftSpec::Constant(v) => VectorFunSpec::Constant(*v),
            DriftSpec::Table { times, values } => {
                VectorFunSpec::tabulated(times, values).map_err(|e| invalid(format!("f.table: {e}")))?
            }
            DriftSpec::Outflow(v) => outflow_drift(&m, *v),
        };
        self.quad_checked()?;
        self.solver.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(Problem::new(m, f).map_err(|e| invalid(e.to_string()))?.with_quad(self.quad).with_solver(self.solver))
    }

    fn quad_checked(&self) -> Result<(), Failure> {
        if !(self.quad.tol > 0.0 && self.quad.tol.is_finite()) || self.quad.max_depth < 1 {
            return Err(invalid("quadrature tol must be positive and max_depth at least 1"));
        }
        Ok(())
    }

    /// Times at which the load-time commutation scan evaluates M.
    pub fn commutation_times(&self) -> Vec<f64> {
        (0..=8).map(|k| self.s0 + self.t0 * k as f64 / 8.0).collect()
    }

    /// Pairwise commutation scan over the scenario window (and all knots of a
    /// tabulated family).
    pub fn commutation_report(&self) -> Result<rotflow_core::propagator::CommutationReport, Failure> {
        let m = self.matrix_fun()?;
        let times = self.commutation_times();
        let mut pairs = Vec::new();
        for (i, a) in times.iter().enumerate() {
            for b in &times[i + 1..] {
                pairs.push((*a, *b));
            }
        }
        Ok(commutation_check(&m, &pairs, COMMUTATION_TOL))
    }

    pub fn initial_field(&self) -> Result<VectorField, Failure> {
        let grid = self.grid()?;
        let core = |e: rotflow_core::Error| invalid(format!("u0: {e}"));
        match &self.u0 {
            InitialData::GaussianBump { sigma, amplitude, center } => {
                gaussian_bump(grid, *sigma, *amplitude, center).map_err(core)
            }
            InitialData::Gaussian { sigma, amplitude, center } => {
                if !(*sigma > 0.0) {
                    return Err(invalid("u0.sigma must be positive"));
                }
                let d = self.dim;
                Ok(VectorField::from_fn(grid, |x| {
                    let r = *x - *center;
                    let mut v = Vector::zeros(d);
                    v[0] = amplitude * (-r.dot(&r) / (2.0 * sigma * sigma)).exp();
                    v
                }))
            }
            InitialData::TaylorGreen { k, amplitude } => taylor_green(grid, *k, *amplitude).map_err(core),
            InitialData::RandomSolenoidal { amplitude, slope } => {
                random_solenoidal(grid, self.seed, *amplitude, *slope).map_err(core)
            }
            InitialData::File(path) => {
                let file = std::fs::File::open(path)
                    .map_err(|e| invalid(format!("cannot open u0 dump {}: {e}", path.display())))?;
                match read_dump(std::io::BufReader::new(file))? {
                    Dump::Vector(u) => {
                        if *u.grid() != grid {
                            return Err(invalid("u0 dump grid differs from the scenario grid"));
                        }
                        Ok(u)
                    }
                    Dump::Scalar(_) => Err(invalid("u0 dump holds a scalar field")),
                }
            }
        }
    }

    /// Load-time checks: time window, exponents, commutation and the
    /// boundary shell of u0 (periodic Taylor–Green data is exempt). Returns
    /// the problem and the initial field.
    pub fn validate(&self, purpose: Purpose) -> Result<(Problem, VectorField), Failure> {
        if !(self.s0 >= 0.0 && self.s0.is_finite() && self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(invalid("need s0 >= 0 and T0 > 0"));
        }
        if !(self.p > 1.0 && self.q >= self.p && self.q.is_finite()) {
            return Err(invalid(format!("exponents must satisfy 1 < p <= q < inf (p = {}, q = {})", self.p, self.q)));
        }
        if purpose == Purpose::Solve && self.p < self.dim as f64 {
            return Err(invalid(format!("solve needs p >= d (p = {}, d = {})", self.p, self.dim)));
        }
        let problem = self.problem()?;
        let report = self.commutation_report()?;
        if !report.passed() {
            return Err(Failure::NonCommuting(report));
        }
        let u0 = self.initial_field()?;
        if !matches!(self.u0, InitialData::TaylorGreen { .. }) {
            let shell = u0.boundary_max(SHELL_LAYERS);
            if !(shell <= SHELL_LIMIT) {
                return Err(invalid(format!(
                    "u0 reaches {shell:e} on the boundary shell (limit {SHELL_LIMIT:e}); enlarge L"
                )));
            }
        }
        Ok((problem, u0))
    }
}
