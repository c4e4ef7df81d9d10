//! Scenario files and the pipelines run on them.
//!
//! A scenario is a versioned JSON document naming a flux, the interval
//! `[a, b]`, the horizon, the theorem whose hypotheses are claimed and the two
//! profiles. Unknown fields are rejected.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::control::{compose_full_control, default_interval, BoundMode, CompositionPlan, SteeringProblem};
use crate::flux::{Derivative, FluxModel};
use crate::fv::FvMeta;
use crate::hypotheses::{check_hypotheses, HypothesisQuery, HypothesisVerdict, Theorem};
use crate::interval::Interval;
use crate::metrics::{self, MetricReport};
use crate::pipeline::{run_bv_pipeline, run_fv, BvProblem, BvTable};
use crate::profile::io::ProfileDoc;
use crate::profile::{ProfileBV, ProfileC1};
use crate::steering::{leg_traces, run_classical, SteeringOptions, SteeringOutcome};
use crate::{Error, Result};

pub const SCHEMA: u32 = 1;
const MAX_KNOTS: usize = 100_000;
const MAX_N: usize = 10_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum FluxSpec {
    Builtin(String),
    /// CSV `u,f,df,d2f`, relative to the scenario file.
    Table(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub amp: f64,
    pub freq: f64,
    #[serde(default)]
    pub phase: f64,
}

fn default_knots() -> usize {
    65
}

/// `mean + slope·(x − a) + Σ amp·sin(freq·(x − a) + phase)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub mean: f64,
    #[serde(default)]
    pub slope: f64,
    #[serde(default)]
    pub terms: Vec<Term>,
    #[serde(default = "default_knots")]
    pub knots: usize,
}

impl Harmonic {
    fn build(&self, origin: f64, lo: f64, hi: f64) -> Result<ProfileC1> {
        if !(2..=MAX_KNOTS).contains(&self.knots) {
            return Err(Error::Invalid(format!("knots must lie in 2..={MAX_KNOTS}, got {}", self.knots)));
        }
        let vals = [self.mean, self.slope].into_iter().chain(self.terms.iter().flat_map(|t| [t.amp, t.freq, t.phase]));
        if vals.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("harmonic coefficients must be finite".into()));
        }
        let f = |x: f64| {
            let s = x - origin;
            self.mean + self.slope * s + self.terms.iter().map(|t| t.amp * (t.freq * s + t.phase).sin()).sum::<f64>()
        };
        let df = |x: f64| {
            let s = x - origin;
            self.slope + self.terms.iter().map(|t| t.amp * t.freq * (t.freq * s + t.phase).cos()).sum::<f64>()
        };
        ProfileC1::from_fn(lo, hi, self.knots, f, df)
    }
}

/// Harmonic pieces separated by interior break points (jumps allowed).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piecewise {
    pub breaks: Vec<f64>,
    pub pieces: Vec<Harmonic>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ProfileSpec {
    /// Profile JSON file, relative to the scenario file.
    File(PathBuf),
    Inline(ProfileDoc),
    Harmonic(Harmonic),
    Piecewise(Piecewise),
}

fn default_samples() -> usize {
    40
}

fn default_check_points() -> usize {
    200
}

fn default_bv_dx() -> f64 {
    2e-3
}

fn default_ns() -> Vec<usize> {
    vec![25, 50, 100]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Retained times per classical leg.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_check_points")]
    pub check_points: usize,
    /// Cell width of the FV cross-check in `steer`; none skips it.
    #[serde(default)]
    pub dx: Option<f64>,
    /// Cell width of the BV pipeline.
    #[serde(default = "default_bv_dx")]
    pub bv_dx: f64,
    /// Mollification indices of the BV pipeline.
    #[serde(default = "default_ns")]
    pub n: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { samples: default_samples(), check_points: default_check_points(), dx: None, bv_dx: default_bv_dx(), n: default_ns() }
    }
}

fn default_terminal_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub flux: FluxSpec,
    pub a: f64,
    pub b: f64,
    /// Absolute horizon `T`.
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Horizon as a multiple of `T*`.
    #[serde(default)]
    pub horizon_factor: Option<f64>,
    #[serde(default)]
    pub rho: f64,
    pub theorem: Theorem,
    #[serde(default)]
    pub initial_interval: Option<[f64; 2]>,
    #[serde(default)]
    pub target_interval: Option<[f64; 2]>,
    pub ubar: ProfileSpec,
    pub psi: ProfileSpec,
    /// Extra intervals reported by `metrics`.
    #[serde(default)]
    pub metric_intervals: Vec<[f64; 2]>,
    /// Index pairs into `metric_intervals` whose `T*` is reported.
    #[serde(default)]
    pub metric_pairs: Vec<[usize; 2]>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_terminal_tol")]
    pub terminal_tol: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn interval_of(v: [f64; 2], what: &str) -> Result<Interval> {
    Interval::new(v[0], v[1]).map_err(|_| Error::Invalid(format!("{what}: [{}, {}] is not an interval", v[0], v[1])))
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

impl Scenario {
    /// Parse and validate; nothing is computed and no file is read.
    pub fn parse(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Invalid(format!("unsupported schema {} (expected {SCHEMA})", self.schema)));
        }
        if self.name.trim().is_empty() {
            return Err(Error::Invalid("name must not be empty".into()));
        }
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(Error::Invalid(format!("need finite a < b, got a = {}, b = {}", self.a, self.b)));
        }
        match (self.horizon, self.horizon_factor) {
            (Some(t), None) => positive(t, "horizon")?,
            (None, Some(k)) => {
                positive(k, "horizon_factor")?;
                if k <= 1.0 {
                    return Err(Error::Invalid(format!("horizon_factor must exceed 1, got {k}")));
                }
            }
            _ => return Err(Error::Invalid("give exactly one of horizon and horizon_factor".into())),
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::Invalid(format!("rho must be finite and nonnegative, got {}", self.rho)));
        }
        if let Some(v) = self.initial_interval {
            interval_of(v, "initial_interval")?;
        }
        if let Some(v) = self.target_interval {
            interval_of(v, "target_interval")?;
        }
        for (i, v) in self.metric_intervals.iter().enumerate() {
            interval_of(*v, &format!("metric_intervals[{i}]"))?;
        }
        for p in &self.metric_pairs {
            if p.iter().any(|&i| i >= self.metric_intervals.len()) {
                return Err(Error::Invalid(format!("metric pair {p:?} points past metric_intervals")));
            }
        }
        let g = &self.grid;
        if g.samples < 2 || g.check_points < 2 {
            return Err(Error::Invalid("grid.samples and grid.check_points must be at least 2".into()));
        }
        if let Some(dx) = g.dx {
            positive(dx, "grid.dx")?;
        }
        positive(g.bv_dx, "grid.bv_dx")?;
        if g.n.is_empty() || g.n.iter().any(|&n| n == 0 || n > MAX_N) {
            return Err(Error::Invalid(format!("grid.n entries must lie in 1..={MAX_N}")));
        }
        positive(self.terminal_tol, "terminal_tol")?;
        for (what, spec) in [("ubar", &self.ubar), ("psi", &self.psi)] {
            if let ProfileSpec::Piecewise(p) = spec {
                if p.pieces.len() != p.breaks.len() + 1 {
                    return Err(Error::Invalid(format!("{what}: {} breaks need {} pieces", p.breaks.len(), p.breaks.len() + 1)));
                }
                let mut last = self.a;
                for &x in &p.breaks {
                    if !(x > last && x < self.b) {
                        return Err(Error::Invalid(format!("{what}: breaks must increase strictly inside (a, b)")));
                    }
                    last = x;
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Scenario, PathBuf)> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let s = Scenario::parse(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            Error::Invalid(m) => Error::Invalid(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((s, base))
    }

    pub fn bound_mode(&self) -> BoundMode {
        if self.theorem.one_sided() {
            BoundMode::OneSided
        } else {
            BoundMode::FullBound
        }
    }
}

/// A validated scenario with its flux and profiles built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub model: FluxModel,
    pub ubar: ProfileBV,
    pub psi: ProfileBV,
    pub initial_interval: Interval,
    pub target_interval: Interval,
    pub horizon: f64,
}

fn read_rel(base: &Path, rel: &Path) -> Result<String> {
    let p = base.join(rel);
    fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn build_profile(spec: &ProfileSpec, s: &Scenario, base: &Path, what: &str) -> Result<ProfileBV> {
    let p = match spec {
        ProfileSpec::File(rel) => crate::profile::io::parse_profile(&read_rel(base, rel)?)?,
        ProfileSpec::Inline(doc) => doc.clone().into_profile()?,
        ProfileSpec::Harmonic(h) => ProfileBV::from_c1(h.build(s.a, s.a, s.b)?),
        ProfileSpec::Piecewise(pw) => {
            let mut edges = vec![s.a];
            edges.extend(&pw.breaks);
            edges.push(s.b);
            let pieces = pw
                .pieces
                .iter()
                .zip(edges.windows(2))
                .map(|(h, w)| h.build(s.a, w[0], w[1]))
                .collect::<Result<Vec<_>>>()?;
            ProfileBV::new(pieces)?
        }
    };
    let d = p.domain();
    let tol = 1e-12 * (1.0 + s.a.abs().max(s.b.abs()));
    if (d.lo - s.a).abs() > tol || (d.hi - s.b).abs() > tol {
        return Err(Error::Invalid(format!("{what} lives on {d}, the scenario on [{}, {}]", s.a, s.b)));
    }
    Ok(p)
}

impl Resolved {
    pub fn new(scenario: Scenario, base: &Path) -> Result<Resolved> {
        scenario.validate()?;
        let model = match &scenario.flux {
            FluxSpec::Builtin(name) => FluxModel::builtin(name)?,
            FluxSpec::Table(rel) => {
                let name = rel.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
                FluxModel::from_csv_str(name, &read_rel(base, rel)?)?
            }
        };
        let ubar = build_profile(&scenario.ubar, &scenario, base, "ubar")?;
        let psi = build_profile(&scenario.psi, &scenario, base, "psi")?;
        let initial_interval = match scenario.initial_interval {
            Some(v) => interval_of(v, "initial_interval")?,
            None => default_interval(&model, ubar.image())?,
        };
        let target_interval = match scenario.target_interval {
            Some(v) => interval_of(v, "target_interval")?,
            None => default_interval(&model, psi.image())?,
        };
        let horizon = match (scenario.horizon, scenario.horizon_factor) {
            (Some(t), _) => t,
            (None, Some(k)) => {
                let (_, _, ts) = metrics::controllability_times(&model, initial_interval, target_interval, scenario.a, scenario.b)?;
                if !ts.is_finite() || ts <= 0.0 {
                    return Err(Error::Invalid(format!("horizon_factor needs a finite positive T*, got {ts}")));
                }
                k * ts
            }
            (None, None) => unreachable!("validated"),
        };
        Ok(Resolved { scenario, model, ubar, psi, initial_interval, target_interval, horizon })
    }

    pub fn load(path: &Path) -> Result<Resolved> {
        let (s, base) = Scenario::load(path)?;
        Resolved::new(s, &base)
    }

    pub fn verdict(&self) -> Result<HypothesisVerdict> {
        check_hypotheses(&HypothesisQuery {
            theorem: self.scenario.theorem,
            model: &self.model,
            ubar: &self.ubar,
            psi: &self.psi,
            initial_interval: self.initial_interval,
            target_interval: self.target_interval,
            horizon: self.horizon,
            rho: self.scenario.rho,
        })
    }

    fn c1_pair(&self) -> Result<(ProfileC1, ProfileC1)> {
        let u = self.ubar.as_c1().ok_or_else(|| Error::Invalid("ubar has jumps; use a BV theorem".into()))?;
        let p = self.psi.as_c1().ok_or_else(|| Error::Invalid("psi has jumps; use a BV theorem".into()))?;
        Ok((u, p))
    }

    fn steering_problem<'a>(&'a self, u: &'a ProfileC1, p: &'a ProfileC1) -> SteeringProblem<'a> {
        SteeringProblem {
            model: &self.model,
            ubar: u,
            psi: p,
            initial_interval: Some(self.initial_interval),
            target_interval: Some(self.target_interval),
            horizon: self.horizon,
            rho: self.scenario.rho,
            mode: self.scenario.bound_mode(),
        }
    }

    fn steering_options(&self) -> SteeringOptions {
        SteeringOptions { samples: self.scenario.grid.samples, check_points: self.scenario.grid.check_points, ..Default::default() }
    }
}

/// Process outcome; the discriminant is the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass = 0,
    ConfigError = 1,
    HypothesisFailure = 2,
    SolverFailure = 3,
    VerificationFailure = 4,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn of_error(e: &Error) -> Status {
        match e {
            Error::Feasibility(_)
            | Error::ExtensionInfeasible(_)
            | Error::OneSidedViolation(_)
            | Error::H2Violation(_)
            | Error::NotControllable(_) => Status::HypothesisFailure,
            Error::CertificateViolation(_) => Status::VerificationFailure,
            Error::UnknownFlux(_) | Error::Invalid(_) | Error::Parse(_) | Error::Io(_) => Status::ConfigError,
            _ => Status::SolverFailure,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalMetric {
    pub interval: Interval,
    pub bracket: MetricReport,
    /// `(b − a)/[|f|]`.
    #[serde(with = "crate::serde_f64")]
    pub time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairMetric {
    pub initial: usize,
    pub target: usize,
    #[serde(with = "crate::serde_f64")]
    pub t_star1: f64,
    #[serde(with = "crate::serde_f64")]
    pub t_star2: f64,
    #[serde(with = "crate::serde_f64")]
    pub t_star: f64,
    /// `T*/(b − a)`.
    #[serde(with = "crate::serde_f64")]
    pub t_star_per_length: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub schema: u32,
    pub scenario: String,
    pub flux: String,
    pub a: f64,
    pub b: f64,
    pub horizon: f64,
    pub intervals: Vec<IntervalMetric>,
    pub pairs: Vec<PairMetric>,
    #[serde(with = "crate::serde_f64")]
    pub norm_d2f: f64,
    pub argmax_d2f: Option<f64>,
    /// Minimal time of boundary controls for `ψ`; `inf` at critical states.
    #[serde(with = "crate::serde_f64")]
    pub boundary_control_time: f64,
    pub verdict: HypothesisVerdict,
}

/// Flux functionals, controllability times and hypothesis verdicts.
pub fn cmd_metrics(r: &Resolved) -> Result<MetricsReport> {
    let s = &r.scenario;
    let len = s.b - s.a;
    let (ivs, pairs): (Vec<Interval>, Vec<[usize; 2]>) = if s.metric_intervals.is_empty() {
        (vec![r.initial_interval, r.target_interval], vec![[0, 1]])
    } else {
        let ivs = s.metric_intervals.iter().map(|v| interval_of(*v, "metric interval")).collect::<Result<Vec<_>>>()?;
        (ivs, s.metric_pairs.clone())
    };
    let mut intervals = Vec::with_capacity(ivs.len());
    for iv in ivs {
        let clipped = iv.intersect(&r.model.states()).ok_or_else(|| Error::Domain(format!("{iv} misses the states")))?;
        let bracket = metrics::bracket_norm(&r.model, clipped, 1e-10)?;
        let time = if bracket.value > 0.0 { len / bracket.value } else { f64::INFINITY };
        intervals.push(IntervalMetric { interval: clipped, bracket, time });
    }
    let pairs = pairs
        .iter()
        .map(|&[i, j]| {
            let (t1, t2) = (intervals[i].time, intervals[j].time);
            PairMetric { initial: i, target: j, t_star1: t1, t_star2: t2, t_star: t1 + t2, t_star_per_length: (t1 + t2) / len }
        })
        .collect();
    let states = r.model.states();
    let (norm_d2f, argmax_d2f) = match r.model.argsup_on(Derivative::Second, states) {
        Ok((x, v)) if v.is_finite() => (v, Some(x)),
        _ => (r.model.sup_norm_on(Derivative::Second, states).unwrap_or(f64::INFINITY), None),
    };
    let psi = &r.psi;
    Ok(MetricsReport {
        schema: SCHEMA,
        scenario: s.name.clone(),
        flux: r.model.name().to_string(),
        a: s.a,
        b: s.b,
        horizon: r.horizon,
        intervals,
        pairs,
        norm_d2f,
        argmax_d2f,
        boundary_control_time: metrics::boundary_control_time(&r.model, |x| psi.value(x), s.a, s.b),
        verdict: r.verdict()?,
    })
}

/// A claimed bound paired with what was measured.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    #[serde(with = "crate::serde_f64")]
    pub claimed: f64,
    #[serde(with = "crate::serde_f64")]
    pub measured: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn le(name: &str, measured: f64, claimed: f64) -> BoundCheck {
        BoundCheck { name: name.into(), claimed, measured, pass: measured <= claimed * (1.0 + 1e-9) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FvCheck {
    pub dx: f64,
    pub terminal_l1: f64,
    pub tv_increase: f64,
    pub tv_tolerance: f64,
    pub entropy_violation: f64,
    pub steps: usize,
    pub cfl_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub scenario: String,
    pub theorem: Theorem,
    pub flux: String,
    pub horizon: f64,
    pub status: Status,
    pub error: Option<String>,
    pub verdict: HypothesisVerdict,
    pub forced: bool,
    #[serde(with = "crate::serde_f64")]
    pub t_star: f64,
    /// Minimal time of boundary controls for `ψ`.
    #[serde(with = "crate::serde_f64")]
    pub boundary_control_time: f64,
    pub plan: Option<CompositionPlan>,
    pub bounds: Vec<BoundCheck>,
    pub classical: Option<SteeringOutcome>,
    pub fv: Option<FvCheck>,
    pub bv: Option<BvTable>,
}

/// A report plus the files to write next to it (relative path, contents).
pub struct CommandOutput<R> {
    pub report: R,
    pub files: Vec<(String, String)>,
}

impl<R> CommandOutput<R> {
    fn bare(report: R) -> Self {
        CommandOutput { report, files: Vec::new() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunFlags {
    /// Run even when the hypotheses fail.
    pub force: bool,
    /// Overrides `grid.dx` (steer) or `grid.bv_dx` (bv).
    pub dx: Option<f64>,
    /// Overrides `grid.n`.
    pub n: Option<Vec<usize>>,
}

fn empty_report(r: &Resolved, command: &str, verdict: HypothesisVerdict, forced: bool) -> RunReport {
    let s = &r.scenario;
    let t_star = metrics::controllability_times(&r.model, r.initial_interval, r.target_interval, s.a, s.b)
        .map(|t| t.2)
        .unwrap_or(f64::NAN);
    let psi = &r.psi;
    RunReport {
        schema: SCHEMA,
        command: command.into(),
        scenario: s.name.clone(),
        theorem: s.theorem,
        flux: r.model.name().to_string(),
        horizon: r.horizon,
        status: Status::Pass,
        error: None,
        verdict,
        forced,
        t_star,
        boundary_control_time: metrics::boundary_control_time(&r.model, |x| psi.value(x), s.a, s.b),
        plan: None,
        bounds: Vec::new(),
        classical: None,
        fv: None,
        bv: None,
    }
}

fn fail(mut report: RunReport, e: Error) -> CommandOutput<RunReport> {
    report.status = Status::of_error(&e);
    report.error = Some(e.to_string());
    CommandOutput::bare(report)
}

fn settle(report: &mut RunReport) {
    if report.status == Status::Pass && report.bounds.iter().any(|b| !b.pass) {
        report.status = Status::VerificationFailure;
        let names: Vec<&str> = report.bounds.iter().filter(|b| !b.pass).map(|b| b.name.as_str()).collect();
        report.error = Some(format!("failed checks: {}", names.join(", ")));
    }
}

fn gate(r: &Resolved, command: &str, flags: &RunFlags) -> Result<std::result::Result<RunReport, CommandOutput<RunReport>>> {
    let verdict = r.verdict()?;
    let report = empty_report(r, command, verdict.clone(), flags.force && !verdict.holds);
    if !verdict.holds && !flags.force {
        let list: Vec<String> = verdict.violated_conditions.iter().map(|c| format!("{}: {} {} {}", c.label, c.lhs, c.relation, c.rhs)).collect();
        return Ok(Err(fail(report, Error::Feasibility(format!("hypotheses fail: {}", list.join("; "))))));
    }
    Ok(Ok(report))
}

/// Synthesize, solve and verify; BV theorems go through the mollification pipeline.
pub fn cmd_steer(r: &Resolved, flags: &RunFlags) -> Result<CommandOutput<RunReport>> {
    let mut report = match gate(r, "steer", flags)? {
        Ok(rep) => rep,
        Err(out) => return Ok(out),
    };
    if r.scenario.theorem.is_bv() {
        let n = flags.n.clone().unwrap_or_else(|| r.scenario.grid.n.clone());
        let finest = *n.iter().max().unwrap_or(&1);
        let dx = flags.dx.unwrap_or(r.scenario.grid.bv_dx);
        return Ok(bv_into(r, report, &[finest], dx));
    }
    let (u, p) = match r.c1_pair() {
        Ok(v) => v,
        Err(e) => return Ok(fail(report, e)),
    };
    let (control, plan) = match compose_full_control(&r.steering_problem(&u, &p)) {
        Ok(v) => v,
        Err(e) => return Ok(fail(report, e)),
    };
    report.plan = Some(plan.clone());
    let mut files = vec![("control.json".to_string(), control.to_json()?)];
    let run = match run_classical(&plan, &p, &r.steering_options()) {
        Ok(v) => v,
        Err(e) => {
            let mut out = fail(report, e);
            out.files = files;
            return Ok(out);
        }
    };
    let o = &run.outcome;
    let tol = r.scenario.terminal_tol;
    report.bounds = vec![
        BoundCheck::le("terminal sup error", o.terminal_error, tol),
        BoundCheck::le("initial plateau sup error", o.plateau_error_a, tol),
        BoundCheck::le("target plateau sup error", o.plateau_error_c, tol),
        BoundCheck::le("|h| + TV(h)", o.measured_h, plan.claimed_h),
        BoundCheck::le("|u(t)| + TV(u(t))", o.measured_u, plan.claimed_u),
    ];
    let mut csv = String::from("t,x,u\n");
    for (t, s) in &run.snapshots {
        for (x, v) in s {
            csv.push_str(&format!("{t:.12e},{x:.12e},{v:.12e}\n"));
        }
    }
    files.push(("snapshots/classical.csv".into(), csv));
    files.push(("snapshots/traces.csv".into(), traces_csv(&run.traces)));
    report.classical = Some(run.outcome.clone());

    if let Some(dx) = flags.dx.or(r.scenario.grid.dx) {
        match run_fv(&plan, None, &r.psi, dx, r.scenario.grid.samples) {
            Ok(fv) => {
                let sol = &fv.solution;
                report.fv = Some(FvCheck {
                    dx,
                    terminal_l1: fv.terminal_l1,
                    tv_increase: sol.tv_increase(),
                    tv_tolerance: sol.tv_tolerance(),
                    entropy_violation: sol.entropy_violation(),
                    steps: sol.meta().steps,
                    cfl_max: sol.meta().cfl_max,
                });
                report.bounds.push(BoundCheck::le("FV flux-step TV increase", sol.tv_increase(), sol.tv_tolerance()));
                files.push(("snapshots/fv.csv".into(), sol.snapshot_csv()));
                files.push(("fv_meta.json".into(), meta_json(sol.meta())?));
            }
            Err(e) => {
                let mut out = fail(report, e);
                out.files = files;
                return Ok(out);
            }
        }
    }
    settle(&mut report);
    Ok(CommandOutput { report, files })
}

fn traces_csv(traces: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("t,u_a,u_b\n");
    for (t, ua, ub) in traces {
        out.push_str(&format!("{t:.12e},{ua:.12e},{ub:.12e}\n"));
    }
    out
}

fn meta_json(m: &FvMeta) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        dx: f64,
        dt_history: &'a [f64],
        #[serde(rename = "CFL")]
        cfl: f64,
        cfl_max: f64,
        window: Interval,
    }
    Ok(serde_json::to_string(&Doc { dx: m.dx, dt_history: &m.dt_history, cfl: m.cfl, cfl_max: m.cfl_max, window: m.window })?)
}

fn bv_into(r: &Resolved, mut report: RunReport, ns: &[usize], dx: f64) -> CommandOutput<RunReport> {
    let s = &r.scenario;
    let problem = BvProblem {
        model: &r.model,
        ubar: &r.ubar,
        psi: &r.psi,
        initial_interval: Some(r.initial_interval),
        target_interval: Some(r.target_interval),
        horizon: r.horizon,
        rho: s.rho,
    };
    let mut table = match run_bv_pipeline(&problem, ns, dx) {
        Ok(t) => t,
        Err(e) => return fail(report, e),
    };
    let mut files = Vec::new();
    if let Some(art) = table.finest.take() {
        if let Ok(j) = art.control.to_json() {
            files.push(("control.json".into(), j));
        }
        files.push(("snapshots/fv.csv".into(), art.snapshot_csv));
        if let Ok(j) = meta_json(&art.meta) {
            files.push(("fv_meta.json".into(), j));
        }
    }
    for row in &table.rows {
        let n = row.n;
        report.bounds.push(BoundCheck::le(&format!("n={n}: terminal L1 error"), row.terminal_l1, row.allowed_l1));
        report.bounds.push(BoundCheck::le(&format!("n={n}: |h| + TV(h)"), row.measured_h, row.claimed_h));
        report.bounds.push(BoundCheck::le(&format!("n={n}: |u(t)| + TV(u(t))"), row.measured_u, row.claimed_u));
        report.bounds.push(BoundCheck::le(&format!("n={n}: FV flux-step TV increase"), row.tv_increase, row.tv_tolerance));
    }
    if table.rows.len() > 1 {
        let spread = |f: fn(&crate::pipeline::BvRow) -> f64| {
            let (lo, hi) = table.rows.iter().map(f).fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(v), h.max(v)));
            hi / lo
        };
        report.bounds.push(BoundCheck::le("claimed control bound spread over n", spread(|r| r.claimed_h), UNIFORM_SPREAD));
        report.bounds.push(BoundCheck::le("claimed state bound spread over n", spread(|r| r.claimed_u), UNIFORM_SPREAD));
        report.bounds.push(BoundCheck::le("measured state bound spread over n", spread(|r| r.measured_u), UNIFORM_SPREAD));
        for w in table.rows.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            // at least linear decay in the kernel radius
            let allowed = DECAY_SLACK * p.mollification_error * q.kernel_radius / p.kernel_radius;
            report.bounds.push(BoundCheck::le(&format!("mollification error n={} vs n={}", q.n, p.n), q.mollification_error, allowed));
        }
        for w in table.rows.windows(3) {
            if let (Some(d1), Some(d2)) = (w[1].distance_to_previous, w[2].distance_to_previous) {
                report.bounds.push(BoundCheck::le(&format!("terminal distance n={}..{} vs n={}..{}", w[1].n, w[2].n, w[0].n, w[1].n), d2, d1));
            }
        }
    }
    report.bv = Some(table);
    settle(&mut report);
    CommandOutput { report, files }
}

/// Largest max/min ratio over `n` accepted as a uniform bound.
pub const UNIFORM_SPREAD: f64 = 1.5;
/// Factor over exact proportionality accepted in the mollification decay.
pub const DECAY_SLACK: f64 = 1.1;

/// Mollification convergence table for BV data.
pub fn cmd_bv(r: &Resolved, flags: &RunFlags) -> Result<CommandOutput<RunReport>> {
    let report = match gate(r, "bv", flags)? {
        Ok(rep) => rep,
        Err(out) => return Ok(out),
    };
    let ns = flags.n.clone().unwrap_or_else(|| r.scenario.grid.n.clone());
    if ns.is_empty() || ns.iter().any(|&n| n == 0 || n > MAX_N) {
        return Err(Error::Invalid(format!("--n entries must lie in 1..={MAX_N}")));
    }
    let dx = flags.dx.unwrap_or(r.scenario.grid.bv_dx);
    positive(dx, "dx")?;
    Ok(bv_into(r, report, &ns, dx))
}

/// Characteristic fans and boundary traces of the classical run.
pub fn cmd_trace(r: &Resolved, flags: &RunFlags) -> Result<CommandOutput<RunReport>> {
    let mut report = match gate(r, "trace", flags)? {
        Ok(rep) => rep,
        Err(out) => return Ok(out),
    };
    let (u, p) = match r.c1_pair() {
        Ok(v) => v,
        Err(e) => return Ok(fail(report, e)),
    };
    let (_, plan) = match compose_full_control(&r.steering_problem(&u, &p)) {
        Ok(v) => v,
        Err(e) => return Ok(fail(report, e)),
    };
    report.plan = Some(plan.clone());
    let run = match run_classical(&plan, &p, &r.steering_options()) {
        Ok(v) => v,
        Err(e) => return Ok(fail(report, e)),
    };
    let mut files = vec![
        ("snapshots/traces.csv".to_string(), traces_csv(&run.traces)),
        ("snapshots/fan_initial.csv".to_string(), run.leg_a.fan_csv()),
        ("snapshots/fan_target.csv".to_string(), run.leg_c.fan_csv()),
    ];
    // one-sided traces straight from the leg solutions
    let a = leg_traces(&run.leg_a)?;
    files.push(("snapshots/traces_initial_leg.csv".into(), traces_csv(&a)));
    report.bounds = vec![BoundCheck::le("terminal sup error", run.outcome.terminal_error, r.scenario.terminal_tol)];
    report.classical = Some(run.outcome);
    settle(&mut report);
    Ok(CommandOutput { report, files })
}

/// Write `files` under `dir`, each through a temporary file and a rename.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    for (rel, contents) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write_atomic(&path, contents)?;
    }
    Ok(())
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos());
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.{stamp}.tmp", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(format!("{}: {e}", path.display()))
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}
