//! Classical solutions of `u_t + f(u)_x = h(t)` by forward characteristics.
//!
//! Along the line from `x0` the state is `z0(t) = ū(x0) + H(t)` and the slope
//! obeys `1/z1(t) = 1/ū'(x0) + ∫₀ᵗ f''(z0)`. We store `D = ∂x/∂x0 = 1 + ū'(x0)·F`
//! instead of `1/z1` so that flat feet need no special case.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::control::{BoundMode, ControlSignal, SynthesisCertificate};
use crate::flux::{Derivative, FluxModel, Shape};
use crate::interval::Interval;
use crate::profile::{Knot, ProfileC1};
use crate::quadrature::integrate_adaptive_pair;
use crate::{Error, Result};

/// Options for [`solve_classical`].
#[derive(Debug, Clone)]
pub struct ClassicalOptions {
    /// Times at which the fan is retained (0 and the horizon are always added).
    pub times: Vec<f64>,
    /// Initial spacing of the uniform foot grid.
    pub fan_spacing: f64,
    /// Target gap between neighbouring characteristics over `[a, b]`.
    pub max_gap: f64,
    pub max_feet: usize,
    /// Absolute quadrature tolerance per characteristic.
    pub tol: f64,
    pub blowup: f64,
    /// Overrides the automatic window.
    pub window: Option<Interval>,
    /// Internal steps per horizon used for blow-up monitoring.
    pub monitor_steps: usize,
}

impl ClassicalOptions {
    pub fn for_span(span: Interval) -> Self {
        ClassicalOptions {
            times: Vec::new(),
            fan_spacing: span.width() / 200.0,
            max_gap: span.width() / 400.0,
            max_feet: 400_000,
            tol: 1e-10,
            blowup: 1e10,
            window: None,
            monitor_steps: 400,
        }
    }

    /// `n` equally spaced retained times on `[0, horizon]`.
    pub fn with_samples(mut self, horizon: f64, n: usize) -> Self {
        let n = n.max(1);
        self.times.extend((0..=n).map(|i| horizon * i as f64 / n as f64));
        self
    }
}

#[derive(Debug, Clone)]
struct Char {
    x0: f64,
    u0: f64,
    du0: f64,
    // position and ∫f''(z0) at each retained time
    x: Vec<f64>,
    big_f: Vec<f64>,
}

impl Char {
    fn d(&self, k: usize) -> f64 {
        1.0 + self.du0 * self.big_f[k]
    }
}

/// A fan of characteristics with reconstruction of `u(t, ·)`.
#[derive(Debug, Clone)]
pub struct ClassicalSolution {
    model: FluxModel,
    init: ProfileC1,
    control: ControlSignal,
    horizon: f64,
    span: Interval,
    window: Interval,
    times: Vec<f64>,
    nodes: Vec<f64>,
    tol: f64,
    fan: Vec<Char>,
}

/// Time grid for integration: retained times, control breakpoints, monitor steps.
fn build_nodes(times: &[f64], control: &ControlSignal, horizon: f64, steps: usize) -> Vec<f64> {
    let mut nodes: Vec<f64> = times.to_vec();
    nodes.extend(control.breakpoints().into_iter().filter(|&t| t > 0.0 && t < horizon));
    let steps = steps.max(1);
    nodes.extend((0..=steps).map(|i| horizon * i as f64 / steps as f64));
    nodes.sort_by(f64::total_cmp);
    let eps = 1e-14 * horizon.max(1.0);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= eps);
    nodes
}

struct Tracer<'a> {
    model: &'a FluxModel,
    control: &'a ControlSignal,
    horizon: f64,
    tol: f64,
}

impl Tracer<'_> {
    /// `(∫f'(z0), ∫f''(z0))` over `[t0, t1]` for initial state `u0`.
    fn step(&self, u0: f64, t0: f64, t1: f64) -> (f64, f64) {
        let tol = self.tol * ((t1 - t0) / self.horizon).max(1e-6);
        let [dx, df] = integrate_adaptive_pair(
            |t| {
                let z = u0 + self.control.primitive(t);
                (self.model.df(z), self.model.d2f(z))
            },
            t0,
            t1,
            tol,
        );
        (dx, df)
    }
}

/// Trace one characteristic, recording at node indices flagged in `keep`.
fn trace_char(tr: &Tracer, nodes: &[f64], keep: &[bool], x0: f64, u0: f64, du0: f64, blowup: f64) -> std::result::Result<Char, (f64, f64)> {
    let floor = du0.abs() / blowup;
    let mut c = Char { x0, u0, du0, x: Vec::new(), big_f: Vec::new() };
    let (mut x, mut big_f) = (x0, 0.0);
    if keep[0] {
        c.x.push(x);
        c.big_f.push(big_f);
    }
    for i in 1..nodes.len() {
        let (dx, df) = tr.step(u0, nodes[i - 1], nodes[i]);
        let d = 1.0 + du0 * (big_f + df);
        if du0 != 0.0 && d <= floor {
            // locate the first time |z1| reaches the threshold inside this step
            let (mut lo, mut hi) = (nodes[i - 1], nodes[i]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let (_, g) = tr.step(u0, nodes[i - 1], mid);
                if 1.0 + du0 * (big_f + g) <= floor {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Err((hi, x0));
        }
        x += dx;
        big_f += df;
        if keep[i] {
            c.x.push(x);
            c.big_f.push(big_f);
        }
    }
    Ok(c)
}

/// Window covering every backward domain of dependence of `span` up to `horizon`.
fn auto_window(model: &FluxModel, init: &ProfileC1, control: &ControlSignal, span: Interval, horizon: f64) -> Result<Interval> {
    let hs = control.primitive_sup();
    let img = init.image();
    let mut reach = Interval::new(img.lo - hs - 1e-12, img.hi + hs + 1e-12)?;
    if let Some(r) = reach.intersect(&model.domain()) {
        reach = r;
    }
    let speed = if reach.width() > 0.0 {
        model.sup_norm_on(Derivative::First, reach)?
    } else {
        model.df(reach.lo).abs()
    };
    let w = speed * horizon * 1.02 + 0.05 * span.width() + 1e-9;
    Interval::new(span.lo - w, span.hi + w)
}

/// Solve by characteristics on `[0, horizon]` for data `init` (constant outside its knots).
pub fn solve_classical(
    model: &FluxModel,
    init: &ProfileC1,
    control: &ControlSignal,
    horizon: f64,
    span: Interval,
    opts: &ClassicalOptions,
) -> Result<ClassicalSolution> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Invalid(format!("horizon must be positive, got {horizon}")));
    }
    if control.duration() + 1e-12 * horizon < horizon {
        return Err(Error::Invalid(format!(
            "control covers [0, {}] but the horizon is {horizon}",
            control.duration()
        )));
    }
    if !(opts.fan_spacing > 0.0 && opts.max_gap > 0.0) {
        return Err(Error::Invalid("fan spacing and gap target must be positive".into()));
    }
    let window = match opts.window {
        Some(w) => w,
        None => auto_window(model, init, control, span, horizon)?,
    };
    if !window.contains_interval(&span) {
        return Err(Error::WindowTooSmall(format!("window {window} does not contain {span}")));
    }

    let mut times: Vec<f64> = opts.times.iter().copied().filter(|t| (0.0..=horizon).contains(t)).collect();
    times.push(0.0);
    times.push(horizon);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * horizon.max(1.0));
    let nodes = build_nodes(&times, control, horizon, opts.monitor_steps);
    // snap retained times onto the nodes they were merged with
    let mut keep = vec![false; nodes.len()];
    let mut times_on_nodes = Vec::with_capacity(times.len());
    for &t in &times {
        let i = nodes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if !keep[i] {
            keep[i] = true;
            times_on_nodes.push(nodes[i]);
        }
    }
    let times = times_on_nodes;

    let tr = Tracer { model, control, horizon, tol: opts.tol };
    let n = ((window.width() / opts.fan_spacing).ceil() as usize).max(8);
    let mut feet: Vec<f64> = window.linspace(n + 1);
    feet.extend(init.knots().iter().map(|k| k.x).filter(|&x| window.contains(x)));
    feet.sort_by(f64::total_cmp);
    feet.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * window.width());

    let launch = |feet: &[f64]| -> Result<Vec<Char>> {
        let out: Vec<std::result::Result<Char, (f64, f64)>> = feet
            .par_iter()
            .map(|&x0| trace_char(&tr, &nodes, &keep, x0, init.value(x0), init.deriv(x0), opts.blowup))
            .collect();
        let mut first: Option<(f64, f64)> = None;
        let mut chars = Vec::with_capacity(out.len());
        for r in out {
            match r {
                Ok(c) => chars.push(c),
                Err((t, x0)) => {
                    if first.map_or(true, |(t1, _)| t < t1) {
                        first = Some((t, x0));
                    }
                }
            }
        }
        match first {
            Some((t, x0)) => Err(Error::BlowUp { t, x0 }),
            None => Ok(chars),
        }
    };

    let mut fan = launch(&feet)?;
    // refine where neighbours drift apart over [a, b]
    for _ in 0..12 {
        let mut fresh = Vec::new();
        for w in fan.windows(2) {
            let wide = (0..times.len()).any(|k| {
                let (l, r) = (w[0].x[k], w[1].x[k]);
                r - l > opts.max_gap && r >= span.lo && l <= span.hi
            });
            if wide {
                fresh.push(0.5 * (w[0].x0 + w[1].x0));
            }
        }
        if fresh.is_empty() {
            break;
        }
        if fan.len() + fresh.len() > opts.max_feet {
            return Err(Error::Invalid(format!(
                "fan refinement exceeds {} characteristics; raise max_feet or the gap target",
                opts.max_feet
            )));
        }
        fan.extend(launch(&fresh)?);
        fan.sort_by(|a, b| a.x0.total_cmp(&b.x0));
    }

    let sol = ClassicalSolution {
        model: model.clone(),
        init: init.clone(),
        control: control.clone(),
        horizon,
        span,
        window,
        times,
        nodes,
        tol: opts.tol,
        fan,
    };
    sol.check_cover()?;
    sol.check_order()?;
    Ok(sol)
}

impl ClassicalSolution {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn span(&self) -> Interval {
        self.span
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn control(&self) -> &ControlSignal {
        &self.control
    }

    pub fn initial(&self) -> &ProfileC1 {
        &self.init
    }

    /// Retained times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fan_size(&self) -> usize {
        self.fan.len()
    }

    pub fn feet(&self) -> Vec<f64> {
        self.fan.iter().map(|c| c.x0).collect()
    }

    fn check_cover(&self) -> Result<()> {
        let (first, last) = (&self.fan[0], &self.fan[self.fan.len() - 1]);
        for (k, &t) in self.times.iter().enumerate() {
            if first.x[k] > self.span.lo || last.x[k] < self.span.hi {
                return Err(Error::WindowTooSmall(format!(
                    "at t = {t} the fan covers [{}, {}] which misses {}",
                    first.x[k], last.x[k], self.span
                )));
            }
        }
        Ok(())
    }

    fn check_order(&self) -> Result<()> {
        for (k, &t) in self.times.iter().enumerate() {
            if let Some(w) = self.fan.windows(2).find(|w| w[1].x[k] <= w[0].x[k]) {
                return Err(Error::BlowUp { t, x0: w[0].x0 });
            }
        }
        Ok(())
    }

    /// Smallest gap between neighbouring characteristics over all retained times.
    pub fn min_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for k in 0..self.times.len() {
            for w in self.fan.windows(2) {
                g = g.min(w[1].x[k] - w[0].x[k]);
            }
        }
        g
    }

    /// Largest gap over `[a, b]` at any retained time.
    pub fn max_gap(&self) -> f64 {
        let mut g: f64 = 0.0;
        for k in 0..self.times.len() {
            for w in self.fan.windows(2) {
                if w[1].x[k] >= self.span.lo && w[0].x[k] <= self.span.hi {
                    g = g.max(w[1].x[k] - w[0].x[k]);
                }
            }
        }
        g
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        let eps = 1e-12 * self.horizon.max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= eps)
    }

    fn index(&self, t: f64) -> Result<usize> {
        self.time_index(t)
            .ok_or_else(|| Error::Invalid(format!("t = {t} is not a retained time; use eval_exact")))
    }

    /// Foot point of the characteristic through `x` at retained slot `k`, with `∂x/∂x0` there.
    fn foot(&self, k: usize, x: f64) -> Result<(f64, f64)> {
        let n = self.fan.len();
        if x < self.fan[0].x[k] || x > self.fan[n - 1].x[k] {
            return Err(Error::WindowTooSmall(format!("x = {x} lies outside the fan at t = {}", self.times[k])));
        }
        let j = self.fan.partition_point(|c| c.x[k] <= x).clamp(1, n - 1) - 1;
        let (l, r) = (&self.fan[j], &self.fan[j + 1]);
        let h = r.x0 - l.x0;
        let (y0, y1, m0, m1) = (l.x[k], r.x[k], l.d(k) * h, r.d(k) * h);
        let eval = |s: f64| {
            let (s2, s3) = (s * s, s * s * s);
            let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
            let dv = (6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1;
            (v, dv)
        };
        // safeguarded Newton on the bracket [0, 1]
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut s = if y1 > y0 { ((x - y0) / (y1 - y0)).clamp(0.0, 1.0) } else { 0.5 };
        for _ in 0..80 {
            let (v, dv) = eval(s);
            let g = v - x;
            if g.abs() <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
            if g > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let next = if dv > 0.0 { s - g / dv } else { f64::NAN };
            s = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-16 {
                break;
            }
        }
        let dxdx0 = eval(s).1 / h;
        Ok((l.x0 + s * h, dxdx0))
    }

    /// `u(t, x)` at a retained time.
    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        let k = self.index(t)?;
        let (x0, _) = self.foot(k, x)?;
        Ok(self.init.value(x0) + self.control.primitive(self.times[k]))
    }

    /// `(u, u_x)` at a retained time.
    pub fn eval_with_slope(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let k = self.index(t)?;
        let (x0, d) = self.foot(k, x)?;
        Ok((self.init.value(x0) + self.control.primitive(self.times[k]), self.init.deriv(x0) / d))
    }

    /// Position and `∂x/∂x0` of the characteristic from `x0` at any `t`, integrated from scratch.
    pub fn trajectory(&self, x0: f64, t: f64) -> (f64, f64) {
        let tr = Tracer { model: &self.model, control: &self.control, horizon: self.horizon, tol: self.tol * 1e-2 };
        let u0 = self.init.value(x0);
        let (mut x, mut big_f, mut prev) = (x0, 0.0, 0.0);
        for &node in self.nodes.iter().filter(|&&s| s > 0.0 && s < t).chain(std::iter::once(&t)) {
            if node <= prev {
                continue;
            }
            let (dx, df) = tr.step(u0, prev, node);
            x += dx;
            big_f += df;
            prev = node;
        }
        (x, 1.0 + self.init.deriv(x0) * big_f)
    }

    /// `u(t, x)` at any `t`, with the foot point polished by Newton on true trajectories.
    pub fn eval_exact(&self, t: f64, x: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Invalid(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        // start from the nearest retained slot at or before t
        let k = self.times.partition_point(|&s| s <= t).max(1) - 1;
        let mut x0 = match self.foot(k, x) {
            Ok((x0, _)) if (self.times[k] - t).abs() <= 1e-12 * self.horizon.max(1.0) => x0,
            _ => {
                // rough guess by backward tracing with frozen speed
                let u = self.init.value(x) + self.control.primitive(t);
                x - self.model.df(u) * t
            }
        };
        for _ in 0..60 {
            let (xt, d) = self.trajectory(x0, t);
            let g = xt - x;
            if g.abs() <= 1e-13 * (1.0 + x.abs()) {
                break;
            }
            if !(d > 0.0) {
                return Err(Error::BlowUp { t, x0 });
            }
            x0 -= g / d;
        }
        Ok(self.init.value(x0) + self.control.primitive(t))
    }

    /// `u(t, ·)` at `n + 1` equispaced points of `[a, b]`.
    pub fn sample(&self, t: f64, n: usize) -> Result<Vec<(f64, f64)>> {
        self.span.linspace(n + 1).into_iter().map(|x| Ok((x, self.eval(t, x)?))).collect()
    }

    /// `u(t, a⁺)` or `u(t, b⁻)` at every retained time.
    pub fn trace(&self, side: Side) -> Result<Vec<(f64, f64)>> {
        let x = match side {
            Side::Left => self.span.lo,
            Side::Right => self.span.hi,
        };
        self.times.iter().map(|&t| Ok((t, self.eval(t, x)?))).collect()
    }

    /// `u(t, ·)` at a retained time as a C¹ Hermite profile with knots on the fan.
    pub fn snapshot_profile(&self, t: f64) -> Result<ProfileC1> {
        let k = self.index(t)?;
        let ht = self.control.primitive(self.times[k]);
        let knots = self
            .fan
            .iter()
            .map(|c| Knot { x: c.x[k], u: c.u0 + ht, du: c.du0 / c.d(k) })
            .collect();
        ProfileC1::new(knots)
    }

    /// Feet of the characteristics that lie in `[a, b]` at retained time `t`.
    pub fn feet_landing_in_span(&self, t: f64) -> Result<Interval> {
        let k = self.index(t)?;
        let lo = self.foot(k, self.span.lo)?.0;
        let hi = self.foot(k, self.span.hi)?.0;
        Interval::new(lo, hi.max(lo + f64::EPSILON * (1.0 + lo.abs())))
    }

    /// Sup over `[a, b]` of `|u(t, ·) − g|` on `n + 1` points, with exact foot polishing.
    pub fn terminal_error<G: Fn(f64) -> f64 + Sync>(&self, t: f64, g: G, n: usize) -> Result<f64> {
        let xs = self.span.linspace(n + 1);
        let errs: Vec<Result<f64>> = xs.par_iter().map(|&x| Ok((self.eval_exact(t, x)? - g(x)).abs())).collect();
        let mut worst: f64 = 0.0;
        for e in errs {
            worst = worst.max(e?);
        }
        Ok(worst)
    }

    /// `max_x |u(t,x)|` and `TV(u(t,·))` over the fan restricted to `[a, b]`, at a retained time.
    pub fn sup_and_tv(&self, t: f64, n: usize) -> Result<(f64, f64)> {
        let samples = self.sample(t, n)?;
        let sup = samples.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
        let tv = samples.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum();
        Ok((sup, tv))
    }

    /// `min 1/|z1|` over the fan and the retained times up to `t_max`.
    pub fn min_inverse_slope(&self, t_max: f64) -> f64 {
        let mut m = f64::INFINITY;
        for (k, &t) in self.times.iter().enumerate() {
            if t > t_max + 1e-12 {
                break;
            }
            for c in &self.fan {
                if c.du0 != 0.0 {
                    m = m.min((c.d(k) / c.du0).abs());
                }
            }
        }
        m
    }

    /// CSV `t,x,u` with `n + 1` points of `[a, b]` per retained time in `times`.
    pub fn snapshot_csv(&self, times: &[f64], n: usize) -> Result<String> {
        let mut out = String::from("t,x,u\n");
        for &t in times {
            for (x, u) in self.sample(t, n)? {
                let _ = writeln!(out, "{t:.12e},{x:.12e},{u:.12e}");
            }
        }
        Ok(out)
    }

    /// CSV `x0,t,x,z0,z1` for every characteristic and retained time.
    pub fn fan_csv(&self) -> String {
        let mut out = String::from("x0,t,x,z0,z1\n");
        for c in &self.fan {
            for (k, &t) in self.times.iter().enumerate() {
                let z0 = c.u0 + self.control.primitive(t);
                let z1 = c.du0 / c.d(k);
                let _ = writeln!(out, "{:.12e},{t:.12e},{:.12e},{z0:.12e},{z1:.12e}", c.x0, c.x[k]);
            }
        }
        out
    }

    /// Riccati state at retained slot for a foot in the fan.
    pub fn fan_state(&self, j: usize, t: f64) -> Result<(f64, f64, f64, f64)> {
        let k = self.index(t)?;
        let c = self.fan.get(j).ok_or_else(|| Error::Invalid(format!("no characteristic {j}")))?;
        Ok((c.x0, c.x[k], c.u0 + self.control.primitive(t), c.du0 / c.d(k)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Outcome of comparing the fan against the certified Riccati floor.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BlowupReport {
    pub mode: BoundMode,
    /// Certified lower bound on `1/|z1|` (full mode) or 0.
    pub floor: f64,
    /// Measured `min 1/|z1|` up to `T₁`.
    pub measured: f64,
    /// Largest one-sided excess `z1 − max(0, ū')` (convex) or mirrored; ≤ 0 when it holds.
    pub one_sided_excess: f64,
    pub margin: f64,
}

/// Check the fan against the certificate's no-blow-up bound up to `T₁`.
pub fn verify_no_blowup_bound(sol: &ClassicalSolution, cert: &SynthesisCertificate) -> Result<BlowupReport> {
    let t1 = cert.t1.min(sol.horizon);
    let measured = sol.min_inverse_slope(t1);
    let convex = sol.model.shape() == Shape::Convex;
    let mut excess = f64::NEG_INFINITY;
    for (k, &t) in sol.times.iter().enumerate() {
        if t > t1 + 1e-12 {
            break;
        }
        for c in &sol.fan {
            let z1 = c.du0 / c.d(k);
            let e = if convex { z1 - c.du0.max(0.0) } else { c.du0.min(0.0) - z1 };
            excess = excess.max(e);
        }
    }
    // quadrature noise relative to the slope scale
    let slack = 1e-9 * (1.0 + sol.init.deriv_sup());
    let report = match cert.mode {
        BoundMode::FullBound => BlowupReport {
            mode: cert.mode,
            floor: cert.riccati_floor,
            measured,
            one_sided_excess: excess,
            margin: measured - cert.riccati_floor,
        },
        BoundMode::OneSided => BlowupReport {
            mode: cert.mode,
            floor: 0.0,
            measured,
            one_sided_excess: excess,
            margin: -excess,
        },
    };
    if report.margin < -slack {
        return Err(Error::CertificateViolation(format!(
            "Riccati bound fails: floor {}, measured {}, one-sided excess {}",
            report.floor, report.measured, report.one_sided_excess
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn opts(h: f64) -> ClassicalOptions {
        ClassicalOptions::for_span(span()).with_samples(h, 10)
    }

    #[test]
    fn burgers_rarefaction_ramp() {
        let m = FluxModel::builtin("burgers").unwrap();
        let init = ProfileC1::linear(-2.0, 1.0, -2.0, 3.0).unwrap();
        let h = ControlSignal::zero(1.0).unwrap();
        let mut o = opts(1.0);
        o.window = Some(Interval::new(-1.0, 2.0).unwrap());
        let sol = solve_classical(&m, &init, &h, 1.0, span(), &o).unwrap();
        for &x in &[0.0, 0.3, 0.77, 1.0] {
            let (u, ux) = sol.eval_with_slope(1.0, x).unwrap();
            assert!((u - x / 2.0).abs() < 1e-10, "{u}");
            assert!((ux - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn burgers_compression_blows_up_at_one() {
        let m = FluxModel::builtin("burgers").unwrap();
        let init = ProfileC1::linear(3.0, -1.0, -3.0, 3.0).unwrap();
        let h = ControlSignal::zero(2.0).unwrap();
        let mut o = opts(2.0);
        o.window = Some(Interval::new(-1.0, 2.0).unwrap());
        match solve_classical(&m, &init, &h, 2.0, span(), &o) {
            Err(Error::BlowUp { t, .. }) => assert!((t - 1.0).abs() < 1e-6, "{t}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn burgers_constant_source() {
        let m = FluxModel::builtin("burgers").unwrap();
        let init = ProfileC1::constant(0.0, 0.0, 1.0).unwrap();
        let h = ControlSignal::constant(1.0, 1.0).unwrap();
        let sol = solve_classical(&m, &init, &h, 1.0, span(), &opts(1.0)).unwrap();
        for (t, u) in sol.trace(Side::Left).unwrap().into_iter().chain(sol.trace(Side::Right).unwrap()) {
            assert!((u - t).abs() < 1e-12);
        }
        let (x, d) = sol.trajectory(0.25, 0.8);
        assert!((x - (0.25 + 0.32)).abs() < 1e-12);
        assert_eq!(d, 1.0);
        assert!((sol.eval_exact(0.55, 0.4).unwrap() - 0.55).abs() < 1e-12);
    }

    #[test]
    fn snapshot_profile_reproduces_eval() {
        let m = FluxModel::builtin("lwr_greenshields").unwrap();
        let init = ProfileC1::from_fn(-2.0, 3.0, 200, |x| 0.5 + 0.2 * x.sin(), |x| 0.2 * x.cos()).unwrap();
        let h = ControlSignal::zero(0.5).unwrap();
        let sol = solve_classical(&m, &init, &h, 0.5, span(), &opts(0.5)).unwrap();
        let p = sol.snapshot_profile(0.5).unwrap();
        for &x in &[0.1, 0.45, 0.9] {
            assert!((p.value(x) - sol.eval(0.5, x).unwrap()).abs() < 1e-8);
            assert!((sol.eval_exact(0.5, x).unwrap() - sol.eval(0.5, x).unwrap()).abs() < 1e-8);
        }
        assert!(sol.max_gap() <= 1.0 / 400.0 + 1e-12);
        assert!(sol.min_gap() > 0.0);
        let csv = sol.fan_csv();
        assert!(csv.starts_with("x0,t,x,z0,z1\n"));
    }

    #[test]
    fn narrow_window_is_reported() {
        let m = FluxModel::builtin("burgers").unwrap();
        let init = ProfileC1::constant(1.0, 0.0, 1.0).unwrap();
        let h = ControlSignal::zero(1.0).unwrap();
        let mut o = opts(1.0);
        o.window = Some(Interval::new(-0.1, 1.1).unwrap());
        assert!(matches!(solve_classical(&m, &init, &h, 1.0, span(), &o), Err(Error::WindowTooSmall(_))));
    }
}
