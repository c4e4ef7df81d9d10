//! Finite volumes for `u_t + f(u)_x = h(t)` on a uniform grid.
//!
//! Lie splitting: a monotone conservative step for the flux, then the exact
//! source shift `u += H(t + dt) − H(t)` (the source does not depend on `x`).
//! Godunov fluxes for convex/concave `f`, Engquist–Osher otherwise.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::control::ControlSignal;
use crate::flux::{Derivative, FluxModel, Shape};
use crate::interval::Interval;
use crate::profile::{ProfileBV, ProfileC1};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

const PAR_CELLS: usize = 1024;

/// Uniform cells `[lo + i·dx, lo + (i+1)·dx]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub dx: f64,
    pub cells: usize,
}

impl Grid {
    /// Cells of width close to `dx` covering `window`, with `span` edges on cell faces when possible.
    pub fn covering(window: Interval, span: Interval, dx: f64) -> Result<Grid> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::Invalid(format!("dx must be positive, got {dx}")));
        }
        // align a face with span.lo
        let left = ((span.lo - window.lo) / dx).ceil().max(0.0);
        let lo = span.lo - left * dx;
        let cells = ((window.hi - lo) / dx).ceil() as usize;
        if cells < 4 {
            return Err(Error::Invalid("grid needs at least four cells".into()));
        }
        Ok(Grid { lo, dx, cells })
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.dx
    }

    pub fn face(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.dx
    }

    pub fn hi(&self) -> f64 {
        self.face(self.cells)
    }

    pub fn window(&self) -> Interval {
        Interval { lo: self.lo, hi: self.hi() }
    }
}

/// Cell averages of `value`, integrating exactly across the given breakpoints.
pub fn cell_averages<F: Fn(f64) -> f64 + Sync>(grid: &Grid, value: F, breaks: &[f64]) -> Vec<f64> {
    let gl = GaussLegendre::gl16();
    (0..grid.cells)
        .into_par_iter()
        .map(|i| {
            let (l, r) = (grid.face(i), grid.face(i + 1));
            let mut cuts = vec![l];
            cuts.extend(breaks.iter().copied().filter(|&x| x > l && x < r));
            cuts.push(r);
            let total: f64 = cuts.windows(2).map(|w| gl.integrate(w[0], w[1], &value)).sum();
            total / grid.dx
        })
        .collect()
}

pub fn averages_bv(grid: &Grid, p: &ProfileBV) -> Vec<f64> {
    let breaks: Vec<f64> = p.joints().iter().map(|j| j.x).collect();
    cell_averages(grid, |x| p.value(x), &breaks)
}

pub fn averages_c1(grid: &Grid, p: &ProfileC1) -> Vec<f64> {
    let breaks: Vec<f64> = p.knots().iter().map(|k| k.x).collect();
    cell_averages(grid, |x| p.value(x), &breaks)
}

/// Two-point numerical flux.
pub fn numerical_flux(model: &FluxModel, ul: f64, ur: f64) -> f64 {
    match model.shape() {
        Shape::Convex | Shape::Concave => {
            if ul <= ur {
                model.extrema_on(ul, ur).0
            } else {
                model.extrema_on(ur, ul).1
            }
        }
        Shape::General => {
            // Engquist–Osher: ½(f(l) + f(r)) − ½∫_l^r |f'|, the integral oriented and split at stationary points
            let (lo, hi, sign) = if ul <= ur { (ul, ur, 1.0) } else { (ur, ul, -1.0) };
            let mut var = 0.0;
            let mut prev = lo;
            for &s in model.stationary_points().iter().filter(|&&s| s > lo && s < hi) {
                var += (model.f(s) - model.f(prev)).abs();
                prev = s;
            }
            var += (model.f(hi) - model.f(prev)).abs();
            0.5 * (model.f(ul) + model.f(ur)) - 0.5 * sign * var
        }
    }
}

/// Crandall–Majda entropy flux for `η = |u − k|`.
fn entropy_flux(model: &FluxModel, ul: f64, ur: f64, k: f64) -> f64 {
    numerical_flux(model, ul.max(k), ur.max(k)) - numerical_flux(model, ul.min(k), ur.min(k))
}

fn total_variation(u: &[f64]) -> f64 {
    u.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[derive(Debug, Clone)]
pub struct FvOptions {
    pub dx: f64,
    pub cfl: f64,
    pub window: Option<Interval>,
    /// Times at which the state is stored (0 and the horizon are always added).
    pub snapshots: Vec<f64>,
    /// Constants `k` of the Kruzhkov entropies checked at every step.
    pub entropy_ks: Vec<f64>,
    pub max_steps: usize,
    /// Times at which cells outside `[a, b]` are overwritten: `(t, profile)`.
    pub exterior_resets: Vec<(f64, ProfileC1)>,
}

impl FvOptions {
    pub fn new(dx: f64) -> Self {
        FvOptions {
            dx,
            cfl: 0.5,
            window: None,
            snapshots: Vec::new(),
            entropy_ks: Vec::new(),
            max_steps: 50_000_000,
            exterior_resets: Vec::new(),
        }
    }
}

/// Run metadata for the JSON dump.
#[derive(Debug, Clone, Serialize)]
pub struct FvMeta {
    pub dx: f64,
    pub cfl: f64,
    pub window: Interval,
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Largest `dt·max|f'|/dx` over the steps.
    pub cfl_max: f64,
    pub dt_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FvSolution {
    model: FluxModel,
    grid: Grid,
    span: Interval,
    snapshots: Vec<(f64, Vec<f64>)>,
    meta: FvMeta,
    /// Largest `TV after flux step − TV before` over all steps.
    tv_increase: f64,
    /// Largest `|TV after source − TV before source|`.
    source_tv_change: f64,
    /// Largest positive discrete entropy residual.
    entropy_violation: f64,
    /// `|Σu dx − Σu₀ dx − |window|·H(t) + ∫ boundary flux|` at the end.
    conservation_defect: f64,
    tv_history: Vec<(f64, f64)>,
}

fn flux_step(model: &FluxModel, u: &[f64], dt: f64, dx: f64, out: &mut Vec<f64>) -> (f64, f64) {
    let n = u.len();
    // faces 0..=n with zero-gradient ghosts
    let face = |i: usize| {
        let l = u[i.saturating_sub(1)];
        let r = u[i.min(n - 1)];
        numerical_flux(model, l, r)
    };
    let fluxes: Vec<f64> = if n > PAR_CELLS {
        (0..=n).into_par_iter().map(face).collect()
    } else {
        (0..=n).map(face).collect()
    };
    let lam = dt / dx;
    out.clear();
    out.extend((0..n).map(|i| u[i] - lam * (fluxes[i + 1] - fluxes[i])));
    (fluxes[0], fluxes[n])
}

/// `max_{i,k} |uᵢⁿ⁺¹ − k| − |uᵢⁿ − k| + λ(Qᵢ₊½ − Qᵢ₋½)`, nonpositive for monotone schemes.
fn entropy_residual(model: &FluxModel, prev: &[f64], next: &[f64], dt: f64, dx: f64, ks: &[f64]) -> f64 {
    let n = prev.len();
    if ks.is_empty() || n == 0 {
        return f64::NEG_INFINITY;
    }
    let q = |i: usize, k: f64| entropy_flux(model, prev[i.saturating_sub(1)], prev[i.min(n - 1)], k);
    let lam = dt / dx;
    let eval = |i: usize| {
        let (l, r) = (prev[i.saturating_sub(1)], prev[(i + 1).min(n - 1)]);
        let lo = l.min(r).min(prev[i]).min(next[i]);
        let hi = l.max(r).max(prev[i]).max(next[i]);
        let mut worst: f64 = 0.0;
        // a stencil on one side of k gives the update itself, zero
        for &k in ks.iter().filter(|&&k| lo < k && k < hi) {
            worst = worst.max((next[i] - k).abs() - (prev[i] - k).abs() + lam * (q(i + 1, k) - q(i, k)));
        }
        worst
    };
    if n > PAR_CELLS {
        (0..n).into_par_iter().map(eval).reduce(|| f64::NEG_INFINITY, f64::max)
    } else {
        (0..n).map(eval).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bound on `max |f'|` over the current range, cached over a padded hull for general fluxes.
struct SpeedBound {
    hull: Option<(Interval, f64)>,
}

impl SpeedBound {
    fn get(&mut self, model: &FluxModel, u: &[f64]) -> Result<f64> {
        let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::StepFailure("non-finite cell value".into()));
        }
        if model.shape() != Shape::General {
            // f' is monotone
            return Ok(model.df(lo).abs().max(model.df(hi).abs()));
        }
        if let Some((h, s)) = self.hull {
            if h.lo <= lo && hi <= h.hi {
                return Ok(s);
            }
        }
        let h = padded_hull(model, lo, hi);
        let s = model.sup_norm_on(Derivative::First, h)?;
        self.hull = Some((h, s));
        Ok(s)
    }
}

/// States range `[lo, hi]` widened a little, clipped to the flux domain.
fn padded_hull(model: &FluxModel, lo: f64, hi: f64) -> Interval {
    let pad = 0.05 * (hi - lo) + 1e-3 * (1.0 + lo.abs().max(hi.abs()));
    let h = Interval { lo: lo - pad, hi: hi + pad };
    h.intersect(&model.domain()).unwrap_or(h)
}

/// Window wide enough that waves from its edges cannot reach `span` by `horizon`.
pub fn fv_window(model: &FluxModel, image: Interval, control: &ControlSignal, span: Interval, horizon: f64) -> Result<Interval> {
    let hs = control.primitive_sup();
    // padded like the step-size bound, so the solver's reach estimate fits
    let reach = padded_hull(model, image.lo - hs, image.hi + hs);
    let s = model.sup_norm_on(Derivative::First, reach)?;
    let w = s * horizon * 1.05 + 0.1 * span.width();
    Interval::new(span.lo - w, span.hi + w)
}

/// Solve from cell averages `u0` on `grid` up to `horizon`.
pub fn solve_fv_cells(
    model: &FluxModel,
    grid: Grid,
    u0: Vec<f64>,
    control: &ControlSignal,
    horizon: f64,
    span: Interval,
    opts: &FvOptions,
) -> Result<FvSolution> {
    if u0.len() != grid.cells {
        return Err(Error::Invalid("cell count mismatch".into()));
    }
    if !(opts.cfl > 0.0 && opts.cfl <= 0.5) {
        return Err(Error::Invalid(format!("CFL must lie in (0, 0.5], got {}", opts.cfl)));
    }
    if control.duration() + 1e-12 * horizon < horizon {
        return Err(Error::Invalid("control shorter than the horizon".into()));
    }
    let dx = grid.dx;
    let mut stops: Vec<f64> = opts.snapshots.iter().copied().filter(|&t| t > 0.0 && t < horizon).collect();
    stops.extend(opts.exterior_resets.iter().map(|r| r.0).filter(|&t| t > 0.0 && t < horizon));
    stops.push(horizon);
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * horizon);
    let mut keep: Vec<f64> = opts.snapshots.iter().copied().filter(|&t| t > 0.0 && t < horizon).collect();
    keep.push(horizon);

    let mut u = u0;
    let mass0: f64 = u.iter().sum::<f64>() * dx;
    let mut boundary = 0.0;
    let mut snapshots = vec![(0.0, u.clone())];
    let mut tv_history = vec![(0.0, total_variation(&u))];
    let mut dts = Vec::new();
    let (mut tv_increase, mut source_tv_change, mut entropy_violation) = (f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    let mut cfl_max: f64 = 0.0;
    let mut next = Vec::with_capacity(u.len());
    let mut resets_done = 0usize;
    let mut t = 0.0;
    let mut reach: f64 = 0.0;
    let mut stop_idx = 0;
    let mut bound = SpeedBound { hull: None };
    // exterior cells: fully outside [a, b]
    let inside = |i: usize| grid.face(i + 1) > span.lo + 1e-12 * dx && grid.face(i) < span.hi - 1e-12 * dx;

    while t < horizon {
        if dts.len() >= opts.max_steps {
            return Err(Error::StepFailure(format!("step budget {} exhausted at t = {t}", opts.max_steps)));
        }
        let s = bound.get(model, &u)?;
        let mut dt = if s > 0.0 { opts.cfl * dx / s } else { horizon - t };
        let target = stops[stop_idx];
        if t + dt >= target - 1e-14 * horizon.max(1.0) {
            dt = target - t;
        } else if t + 2.0 * dt > target {
            // two even steps instead of a sliver
            dt = 0.5 * (target - t);
        }
        if !(dt > 1e-15 * horizon.max(1.0)) && t + dt < target {
            return Err(Error::StepFailure(format!("time step underflow at t = {t}")));
        }
        cfl_max = cfl_max.max(dt * s / dx);
        reach += s * dt;
        let tv_before = total_variation(&u);
        let (fl, fr) = flux_step(model, &u, dt, dx, &mut next);
        boundary += dt * (fr - fl);
        let tv_mid = total_variation(&next);
        tv_increase = tv_increase.max(tv_mid - tv_before);
        entropy_violation = entropy_violation.max(entropy_residual(model, &u, &next, dt, dx, &opts.entropy_ks));
        let shift = control.primitive(t + dt) - control.primitive(t);
        for v in next.iter_mut() {
            *v += shift;
        }
        source_tv_change = source_tv_change.max((total_variation(&next) - tv_mid).abs());
        std::mem::swap(&mut u, &mut next);
        t += dt;
        dts.push(dt);
        if (t - target).abs() <= 1e-13 * horizon.max(1.0) {
            t = target;
            stop_idx += 1;
            while resets_done < opts.exterior_resets.len() && (opts.exterior_resets[resets_done].0 - t).abs() <= 1e-12 * horizon.max(1.0) {
                let p = &opts.exterior_resets[resets_done].1;
                let g = grid;
                let fresh = averages_c1(&g, p);
                for i in 0..u.len() {
                    if !inside(i) {
                        u[i] = fresh[i];
                    }
                }
                resets_done += 1;
            }
            if keep.iter().any(|&k| (k - t).abs() <= 1e-13 * horizon.max(1.0)) {
                snapshots.push((t, u.clone()));
            }
        }
        tv_history.push((t, total_variation(&u)));
    }
    let margin = (span.lo - grid.lo).min(grid.hi() - span.hi);
    if reach > margin && opts.exterior_resets.is_empty() {
        return Err(Error::WindowTooSmall(format!(
            "waves travel {reach} but the window leaves only {margin} beside {span}"
        )));
    }
    let mass: f64 = u.iter().sum::<f64>() * dx;
    let conservation_defect = if opts.exterior_resets.is_empty() {
        (mass - mass0 - grid.window().width() * control.primitive(horizon) + boundary).abs()
    } else {
        f64::NAN
    };
    let meta = FvMeta {
        dx,
        cfl: opts.cfl,
        window: grid.window(),
        steps: dts.len(),
        dt_min: dts.iter().copied().fold(f64::INFINITY, f64::min),
        dt_max: dts.iter().copied().fold(0.0, f64::max),
        cfl_max,
        dt_history: dts,
    };
    Ok(FvSolution {
        model: model.clone(),
        grid,
        span,
        snapshots,
        meta,
        tv_increase,
        source_tv_change,
        entropy_violation: entropy_violation.max(0.0),
        conservation_defect,
        tv_history,
    })
}

/// Solve from a BV profile (constant outside its domain).
pub fn solve_fv(model: &FluxModel, u0: &ProfileBV, control: &ControlSignal, horizon: f64, span: Interval, opts: &FvOptions) -> Result<FvSolution> {
    let window = match opts.window {
        Some(w) => w,
        None => fv_window(model, u0.image(), control, span, horizon)?,
    };
    let grid = Grid::covering(window, span, opts.dx)?;
    let cells = averages_bv(&grid, u0);
    solve_fv_cells(model, grid, cells, control, horizon, span, opts)
}

/// Solve from a C¹ profile (e.g. an extension), constant outside its knots.
pub fn solve_fv_c1(model: &FluxModel, u0: &ProfileC1, control: &ControlSignal, horizon: f64, span: Interval, opts: &FvOptions) -> Result<FvSolution> {
    let window = match opts.window {
        Some(w) => w,
        None => fv_window(model, u0.image(), control, span, horizon)?,
    };
    let grid = Grid::covering(window, span, opts.dx)?;
    let cells = averages_c1(&grid, u0);
    solve_fv_cells(model, grid, cells, control, horizon, span, opts)
}

impl FvSolution {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn meta(&self) -> &FvMeta {
        &self.meta
    }

    pub fn snapshots(&self) -> &[(f64, Vec<f64>)] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: f64) -> Option<&[f64]> {
        let eps = 1e-12 * self.snapshots.last().map_or(1.0, |s| s.0.max(1.0));
        self.snapshots.iter().find(|s| (s.0 - t).abs() <= eps).map(|s| s.1.as_slice())
    }

    pub fn final_state(&self) -> &[f64] {
        &self.snapshots[self.snapshots.len() - 1].1
    }

    pub fn tv_increase(&self) -> f64 {
        self.tv_increase
    }

    /// Floor below which a TV increase is rounding: a few ulps of `sup |u|` per cell.
    pub fn tv_tolerance(&self) -> f64 {
        let sup = self.snapshots.iter().flat_map(|s| s.1.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        (4.0 * f64::EPSILON * self.grid.cells as f64 * sup).max(1e-12)
    }

    pub fn source_tv_change(&self) -> f64 {
        self.source_tv_change
    }

    /// Largest positive discrete Kruzhkov residual over the requested `k`.
    pub fn entropy_violation(&self) -> f64 {
        self.entropy_violation
    }

    pub fn conservation_defect(&self) -> f64 {
        self.conservation_defect
    }

    pub fn tv_history(&self) -> &[(f64, f64)] {
        &self.tv_history
    }

    /// Piecewise-constant value at `x`.
    pub fn value_at(&self, cells: &[f64], x: f64) -> f64 {
        let i = ((x - self.grid.lo) / self.grid.dx).floor().clamp(0.0, (self.grid.cells - 1) as f64) as usize;
        cells[i]
    }

    /// `∫_a^b |u_h − g|` with `g` integrated exactly across `breaks`.
    pub fn l1_error<G: Fn(f64) -> f64 + Sync>(&self, cells: &[f64], g: G, breaks: &[f64]) -> f64 {
        let gl = GaussLegendre::gl16();
        let (a, b) = (self.span.lo, self.span.hi);
        (0..self.grid.cells)
            .into_par_iter()
            .filter_map(|i| {
                let l = self.grid.face(i).max(a);
                let r = self.grid.face(i + 1).min(b);
                if r <= l {
                    return None;
                }
                let mut cuts = vec![l];
                cuts.extend(breaks.iter().copied().filter(|&x| x > l && x < r));
                cuts.push(r);
                Some(cuts.windows(2).map(|w| gl.integrate(w[0], w[1], |x| (cells[i] - g(x)).abs())).sum::<f64>())
            })
            .collect::<Vec<f64>>()
            // fixed summation order
            .iter()
            .sum()
    }

    /// `∫_a^b |u_h(T) − ψ|`.
    pub fn verify_terminal(&self, psi: &ProfileBV) -> f64 {
        let breaks: Vec<f64> = psi.joints().iter().map(|j| j.x).collect();
        self.l1_error(self.final_state(), |x| psi.value(x), &breaks)
    }

    /// Cells meeting `[a, b]`.
    pub fn span_cells<'a>(&self, cells: &'a [f64]) -> &'a [f64] {
        let i0 = ((self.span.lo - self.grid.lo) / self.grid.dx).floor().max(0.0) as usize;
        let i1 = (((self.span.hi - self.grid.lo) / self.grid.dx).ceil() as usize).min(self.grid.cells);
        &cells[i0..i1]
    }

    /// `(sup |u|, TV)` restricted to `[a, b]`.
    pub fn sup_and_tv(&self, cells: &[f64]) -> (f64, f64) {
        let c = self.span_cells(cells);
        (c.iter().fold(0.0f64, |m, v| m.max(v.abs())), total_variation(c))
    }

    /// CSV `t,x,u` of every stored snapshot, restricted to `[a, b]`.
    pub fn snapshot_csv(&self) -> String {
        let mut out = String::from("t,x,u\n");
        let i0 = ((self.span.lo - self.grid.lo) / self.grid.dx).floor().max(0.0) as usize;
        for (t, cells) in &self.snapshots {
            for (j, v) in self.span_cells(cells).iter().enumerate() {
                let _ = writeln!(out, "{t:.12e},{:.12e},{v:.12e}", self.grid.center(i0 + j));
            }
        }
        out
    }

    pub fn model(&self) -> &FluxModel {
        &self.model
    }
}

/// Largest positive cell residual of the Kruzhkov inequality for one flux step `prev → next`.
pub fn discrete_entropy_check(model: &FluxModel, prev: &[f64], next: &[f64], dt: f64, dx: f64, ks: &[f64]) -> f64 {
    entropy_residual(model, prev, next, dt, dx, ks).max(0.0)
}
