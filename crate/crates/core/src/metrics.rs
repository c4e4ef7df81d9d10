//! Sup-inf chord functionals of a flux and the controllability times built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::interval::Interval;
use crate::optimize;

const INNER_GRID: usize = 2048;
const OUTER_GRID: usize = 2048;
const SCAN_GRID: usize = 4096;
const GROWTH_GUARD: f64 = 1e12;
/// Below this shift the chord slope is replaced by `f'` at the midpoint.
const SMALL_SHIFT: f64 = 1e-6;

/// Which sign of shift a branch of the sup ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    KNonneg,
    KNonpos,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::KNonneg => 1.0,
            Direction::KNonpos => -1.0,
        }
    }
}

/// Result of a bracket-norm evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// `+∞` when the admissible shifts are unbounded and the inf grows past the guard.
    #[serde(with = "crate::serde_f64")]
    pub value: f64,
    pub k_witness: f64,
    pub direction: Direction,
    pub epsilon: f64,
    pub argsup_k: f64,
    /// Both branches reach the sup; `direction` then defaults to `k_nonneg`.
    pub tie: bool,
}

/// Chord slope `(f(u+k) − f(u))/k`.
pub fn delta_f(model: &FluxModel, u: f64, k: f64) -> Result<f64> {
    if k == 0.0 {
        return Err(Error::ZeroShift);
    }
    let s = model.states();
    if !s.contains(u) || !s.contains(u + k) {
        return Err(Error::Domain(format!("u = {u}, u + k = {} outside {s}", u + k)));
    }
    Ok((model.f(u + k) - model.f(u)) / k)
}

/// Chord slope extended continuously by `f'` at `k = 0`.
#[inline]
pub(crate) fn chord(model: &FluxModel, u: f64, k: f64) -> f64 {
    if k.abs() < SMALL_SHIFT {
        model.df(u + 0.5 * k)
    } else {
        (model.f(u + k) - model.f(u)) / k
    }
}

/// Precomputed inner grid for `inf_{u ∈ J'} |Δf(u; k)|`.
pub(crate) struct InnerInf<'a> {
    model: &'a FluxModel,
    grid: Vec<f64>,
}

impl<'a> InnerInf<'a> {
    pub(crate) fn new(model: &'a FluxModel, jp: Interval) -> Self {
        let grid = if jp.width() == 0.0 { vec![jp.lo] } else { jp.linspace(INNER_GRID) };
        InnerInf { model, grid }
    }

    pub(crate) fn eval(&self, k: f64) -> f64 {
        let g = |u: f64| -chord(self.model, u, k).abs();
        let vals: Vec<f64> = self.grid.iter().map(|&u| g(u)).collect();
        -optimize::refine_grid_max(&g, &self.grid, &vals, 4, 1e-13).1
    }

    /// Plain grid minimum, used when re-checking witnesses.
    pub(crate) fn eval_on(&self, k: f64, n: usize) -> f64 {
        let jp = Interval { lo: self.grid[0], hi: self.grid[self.grid.len() - 1] };
        let pts = if jp.width() == 0.0 { vec![jp.lo] } else { jp.linspace(n) };
        pts.iter().map(|&u| chord(self.model, u, k).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Admissible shifts `{k : J' + k ⊆ states}` as a (possibly infinite) interval.
fn shift_range(model: &FluxModel, jp: Interval) -> Interval {
    let s = model.states();
    Interval { lo: s.lo - jp.lo, hi: s.hi - jp.hi }
}

fn prepare(model: &FluxModel, jp: Interval) -> Result<Interval> {
    if !jp.is_finite() || jp.lo > jp.hi {
        return Err(Error::Domain(format!("{jp} must be a finite interval")));
    }
    if !model.domain().contains_interval(&jp) {
        return Err(Error::Domain(format!("{jp} is not inside the flux domain {}", model.domain())));
    }
    let s = model.states();
    let jp = Interval { lo: jp.lo.max(s.lo), hi: jp.hi.min(s.hi) };
    if jp.lo > jp.hi {
        return Err(Error::Domain(format!("{jp} misses the admissible states {s}")));
    }
    Ok(jp)
}

#[derive(Debug, Clone, Copy)]
struct BranchSup {
    value: f64,
    k: f64,
}

/// Shift grid on `[0, len]` (scaled by `sign`), dense near zero.
fn shift_grid(len: f64, sign: f64) -> Vec<f64> {
    let mut ks: Vec<f64> = (0..OUTER_GRID).map(|i| len * i as f64 / (OUTER_GRID - 1) as f64).collect();
    ks.extend((1..=12).map(|j| len * 10f64.powi(-j)));
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks.dedup();
    ks.into_iter().map(|k| sign * k).collect()
}

fn branch_sup(inner: &InnerInf, range: Interval, dir: Direction, tol: f64) -> BranchSup {
    let len = match dir {
        Direction::KNonneg => range.hi.max(0.0),
        Direction::KNonpos => (-range.lo).max(0.0),
    };
    if len == 0.0 {
        return BranchSup { value: inner.eval(0.0), k: 0.0 };
    }
    let sign = dir.sign();
    if len.is_infinite() {
        // Probe geometric shifts; a flux with growing chords has no finite sup.
        let mut ks: Vec<f64> = (-30..=44).map(|j| sign * 2f64.powi(j)).collect();
        ks.insert(0, 0.0);
        if inner.eval(sign * 2f64.powi(44)) >= GROWTH_GUARD {
            return BranchSup { value: f64::INFINITY, k: sign * f64::INFINITY };
        }
        let vals: Vec<f64> = ks.par_iter().map(|&k| inner.eval(k)).collect();
        let (k, value) = polish(inner, &ks, &vals, tol);
        return BranchSup { value, k };
    }
    let mut ks = shift_grid(len, sign);
    if sign < 0.0 {
        ks.reverse();
    }
    let vals: Vec<f64> = ks.par_iter().map(|&k| inner.eval(k)).collect();
    let (k, value) = polish(inner, &ks, &vals, tol);
    BranchSup { value, k }
}

fn polish(inner: &InnerInf, ks: &[f64], vals: &[f64], tol: f64) -> (f64, f64) {
    let f = |k: f64| inner.eval(k);
    let ktol = (tol * 1e-3).max(1e-14);
    optimize::refine_grid_max(&f, ks, vals, 8, ktol)
}

fn bracket_impl(model: &FluxModel, jp: Interval, tol: f64, only: Option<Direction>) -> Result<MetricReport> {
    let jp = prepare(model, jp)?;
    let inner = InnerInf::new(model, jp);
    let range = shift_range(model, jp);
    let pos = (only != Some(Direction::KNonpos)).then(|| branch_sup(&inner, range, Direction::KNonneg, tol));
    let neg = (only != Some(Direction::KNonneg)).then(|| branch_sup(&inner, range, Direction::KNonpos, tol));
    let (best, direction, tie) = match (pos, neg) {
        (Some(p), Some(n)) => {
            let close = (p.value - n.value).abs() <= tol || (p.value.is_infinite() && n.value.is_infinite());
            // k = 0 belongs to both branches; that is not a genuine tie
            let tie = close && p.k.abs() > tol && n.k.abs() > tol;
            if p.value >= n.value - tol {
                (p, Direction::KNonneg, tie)
            } else {
                (n, Direction::KNonpos, false)
            }
        }
        (Some(p), None) => (p, Direction::KNonneg, false),
        (None, Some(n)) => (n, Direction::KNonpos, false),
        (None, None) => unreachable!(),
    };
    let epsilon = (1e3 * tol).max(1e-6);
    let argsup_k = if best.value.is_finite() {
        smallest_shift(&inner, range, direction, best.value - epsilon, Some(best.k)).unwrap_or(best.k)
    } else {
        best.k
    };
    Ok(MetricReport { value: best.value, k_witness: best.k, direction, epsilon, argsup_k, tie })
}

/// `[|f|]_{J'}`: sup over admissible shifts of the worst chord speed on `J'`.
pub fn bracket_norm(model: &FluxModel, jp: Interval, tol: f64) -> Result<MetricReport> {
    bracket_impl(model, jp, tol, None)
}

/// Bracket norm over the shifts of one sign only.
pub fn bracket_norm_directed(model: &FluxModel, jp: Interval, dir: Direction, tol: f64) -> Result<MetricReport> {
    bracket_impl(model, jp, tol, Some(dir))
}

/// Closest-to-zero shift of the given sign with `inf_u |Δf(u;k)| > threshold`.
///
/// Scans outward from `k = 0` and bisects the first crossing.
fn smallest_shift(inner: &InnerInf, range: Interval, dir: Direction, threshold: f64, witness: Option<f64>) -> Option<f64> {
    let sign = dir.sign();
    let len = match dir {
        Direction::KNonneg => range.hi.max(0.0),
        Direction::KNonpos => (-range.lo).max(0.0),
    };
    if inner.eval(0.0) > threshold {
        return Some(0.0);
    }
    if len == 0.0 {
        return None;
    }
    let mut ks: Vec<f64> = if len.is_infinite() {
        let mut v = vec![0.0];
        v.extend((-30..=44).map(|j| 2f64.powi(j)));
        v
    } else {
        let mut v: Vec<f64> = (0..SCAN_GRID).map(|i| len * i as f64 / (SCAN_GRID - 1) as f64).collect();
        v.extend((1..=12).map(|j| len * 10f64.powi(-j)));
        v
    };
    // the witness lies in the set, so a narrow peak is never stepped over
    if let Some(w) = witness.filter(|w| w.is_finite() && w * sign > 0.0) {
        ks.push(w.abs());
    }
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks.dedup();
    let vals: Vec<f64> = ks.par_iter().map(|&k| inner.eval(sign * k)).collect();
    let i = vals.iter().position(|&v| v > threshold)?;
    let (mut lo, mut hi) = (ks[i - 1], ks[i]);
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if inner.eval(sign * m) > threshold {
            hi = m;
        } else {
            lo = m;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Some(sign * hi)
}

/// Smallest-|k| shift of either sign with `inf_{u∈J'} |Δf(u;k)| > threshold`.
/// On equal magnitudes the non-negative shift wins.
pub fn minimal_shift(model: &FluxModel, jp: Interval, threshold: f64) -> Result<Option<f64>> {
    let jp = prepare(model, jp)?;
    let inner = InnerInf::new(model, jp);
    let range = shift_range(model, jp);
    let p = smallest_shift(&inner, range, Direction::KNonneg, threshold, None);
    let n = smallest_shift(&inner, range, Direction::KNonpos, threshold, None);
    Ok(match (p, n) {
        (Some(p), Some(n)) => Some(if p.abs() <= n.abs() { p } else { n }),
        (p, n) => p.or(n),
    })
}

/// `inf_{u∈J'} |Δf(u;k)|` with the `k = 0` limit `|f'|`.
pub fn inf_abs_delta(model: &FluxModel, jp: Interval, k: f64) -> Result<f64> {
    let jp = prepare(model, jp)?;
    Ok(InnerInf::new(model, jp).eval(k))
}

/// Re-evaluate the inner inf on a plain grid of `n` points.
pub fn inf_abs_delta_grid(model: &FluxModel, jp: Interval, k: f64, n: usize) -> Result<f64> {
    let jp = prepare(model, jp)?;
    Ok(InnerInf::new(model, jp).eval_on(k, n))
}

/// Extremal shift of the branch attaining the sup where the inf stays above `value − eps`.
pub fn argsup_k(model: &FluxModel, jp: Interval, eps: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::Invalid("argsup_k needs eps > 0".into()));
    }
    let rep = bracket_norm(model, jp, 1e-9)?;
    if !rep.value.is_finite() {
        return Err(Error::BranchUndetermined(format!("[|f|] on {jp} is unbounded")));
    }
    let jp = prepare(model, jp)?;
    let inner = InnerInf::new(model, jp);
    let range = shift_range(model, jp);
    smallest_shift(&inner, range, rep.direction, rep.value - eps, Some(rep.k_witness))
        .ok_or_else(|| Error::BranchUndetermined(format!("no shift on {jp} within {eps} of the sup")))
}

/// Bracket norm with the flux truncated at `u0`, in the growth direction.
///
/// `u0` above `J'` truncates to `(i₋, u0)` and uses `k ≥ 0`; below `J'` it
/// truncates to `(u0, i₊)` and uses `k ≤ 0`.
pub fn bracket_norm_truncated(model: &FluxModel, jp: Interval, u0: f64) -> Result<MetricReport> {
    let s = model.states();
    let (window, dir) = if u0 > jp.hi {
        (Interval { lo: s.lo, hi: u0 }, Direction::KNonneg)
    } else if u0 < jp.lo {
        (Interval { lo: u0, hi: s.hi }, Direction::KNonpos)
    } else {
        return Err(Error::Domain(format!("truncation point {u0} lies inside {jp}")));
    };
    let t = model.truncated(window)?;
    bracket_norm_directed(&t, jp, dir, 1e-9)
}

/// `(T*₁, T*₂, T*)` for the pair of state intervals.
pub fn controllability_times(model: &FluxModel, j1: Interval, j2: Interval, a: f64, b: f64) -> Result<(f64, f64, f64)> {
    let t1 = time_for(model, j1, b - a)?;
    let t2 = time_for(model, j2, b - a)?;
    Ok((t1, t2, t1 + t2))
}

fn time_for(model: &FluxModel, j: Interval, len: f64) -> Result<f64> {
    let v = bracket_norm(model, j, 1e-9)?.value;
    if v <= 0.0 {
        return Err(Error::NotControllable(format!("[|f|] vanishes on {j}")));
    }
    Ok(len / v)
}

/// Time needed by boundary controls to reach `ψ`.
///
/// Each sup runs over the interior points where the relevant part of
/// `f'(ψ(x))` is positive; an empty range gives 0; a zero of `f'∘ψ` inside
/// `(a, b)` makes the time infinite.
pub fn boundary_control_time<P: Fn(f64) -> f64>(model: &FluxModel, psi: P, a: f64, b: f64) -> f64 {
    const N: usize = 4001;
    let xs: Vec<f64> = (1..N).map(|i| a + (b - a) * i as f64 / N as f64).collect();
    let speeds: Vec<f64> = xs.iter().map(|&x| model.df(psi(x))).collect();
    let scale = speeds.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(1.0);
    if speeds.iter().any(|s| s.abs() <= 1e-13 * scale) || speeds.windows(2).any(|w| w[0] * w[1] < 0.0) {
        return f64::INFINITY;
    }
    let mut right = 0.0f64;
    let mut left = 0.0f64;
    for (&x, &s) in xs.iter().zip(&speeds) {
        if s > 0.0 {
            right = right.max((x - a) / s);
        } else {
            left = left.max((b - x) / -s);
        }
    }
    // the sup over the open interval is approached at the ends
    if speeds[speeds.len() - 1] > 0.0 {
        right = right.max((b - a) / model.df(psi(b)).max(f64::MIN_POSITIVE));
    }
    if speeds[0] < 0.0 {
        left = left.max((b - a) / (-model.df(psi(a))).max(f64::MIN_POSITIVE));
    }
    right.max(left)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flux(name: &str) -> FluxModel {
        FluxModel::builtin(name).unwrap()
    }

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_f(&flux("burgers"), 1.0, 2.0).unwrap(), 2.0);
        assert!((delta_f(&flux("lwr_greenshields"), 0.75, 0.75).unwrap() + 0.25).abs() < 1e-15);
        assert!((delta_f(&flux("kynch_mw"), 2.0 / 3.0, 1.0 / 3.0).unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(delta_f(&flux("burgers"), 1.0, 0.0), Err(Error::ZeroShift));
        assert!(matches!(delta_f(&flux("kynch_mw"), 0.9, 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn greenshields_values() {
        let f1 = flux("lwr_greenshields");
        let r = bracket_norm(&f1, iv(0.0, 0.75), 1e-9).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9);
        let r = bracket_norm(&f1, iv(0.75, 1.25), 1e-9).unwrap();
        assert!((r.value - 0.25).abs() < 1e-9);
        assert!(r.tie);
        assert_eq!(r.direction, Direction::KNonneg);
        let r = bracket_norm(&f1, iv(1.5, 2.0), 1e-9).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let r = bracket_norm(&f1, iv(0.0, 0.5), 1e-9).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonconvex_values() {
        let f2 = flux("lwr_bonzani_mussone");
        let r = bracket_norm(&f2, iv(4.0 / 3.0, 2.0), 1e-9).unwrap();
        assert!((r.value - 0.298).abs() < 5e-3, "{r:?}");
        assert!((r.k_witness + 0.717).abs() < 5e-3, "{r:?}");
        let r = bracket_norm(&f2, iv(0.6, 1.0), 1e-9).unwrap();
        assert!((r.value - 0.361).abs() < 5e-3, "{r:?}");
        assert!((r.k_witness - 1.0).abs() < 1e-2, "{r:?}");
        let f3 = flux("kynch_mw");
        let r = bracket_norm(&f3, iv(2.0 / 3.0, 1.0), 1e-9).unwrap();
        assert!((r.value - 2.0 / 9.0).abs() < 1e-9, "{r:?}");
        let r = bracket_norm(&f3, iv(1.0 / 3.0, 2.0 / 3.0), 1e-9).unwrap();
        assert!((r.value - 2.0 / 9.0).abs() < 1e-9, "{r:?}");
        // witness re-check on a finer plain grid
        let fine = inf_abs_delta_grid(&f3, iv(1.0 / 3.0, 2.0 / 3.0), r.k_witness, 20480).unwrap();
        assert!((fine - r.value).abs() <= 1e-8);
    }

    #[test]
    fn unbounded_for_burgers_on_the_line() {
        let r = bracket_norm(&flux("burgers"), iv(0.0, 1.0), 1e-9).unwrap();
        assert!(r.value.is_infinite());
    }

    #[test]
    fn argsup_examples() {
        let f1 = flux("lwr_greenshields");
        let k = argsup_k(&f1, iv(0.75, 1.25), 0.05).unwrap();
        assert!((k - 0.70).abs() < 1e-9, "{k}");
        assert_eq!(argsup_k(&f1, iv(0.0, 0.75), 0.1).unwrap(), 0.0);
        let k = argsup_k(&flux("kynch_mw"), iv(2.0 / 3.0, 1.0), 1e-9).unwrap();
        assert!((k.abs() - 1.0 / 3.0).abs() < 1e-6, "{k}");
    }

    #[test]
    fn truncated_burgers() {
        let b = flux("burgers");
        let r = bracket_norm_truncated(&b, iv(0.0, 1.0), 23.0).unwrap();
        assert!((r.value - 11.0).abs() < 1e-8);
        assert!((r.k_witness - 22.0).abs() < 1e-6);
        let r = bracket_norm_truncated(&b, iv(0.0, 1.0), 3.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
        let mut last = 0.0;
        for u0 in [2.0, 3.0, 5.0, 10.0] {
            let v = bracket_norm_truncated(&b, iv(0.0, 1.0), u0).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn times() {
        let (t1, t2, t) = controllability_times(&flux("lwr_greenshields"), iv(0.0, 0.75), iv(0.75, 1.25), 0.0, 1.0).unwrap();
        assert!((t1 - 2.0).abs() < 1e-9 && (t2 - 4.0).abs() < 1e-9 && (t - 6.0).abs() < 1e-9);
        let (_, _, t) = controllability_times(&flux("lwr_greenshields"), iv(0.0, 0.75), iv(0.75, 1.25), 0.0, 2.0).unwrap();
        assert!((t - 12.0).abs() < 1e-9);
        let e = controllability_times(&flux("lwr_greenshields"), iv(0.9, 1.1), iv(0.0, 0.5), 0.0, 1.0);
        assert!(matches!(e, Err(Error::NotControllable(_))) || e.unwrap().2 > 0.0);
    }

    #[test]
    fn boundary_time_conventions() {
        let b = flux("burgers");
        assert!((boundary_control_time(&b, |_| 2.0, 0.0, 1.0) - 0.5).abs() < 1e-12);
        assert!(boundary_control_time(&b, |_| 0.0, 0.0, 1.0).is_infinite());
        assert!(boundary_control_time(&flux("lwr_greenshields"), |_| 1.0, 0.0, 1.0).is_infinite());
        assert!(boundary_control_time(&b, |x| x - 0.5, 0.0, 1.0).is_infinite());
    }
}
