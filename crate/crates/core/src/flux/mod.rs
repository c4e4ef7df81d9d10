//! Flux functions `f` with closed-form first and second derivatives.

mod tabulated;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::optimize;

pub use tabulated::TabulatedFlux;

/// Convexity metadata of a flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Convex,
    Concave,
    General,
}

/// Which derivative a sup-norm is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    First,
    Second,
}

#[derive(Debug, Clone)]
enum Kind {
    Burgers,
    Greenshields,
    BonzaniMussone,
    KynchMw,
    Tabulated(Arc<TabulatedFlux>),
}

/// Distance kept from the essential singularity of the Bonzani–Mussone flux at ρ = 2.
pub const BONZANI_MUSSONE_MARGIN: f64 = 1e-6;

const SUP_GRID: usize = 4096;
const SUP_TOP: usize = 8;
const SUP_TOL: f64 = 1e-10;
const OVERFLOW_GUARD: f64 = 1e12;

/// A twice continuously differentiable flux on an interval `I = (i₋, i₊)`.
///
/// `domain` is the nominal flux domain; `states` is the closed range of states
/// the numerics may visit (equal to `domain` except next to a singular end).
#[derive(Debug, Clone)]
pub struct FluxModel {
    name: String,
    kind: Kind,
    domain: Interval,
    states: Interval,
    shape: Shape,
    stationary: Vec<f64>,
}

impl FluxModel {
    pub fn builtin(name: &str) -> Result<FluxModel> {
        let inf = f64::INFINITY;
        let model = match name {
            "burgers" => FluxModel {
                name: name.into(),
                kind: Kind::Burgers,
                domain: Interval { lo: -inf, hi: inf },
                states: Interval { lo: -inf, hi: inf },
                shape: Shape::Convex,
                stationary: vec![0.0],
            },
            "lwr_greenshields" => FluxModel {
                name: name.into(),
                kind: Kind::Greenshields,
                domain: Interval { lo: 0.0, hi: 2.0 },
                states: Interval { lo: 0.0, hi: 2.0 },
                shape: Shape::Concave,
                stationary: vec![1.0],
            },
            "lwr_bonzani_mussone" => FluxModel {
                name: name.into(),
                kind: Kind::BonzaniMussone,
                domain: Interval { lo: 0.0, hi: 2.0 },
                states: Interval { lo: 0.0, hi: 2.0 - BONZANI_MUSSONE_MARGIN },
                shape: Shape::General,
                stationary: vec![3.0 - 5f64.sqrt()],
            },
            "kynch_mw" => FluxModel {
                name: name.into(),
                kind: Kind::KynchMw,
                domain: Interval { lo: 0.0, hi: 1.0 },
                states: Interval { lo: 0.0, hi: 1.0 },
                shape: Shape::General,
                stationary: vec![1.0 / 3.0, 1.0],
            },
            other => return Err(Error::UnknownFlux(other.to_string())),
        };
        Ok(model)
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["burgers", "lwr_greenshields", "lwr_bonzani_mussone", "kynch_mw"]
    }

    pub fn from_tabulated(name: &str, table: TabulatedFlux) -> FluxModel {
        let domain = table.domain();
        let shape = table.shape();
        let mut model = FluxModel {
            name: name.into(),
            kind: Kind::Tabulated(Arc::new(table)),
            domain,
            states: domain,
            shape,
            stationary: Vec::new(),
        };
        model.stationary = model.find_stationary_points();
        model
    }

    /// Load a custom flux from CSV text with header `u,f,df,d2f`.
    pub fn from_csv_str(name: &str, text: &str) -> Result<FluxModel> {
        Ok(Self::from_tabulated(name, TabulatedFlux::from_csv_str(text)?))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Closed range of admissible states.
    pub fn states(&self) -> Interval {
        self.states
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, Kind::Tabulated(_))
    }

    /// Zeros of `f'` inside the admissible states, ascending.
    pub fn stationary_points(&self) -> &[f64] {
        &self.stationary
    }

    /// The same flux restricted to `window ∩ states`.
    pub fn truncated(&self, window: Interval) -> Result<FluxModel> {
        let states = self
            .states
            .intersect(&window)
            .filter(|s| s.width() > 0.0)
            .ok_or_else(|| Error::Domain(format!("truncation {window} misses the states {}", self.states)))?;
        let domain = self.domain.intersect(&window).unwrap_or(states);
        let stationary = self.stationary.iter().copied().filter(|&s| states.contains(s)).collect();
        Ok(FluxModel {
            name: self.name.clone(),
            kind: self.kind.clone(),
            domain,
            states,
            shape: self.shape,
            stationary,
        })
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Burgers => 0.5 * u * u,
            Kind::Greenshields => u * (2.0 - u),
            Kind::BonzaniMussone => {
                if u >= 2.0 {
                    0.0
                } else {
                    u * (-u / (2.0 - u)).exp()
                }
            }
            Kind::KynchMw => -u * (1.0 - u) * (1.0 - u),
            Kind::Tabulated(t) => t.f(u),
        }
    }

    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Burgers => u,
            Kind::Greenshields => 2.0 - 2.0 * u,
            Kind::BonzaniMussone => {
                if u >= 2.0 {
                    return 0.0;
                }
                let d = 2.0 - u;
                let g1 = 2.0 / (d * d);
                (-u / d).exp() * (1.0 - u * g1)
            }
            Kind::KynchMw => -1.0 + 4.0 * u - 3.0 * u * u,
            Kind::Tabulated(t) => t.df(u),
        }
    }

    #[inline]
    pub fn d2f(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Burgers => 1.0,
            Kind::Greenshields => -2.0,
            Kind::BonzaniMussone => {
                if u >= 2.0 {
                    return 0.0;
                }
                let d = 2.0 - u;
                let g1 = 2.0 / (d * d);
                let g2 = 4.0 / (d * d * d);
                (-u / d).exp() * (u * g1 * g1 - 2.0 * g1 - u * g2)
            }
            Kind::KynchMw => 4.0 - 6.0 * u,
            Kind::Tabulated(t) => t.d2f(u),
        }
    }

    pub fn eval(&self, which: Derivative, u: f64) -> f64 {
        match which {
            Derivative::First => self.df(u),
            Derivative::Second => self.d2f(u),
        }
    }

    /// `sup_{u ∈ J} |f'(u)|` or `|f''(u)|`: dense grid plus golden-section polish.
    pub fn sup_norm_on(&self, which: Derivative, j: Interval) -> Result<f64> {
        if !self.domain.contains_interval(&j) {
            return Err(Error::Domain(format!("{j} is not inside the flux domain {}", self.domain)));
        }
        let j = j.intersect(&self.states).ok_or_else(|| Error::Domain(format!("{j} misses the states")))?;
        let g = |u: f64| self.eval(which, u).abs();
        if j.is_finite() {
            let v = sup_finite(&g, j);
            if !v.is_finite() || v > OVERFLOW_GUARD {
                return Err(Error::UnboundedNorm(format!("{j}")));
            }
            return Ok(v);
        }
        // Expanding windows: the sup must settle before the overflow guard.
        let mut last = 0.0;
        let mut prev = 0.0;
        for p in (2..=40).step_by(2) {
            let r = 2f64.powi(p);
            let w = Interval { lo: j.lo.max(-r), hi: j.hi.min(r) };
            if w.width() <= 0.0 {
                continue;
            }
            prev = last;
            last = sup_finite(&g, w);
            if !last.is_finite() || last > OVERFLOW_GUARD {
                return Err(Error::UnboundedNorm(format!("{j}")));
            }
        }
        if last > prev * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::UnboundedNorm(format!("{j}")));
        }
        Ok(last)
    }

    /// Location of the sup of `|f''|` or `|f'|` on a finite interval.
    pub fn argsup_on(&self, which: Derivative, j: Interval) -> Result<(f64, f64)> {
        if !j.is_finite() || !self.domain.contains_interval(&j) {
            return Err(Error::Domain(format!("{j}")));
        }
        let g = |u: f64| self.eval(which, u).abs();
        Ok(optimize::grid_max(&g, &j.linspace(SUP_GRID), SUP_TOP, SUP_TOL))
    }

    fn find_stationary_points(&self) -> Vec<f64> {
        let s = self.states;
        if !s.is_finite() {
            return Vec::new();
        }
        let grid = s.linspace(4097);
        let mut out = Vec::new();
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.df(a), self.df(b));
            if fa == 0.0 {
                if out.last().is_none_or(|&l: &f64| (l - a).abs() > 1e-12) {
                    out.push(a);
                }
                continue;
            }
            if fa * fb < 0.0 {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if self.df(lo) * self.df(m) <= 0.0 {
                        hi = m;
                    } else {
                        lo = m;
                    }
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
        }
        if self.df(s.hi) == 0.0 && out.last().is_none_or(|&l| (l - s.hi).abs() > 1e-12) {
            out.push(s.hi);
        }
        out
    }

    /// Min and max of `f` over `[lo, hi]` from endpoints and stationary points.
    pub fn extrema_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut mn = self.f(lo).min(self.f(hi));
        let mut mx = self.f(lo).max(self.f(hi));
        for &s in &self.stationary {
            if s > lo && s < hi {
                let v = self.f(s);
                mn = mn.min(v);
                mx = mx.max(v);
            }
        }
        (mn, mx)
    }
}

fn sup_finite<G: Fn(f64) -> f64>(g: &G, j: Interval) -> f64 {
    if j.width() == 0.0 {
        return g(j.lo);
    }
    optimize::grid_max(g, &j.linspace(SUP_GRID), SUP_TOP, SUP_TOL).1
}
