//! Truncation of fluxes with unbounded speed (H2(ii)/(iii)).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{Derivative, FluxModel};
use crate::interval::Interval;
use crate::metrics;

/// Direction in which `|f'|` grows without bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// H2(ii): `i₊ = +∞`.
    Up,
    /// H2(iii): `i₋ = −∞`.
    Down,
}

const PROBES: [i32; 9] = [4, 8, 12, 16, 20, 24, 28, 32, 36];

fn growth_ratio(model: &FluxModel, g: Growth, u: f64) -> Option<(f64, f64)> {
    let dom = model.domain();
    let span = match g {
        Growth::Up => Interval { lo: dom.lo, hi: u },
        Growth::Down => Interval { lo: u, hi: dom.hi },
    };
    let d2 = model.sup_norm_on(Derivative::Second, span).ok()?;
    let d1 = model.df(u).abs();
    Some((d1, if d2 > 0.0 { d1 / d2 } else { f64::INFINITY }))
}

fn grows(model: &FluxModel, g: Growth) -> bool {
    let dom = model.domain();
    let open = match g {
        Growth::Up => dom.hi == f64::INFINITY,
        Growth::Down => dom.lo == f64::NEG_INFINITY,
    };
    if !open {
        return false;
    }
    let sign = if g == Growth::Up { 1.0 } else { -1.0 };
    let mut last = (0.0, 0.0);
    for (i, &j) in PROBES.iter().enumerate() {
        let Some((d1, r)) = growth_ratio(model, g, sign * 2f64.powi(j)) else {
            return false;
        };
        if i > 0 && (d1 <= last.0 || r < last.1) {
            return false;
        }
        last = (d1, r);
    }
    // both |f'| and the ratio must be large at the last probe
    last.0 > 1e6 && last.1 > 1e6
}

/// Which of H2(ii)/(iii) holds numerically, preferring (ii).
pub fn h2_growth(model: &FluxModel) -> Option<Growth> {
    [Growth::Up, Growth::Down].into_iter().find(|&g| grows(model, g))
}

/// A truncation point and the truncated flux built from it.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub u0: f64,
    pub growth: Growth,
    pub model: FluxModel,
    /// `[|f|]_{I',u0}` for each interval.
    pub brackets: Vec<f64>,
    pub norm_d2f: f64,
}

/// Smallest `u0 = ±u_base·2ʲ` meeting the time and slope conditions for every `(I', ‖p'‖)`.
///
/// Conditions: `T > Σ (b−a)/[|f|]_{I'ᵢ,u0}` and `‖pᵢ'‖ < [|f|]_{I'ᵢ,u0}/((b−a)‖f''‖)`,
/// with `‖f''‖` taken over the truncated states.
pub fn u0_search(model: &FluxModel, data: &[(Interval, f64)], len: f64, horizon: f64) -> Result<Truncation> {
    if data.is_empty() {
        return Err(Error::Invalid("u0 search needs at least one profile".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::Invalid(format!("T must be positive, got {horizon}")));
    }
    let growth = h2_growth(model)
        .ok_or_else(|| Error::H2Violation(format!("{} has no unbounded growth direction", model.name())))?;
    let lo = data.iter().map(|d| d.0.lo).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|d| d.0.hi).fold(f64::NEG_INFINITY, f64::max);
    let (edge, sign) = match growth {
        Growth::Up => (hi, 1.0),
        Growth::Down => (lo, -1.0),
    };
    let base = edge.abs().max(1.0);
    for j in 1..=60 {
        let u0 = sign * base * 2f64.powi(j);
        let window = match growth {
            Growth::Up => Interval { lo, hi: u0 },
            Growth::Down => Interval { lo: u0, hi },
        };
        let trunc = model.truncated(window)?;
        let norm_d2f = trunc.sup_norm_on(Derivative::Second, trunc.states())?;
        let mut brackets = Vec::with_capacity(data.len());
        for &(iv, _) in data {
            brackets.push(metrics::bracket_norm_truncated(model, iv, u0)?.value);
        }
        if brackets.iter().any(|v| !v.is_finite()) {
            return Err(Error::H2Violation(format!("bracket diverged at u0 = {u0}")));
        }
        if brackets.iter().any(|&v| v <= 0.0) {
            continue;
        }
        let t_star: f64 = brackets.iter().map(|v| len / v).sum();
        let slopes_ok = data.iter().zip(&brackets).all(|(&(_, s), &v)| s * len * norm_d2f < v);
        if horizon > t_star && slopes_ok {
            return Ok(Truncation { u0, growth, model: trunc, brackets, norm_d2f });
        }
    }
    Err(Error::H2Violation(format!(
        "no truncation up to {}·2^60 meets T = {horizon}",
        base
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    #[test]
    fn burgers_grows_upward() {
        assert_eq!(h2_growth(&FluxModel::builtin("burgers").unwrap()), Some(Growth::Up));
        assert_eq!(h2_growth(&FluxModel::builtin("lwr_greenshields").unwrap()), None);
    }

    #[test]
    fn burgers_search_matches_closed_form() {
        let b = FluxModel::builtin("burgers").unwrap();
        let t = u0_search(&b, &[(iv(0.0, 1.0), 10.0)], 1.0, 0.1).unwrap();
        // [|f|] = (u0 − 1)/2 must exceed 10 on both counts: u0 > 21
        assert_eq!(t.u0, 32.0);
        assert!((t.brackets[0] - 15.5).abs() < 1e-6);
        let t = u0_search(&b, &[(iv(0.0, 1.0), 0.0)], 1.0, 1e6).unwrap();
        assert_eq!(t.u0, 2.0);
    }

    #[test]
    fn bounded_speed_is_rejected() {
        let f3 = FluxModel::builtin("kynch_mw").unwrap();
        assert!(matches!(u0_search(&f3, &[(iv(0.7, 0.9), 0.0)], 1.0, 1.0), Err(Error::H2Violation(_))));
    }
}
