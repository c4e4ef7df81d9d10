use serde::{Deserialize, Serialize};

use super::signal::{ControlSignal, SignalBuilder};
use crate::error::{Error, Result};
use crate::flux::{Derivative, FluxModel, Shape};
use crate::interval::Interval;
use crate::metrics;
use crate::profile::{extend_profile, ExtendedProfile, ProfileC1, SideRule};

/// Which derivative hypothesis the synthesis relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `‖ū'‖` bounded (any flux).
    FullBound,
    /// Only the shock-forming part of `ū'` bounded (convex or concave flux).
    OneSided,
}

/// Direction the plateau travels to cover `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Travel {
    /// Positive chord speed; `[a, b]` is filled from the left plateau `α₋`.
    Right,
    /// Negative chord speed; filled from `α₊`.
    Left,
}

/// A null-controllability problem for one profile.
#[derive(Debug, Clone, Copy)]
pub struct NullProblem<'a> {
    pub model: &'a FluxModel,
    pub profile: &'a ProfileC1,
    /// State interval `I'` containing the image of the profile.
    pub interval: Interval,
    pub horizon: f64,
    pub rho: f64,
    pub mode: BoundMode,
    /// Final constant `w*`; `None` stops at `T₁` with `w* = α + k̄`.
    pub target: Option<f64>,
}

/// Every parameter of the construction together with its claimed bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisCertificate {
    pub a: f64,
    pub b: f64,
    pub horizon: f64,
    pub interval: Interval,
    pub mode: BoundMode,
    pub rho: f64,
    pub bracket: f64,
    pub eps1: f64,
    pub t0: f64,
    pub tau1: f64,
    pub t1: f64,
    pub k_bar: f64,
    pub h_bar: f64,
    pub alpha: f64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub travel: Travel,
    pub w_star: f64,
    /// `c₁ = ε₁(b−a)/(2T₀)`; the chosen shift clears `[|f|] − c₁/2`.
    pub c1_margin: f64,
    pub argsup_c1: f64,
    pub k_bar_envelope: f64,
    pub norm_df: f64,
    pub norm_d2f: f64,
    pub working_interval: Interval,
    pub extension_image: Interval,
    pub extension_width: f64,
    /// `[|f|]/((b−a)‖f''‖)`.
    pub slope_bound: f64,
    /// Slope measure of the extended profile in the active mode.
    pub slope_measured: f64,
    pub profile_sup: f64,
    pub profile_tv: f64,
    pub profile_tv_neg: f64,
    /// `sup ⌊ū'⌋₋` (convex) or `sup ⌊ū'⌋₊` (concave); `‖ū'‖` in full mode.
    pub profile_slope: f64,
    pub bound_c1: f64,
    pub claimed_h_sup: f64,
    pub claimed_h_tv: f64,
    pub claimed_h_envelope: f64,
    pub claimed_u_sup: f64,
    pub claimed_u_tv: f64,
    /// Lower bound on `1/|z₁|` along characteristics up to `T₁`.
    pub riccati_floor: f64,
}

/// Selected parameters plus the extended profile they were computed for.
#[derive(Debug, Clone)]
pub struct NullPlan {
    pub cert: SynthesisCertificate,
    pub ext: ExtendedProfile,
}

fn side_rule(model: &FluxModel, mode: BoundMode) -> Result<SideRule> {
    match (mode, model.shape()) {
        (BoundMode::FullBound, _) => Ok(SideRule::TwoSided),
        (BoundMode::OneSided, Shape::Convex) => Ok(SideRule::LowerOnly),
        (BoundMode::OneSided, Shape::Concave) => Ok(SideRule::UpperOnly),
        (BoundMode::OneSided, Shape::General) => {
            Err(Error::Invalid("one-sided slope bounds need a convex or concave flux".into()))
        }
    }
}

/// Choose `ε₁, T₀, k̄, h̄, α, τ₁` for the null control of `p.profile`.
///
/// `ε₁` is the largest dyadic `2⁻ʲ` (`j ≤ 20`) with `T > T₀(ε₁)`, the slope
/// condition, an admissible extension and an admissible shift.
pub fn select_parameters(p: &NullProblem) -> Result<NullPlan> {
    let model = p.model;
    let dom = p.profile.domain();
    let (a, b) = (dom.lo, dom.hi);
    let len = b - a;
    let rule = side_rule(model, p.mode)?;
    let v = metrics::bracket_norm(model, p.interval, 1e-10)?.value;
    if v.is_infinite() {
        return Err(Error::Feasibility(format!(
            "[|f|] on {} is unbounded; truncate the flux with the u0 search first",
            p.interval
        )));
    }
    if v <= 0.0 {
        return Err(Error::NotControllable(format!("[|f|] vanishes on {}", p.interval)));
    }
    let t_star = len / v;
    if p.horizon <= t_star {
        return Err(Error::Feasibility(format!("T = {} does not exceed T* = {t_star}", p.horizon)));
    }
    let states = model.states();
    let norm_d2f = model.sup_norm_on(Derivative::Second, states)?;
    let slope_bound = if norm_d2f > 0.0 { v / (len * norm_d2f) } else { f64::INFINITY };
    let profile_slope = rule.measure(p.profile);
    let var = p.profile.variation();
    let mut last_err = Error::Feasibility(format!("T = {} too small or slope bound violated", p.horizon));

    for j in 1..=20 {
        let eps1 = 0.5f64.powi(j);
        let t0 = t_star * (1.0 + 2.0 * eps1);
        if p.horizon <= t0 {
            continue;
        }
        let bound = slope_bound / (1.0 + 3.0 * eps1);
        if profile_slope >= bound {
            continue;
        }
        if p.mode == BoundMode::OneSided && p.rho > 0.0 && slope_bound - p.rho >= bound {
            continue;
        }
        let keep = p.interval.intersect(&states).unwrap_or(states);
        let ext = match extend_profile(p.profile, eps1, bound, rule, keep)
            .or_else(|_| extend_profile(p.profile, eps1, bound, rule, states))
        {
            Ok(e) => e,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        let im = ext.image();
        let c1_margin = eps1 * len / (2.0 * t0);
        let k_bar = match metrics::minimal_shift(model, im, v - 0.5 * c1_margin)? {
            Some(k) => k,
            None => {
                last_err = Error::Feasibility(format!(
                    "no shift k with Im + k inside the states keeps the chord speed above {}",
                    v - 0.5 * c1_margin
                ));
                continue;
            }
        };
        let speed = metrics::chord(model, im.midpoint(), k_bar);
        let travel = if speed > 0.0 { Travel::Right } else { Travel::Left };
        let alpha = match travel {
            Travel::Right => ext.alpha_minus(),
            Travel::Left => ext.alpha_plus(),
        };
        let working = im.union_hull(&im.shift(k_bar));
        let norm_df = model.sup_norm_on(Derivative::First, working)?;
        let mut tau_cap = (eps1 * len / v).min(0.5 * (p.horizon - t0));
        if norm_df > 0.0 {
            tau_cap = tau_cap.min(eps1 * len / (6.0 * norm_df));
        }
        let tau1 = 0.5 * tau_cap;
        let t1 = t0 + tau1;
        let h_bar = k_bar / t0;
        let w_star = p.target.unwrap_or(alpha + k_bar);
        let argsup_c1 = metrics::argsup_k(model, p.interval, c1_margin).map(f64::abs).unwrap_or(f64::NAN);
        let ext_var = ext.whole().variation();
        let ubar_sup = var.sup_norm.max(alpha.abs());
        let t = p.horizon;
        let kk = k_bar.abs();
        let bound_c1 = ((6.0 * t + 3.0 * t0) * (1.0 + kk) / (t0 * (t - t0)))
            .max(8.0 * (1.0 + kk) / (t - t0))
            .max(4.0 * (2.0 + len) + kk);
        let tail = w_star - alpha - k_bar;
        let claimed_h_tv = 2.0 * kk / t0 + if p.target.is_some() { 8.0 * tail.abs() / (3.0 * (t - t1)) } else { 0.0 };
        let claimed_h_envelope =
            ((6.0 * t + 3.0 * t0) / (t0 * (t - t0))).max(8.0 / (t - t0)) * (kk + ubar_sup.max(w_star.abs()));
        let cert = SynthesisCertificate {
            a,
            b,
            horizon: t,
            interval: p.interval,
            mode: p.mode,
            rho: p.rho,
            bracket: v,
            eps1,
            t0,
            tau1,
            t1,
            k_bar,
            h_bar,
            alpha,
            alpha_minus: ext.alpha_minus(),
            alpha_plus: ext.alpha_plus(),
            travel,
            w_star,
            c1_margin,
            argsup_c1,
            k_bar_envelope: argsup_c1 + 1.0,
            norm_df,
            norm_d2f,
            working_interval: working,
            extension_image: im,
            extension_width: ext.width_left().max(ext.width_right()),
            slope_bound,
            slope_measured: rule.measure(ext.whole()),
            profile_sup: var.sup_norm,
            profile_tv: var.tv,
            profile_tv_neg: var.tv_neg,
            profile_slope,
            bound_c1,
            claimed_h_sup: 0.5 * claimed_h_tv,
            claimed_h_tv,
            claimed_h_envelope,
            claimed_u_sup: kk + 4.0 * ubar_sup + w_star.abs(),
            claimed_u_tv: ext_var.tv,
            riccati_floor: len * eps1 * norm_d2f / (2.0 * v),
        };
        return Ok(NullPlan { cert, ext });
    }
    Err(last_err)
}

/// Control on `[0, T₁]`: ramp up, hold `h̄`, ramp down.
pub fn build_stage_control(cert: &SynthesisCertificate) -> Result<ControlSignal> {
    let mut s = SignalBuilder::new();
    s.ramp_to(cert.tau1, cert.h_bar).hold(cert.t0 - cert.tau1).ramp_to(cert.tau1, 0.0);
    s.build()
}

/// Full control on `[0, T]` steering to the constant `w*`.
pub fn build_null_control(cert: &SynthesisCertificate, horizon: f64) -> Result<ControlSignal> {
    if horizon <= cert.t1 {
        return Err(Error::Feasibility(format!("T = {horizon} must exceed T₁ = {}", cert.t1)));
    }
    let mut s = SignalBuilder::new();
    s.ramp_to(cert.tau1, cert.h_bar).hold(cert.t0 - cert.tau1).ramp_to(cert.tau1, 0.0);
    let amount = cert.w_star - cert.alpha - cert.k_bar;
    if amount != 0.0 {
        s.transfer(horizon - cert.t1, amount);
    } else {
        s.hold(horizon - cert.t1);
    }
    s.build()
}

impl SynthesisCertificate {
    /// Restate every defining relation; returns the violated ones.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let len = self.b - self.a;
        let tol = 1e-12 * (1.0 + self.t1.abs() + self.k_bar.abs());
        let mut check = |ok: bool, what: String| {
            if !ok {
                out.push(what);
            }
        };
        let t0 = len * (1.0 + 2.0 * self.eps1) / self.bracket;
        check((self.t0 - t0).abs() <= tol, format!("T0 = {} vs {t0}", self.t0));
        check((self.t1 - self.t0 - self.tau1).abs() <= tol, "T1 = T0 + tau1".into());
        let mut cap = (self.eps1 * len / self.bracket).min(self.horizon - self.t0);
        if self.norm_df > 0.0 {
            cap = cap.min(self.eps1 * len / (6.0 * self.norm_df));
        }
        check(self.tau1 > 0.0 && self.tau1 < cap, format!("tau1 = {} not below {cap}", self.tau1));
        check((self.h_bar * self.t0 - self.k_bar).abs() <= tol, "h_bar = k_bar / T0".into());
        check(self.horizon > self.t0, "T > T0".into());
        check(
            self.slope_measured < self.slope_bound / (1.0 + 3.0 * self.eps1),
            format!("extension slope {} vs {}", self.slope_measured, self.slope_bound / (1.0 + 3.0 * self.eps1)),
        );
        check(
            (self.c1_margin - self.eps1 * self.bracket / (2.0 * (1.0 + 2.0 * self.eps1))).abs() <= tol,
            "c1 = eps1 [|f|] / (2 (1 + 2 eps1))".into(),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    #[test]
    fn greenshields_stage_one() {
        let f1 = FluxModel::builtin("lwr_greenshields").unwrap();
        let u = ProfileC1::from_fn(0.0, 1.0, 33, |x| 0.3 + 0.1 * x, |_| 0.1).unwrap();
        let prob = NullProblem {
            model: &f1,
            profile: &u,
            interval: iv(0.0, 0.75),
            horizon: 2.5,
            rho: 0.0,
            mode: BoundMode::FullBound,
            target: Some(0.0),
        };
        let plan = select_parameters(&prob).unwrap();
        let c = &plan.cert;
        assert!(c.eps1 <= 0.125);
        assert!((c.t0 - 2.0 * (1.0 + 2.0 * c.eps1)).abs() < 1e-9);
        assert!(c.violations().is_empty(), "{:?}", c.violations());
        assert_eq!(c.travel, Travel::Right);
        let h = build_null_control(c, 2.5).unwrap();
        assert!((h.primitive(c.t1) - c.t0 * c.h_bar).abs() < 1e-12);
        let tail = h.total_integral() - h.primitive(c.t1);
        assert!((tail + (c.alpha + c.t0 * c.h_bar - c.w_star)).abs() < 1e-12);
        assert!(h.value(0.0) == 0.0 && h.value(2.5).abs() < 1e-12);
        assert!((h.total_variation() - c.claimed_h_tv).abs() < 1e-12);
        assert!(h.sup_norm() <= h.total_variation() / 2.0 + 1e-12);
    }

    #[test]
    fn horizon_at_critical_time_fails() {
        let f1 = FluxModel::builtin("lwr_greenshields").unwrap();
        let u = ProfileC1::constant(0.3, 0.0, 1.0).unwrap();
        let prob = NullProblem {
            model: &f1,
            profile: &u,
            interval: iv(0.0, 0.75),
            horizon: 2.0,
            rho: 0.0,
            mode: BoundMode::FullBound,
            target: Some(0.0),
        };
        assert!(matches!(select_parameters(&prob), Err(Error::Feasibility(_))));
    }

    #[test]
    fn truncated_burgers_from_rest() {
        let b = FluxModel::builtin("burgers").unwrap().truncated(iv(-1.0, 10.0)).unwrap();
        let u = ProfileC1::constant(0.0, 0.0, 1.0).unwrap();
        let prob = NullProblem {
            model: &b,
            profile: &u,
            interval: iv(-0.5, 0.5),
            horizon: 1.0,
            rho: 0.0,
            mode: BoundMode::FullBound,
            target: Some(0.0),
        };
        let c = select_parameters(&prob).unwrap().cert;
        assert_eq!(c.travel, Travel::Right);
        assert_eq!(c.alpha, 0.0);
        assert!(c.k_bar > 0.0);
        assert!(c.violations().is_empty());
    }

    #[test]
    fn unbounded_bracket_asks_for_truncation() {
        let b = FluxModel::builtin("burgers").unwrap();
        let u = ProfileC1::constant(0.0, 0.0, 1.0).unwrap();
        let prob = NullProblem {
            model: &b,
            profile: &u,
            interval: iv(-0.5, 0.5),
            horizon: 1.0,
            rho: 0.0,
            mode: BoundMode::FullBound,
            target: Some(0.0),
        };
        assert!(matches!(select_parameters(&prob), Err(Error::Feasibility(_))));
    }
}
