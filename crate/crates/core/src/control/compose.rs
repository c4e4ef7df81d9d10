//! Full steering `ū → ψ`: null control of `ū`, a bridge between the two
//! constants, and the time reversal of the null control of `ψ(a + b − ·)`.

use serde::Serialize;

use super::signal::{ControlSignal, SignalBuilder};
use super::synthesis::{build_stage_control, select_parameters, BoundMode, NullPlan, NullProblem, SynthesisCertificate};
use super::u0::{u0_search, Growth};
use crate::error::{Error, Result};
use crate::flux::{FluxModel, Shape};
use crate::interval::Interval;
use crate::metrics;
use crate::profile::{ExtendedProfile, ProfileC1};

/// Share of the slack `T − T*` given to each null-control stage; the bridge gets the rest.
pub const STAGE_SHARE: f64 = 0.4;
/// Padding around the image when no state interval is given.
pub const IMAGE_PAD: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
pub struct SteeringProblem<'a> {
    pub model: &'a FluxModel,
    pub ubar: &'a ProfileC1,
    pub psi: &'a ProfileC1,
    /// `I'₁`; defaults to the padded image of `ū` (clipped to the states).
    pub initial_interval: Option<Interval>,
    pub target_interval: Option<Interval>,
    pub horizon: f64,
    pub rho: f64,
    pub mode: BoundMode,
}

/// Everything needed to rebuild and verify the composite control.
#[derive(Debug, Clone, Serialize)]
pub struct CompositionPlan {
    #[serde(skip)]
    pub model: FluxModel,
    /// Truncation point when the flux speed is unbounded.
    pub truncation: Option<f64>,
    pub growth: Option<Growth>,
    pub a: f64,
    pub b: f64,
    pub horizon: f64,
    pub initial_interval: Interval,
    pub target_interval: Interval,
    pub t_star1: f64,
    pub t_star2: f64,
    pub slack: f64,
    /// Null control of `ū` on `[0, T₁ᴬ]`.
    pub stage_a: SynthesisCertificate,
    /// Null control of the reflected target, run backwards on `[T − T₁ᶜ, T]`.
    pub stage_c: SynthesisCertificate,
    #[serde(skip)]
    pub ext_a: ExtendedProfile,
    #[serde(skip)]
    pub ext_c: ExtendedProfile,
    #[serde(skip)]
    pub psi_reflected: ProfileC1,
    pub w1: f64,
    pub w2: f64,
    pub bridge_start: f64,
    pub bridge_end: f64,
    pub bound_c1: f64,
    /// Slope terms entering the state bound (one-sided parts or full norms).
    pub ubar_slope: f64,
    pub psi_slope: f64,
    pub ubar_sup: f64,
    pub psi_sup: f64,
    /// `C₁·(1 + ‖ū‖ + ‖ψ‖)`.
    pub claimed_h: f64,
    /// `C₁·(‖ū‖ + ‖ψ‖ + slope terms)`.
    pub claimed_u: f64,
}

impl CompositionPlan {
    /// Forward stage control (`[0, T₁ᴬ]`).
    pub fn control_a(&self) -> Result<ControlSignal> {
        build_stage_control(&self.stage_a)
    }

    /// Forward null control of the reflected target (`[0, T₁ᶜ]`).
    pub fn control_c(&self) -> Result<ControlSignal> {
        build_stage_control(&self.stage_c)
    }

    /// Bridge on `[0, bridge_end − bridge_start]` moving `w₁` to `w₂`.
    pub fn control_b(&self) -> Result<ControlSignal> {
        let len = self.bridge_end - self.bridge_start;
        let mut s = SignalBuilder::new();
        s.transfer(len, self.w2 - self.w1);
        s.build()
    }
}

/// The image padded by [`IMAGE_PAD`] and clipped to the states.
pub fn default_interval(model: &FluxModel, im: Interval) -> Result<Interval> {
    let padded = Interval { lo: im.lo - IMAGE_PAD, hi: im.hi + IMAGE_PAD };
    padded
        .intersect(&model.states())
        .filter(|iv| iv.width() > 0.0)
        .ok_or_else(|| Error::Domain(format!("image {im} lies outside the states {}", model.states())))
}

fn slope_term(model: &FluxModel, mode: BoundMode, p: &ProfileC1, target: bool) -> f64 {
    match (mode, model.shape()) {
        (BoundMode::FullBound, _) | (_, Shape::General) => p.deriv_sup(),
        // ū: the shock-forming part; ψ: the opposite one
        (BoundMode::OneSided, Shape::Convex) => {
            if target {
                p.deriv_pos_sup()
            } else {
                p.deriv_neg_sup()
            }
        }
        (BoundMode::OneSided, Shape::Concave) => {
            if target {
                p.deriv_neg_sup()
            } else {
                p.deriv_pos_sup()
            }
        }
    }
}

/// Build the three-stage control steering `ū` to `ψ` in time `T`.
pub fn compose_full_control(p: &SteeringProblem) -> Result<(ControlSignal, CompositionPlan)> {
    let du = p.ubar.domain();
    let dp = p.psi.domain();
    if (du.lo - dp.lo).abs() > 1e-12 || (du.hi - dp.hi).abs() > 1e-12 {
        return Err(Error::Invalid(format!("ubar lives on {du} but psi on {dp}")));
    }
    let (a, b) = (du.lo, du.hi);
    let len = b - a;
    let i1 = match p.initial_interval {
        Some(iv) => iv,
        None => default_interval(p.model, p.ubar.image())?,
    };
    let i2 = match p.target_interval {
        Some(iv) => iv,
        None => default_interval(p.model, p.psi.image())?,
    };

    let v1 = metrics::bracket_norm(p.model, i1, 1e-10)?.value;
    let v2 = metrics::bracket_norm(p.model, i2, 1e-10)?.value;
    let (model, truncation, growth) = if v1.is_infinite() || v2.is_infinite() {
        let data = [(i1, slope_term(p.model, p.mode, p.ubar, false)), (i2, slope_term(p.model, p.mode, p.psi, true))];
        let t = u0_search(p.model, &data, len, p.horizon)?;
        (t.model, Some(t.u0), Some(t.growth))
    } else {
        (p.model.clone(), None, None)
    };
    let (t_star1, t_star2, t_star) = metrics::controllability_times(&model, i1, i2, a, b)?;
    let slack = p.horizon - t_star;
    if !(slack > 0.0) {
        return Err(Error::Feasibility(format!("T = {} does not exceed T* = {t_star}", p.horizon)));
    }

    let psi_reflected = p.psi.reflect();
    let stage = |profile: &ProfileC1, interval: Interval, t_star_i: f64| -> Result<NullPlan> {
        select_parameters(&NullProblem {
            model: &model,
            profile,
            interval,
            horizon: t_star_i + STAGE_SHARE * slack,
            rho: p.rho,
            mode: p.mode,
            target: None,
        })
    };
    let plan_a = stage(p.ubar, i1, t_star1).map_err(|e| stage_context("initial stage", e))?;
    let plan_c = stage(&psi_reflected, i2, t_star2).map_err(|e| stage_context("target stage", e))?;
    let (ca, cc) = (&plan_a.cert, &plan_c.cert);
    let w1 = ca.w_star;
    let w2 = cc.w_star;
    let bridge_start = ca.t1;
    let bridge_end = p.horizon - cc.t1;
    let bridge = bridge_end - bridge_start;

    let mut s = SignalBuilder::new();
    s.ramp_to(ca.tau1, ca.h_bar).hold(ca.t0 - ca.tau1).ramp_to(ca.tau1, 0.0);
    s.transfer(bridge, w2 - w1);
    let control = s.build()?.concat(&build_stage_control(cc)?.reversed_negated())?;

    let bound_c1 = ca.bound_c1 + cc.bound_c1 + 8.0 * (1.0 + ca.k_bar.abs() + cc.k_bar.abs()) / bridge;
    let ubar_sup = p.ubar.sup_norm();
    let psi_sup = p.psi.sup_norm();
    let ubar_slope = slope_term(&model, p.mode, p.ubar, false);
    let psi_slope = slope_term(&model, p.mode, p.psi, true);
    let plan = CompositionPlan {
        truncation,
        growth,
        a,
        b,
        horizon: p.horizon,
        initial_interval: i1,
        target_interval: i2,
        t_star1,
        t_star2,
        slack,
        stage_a: plan_a.cert.clone(),
        stage_c: plan_c.cert.clone(),
        ext_a: plan_a.ext,
        ext_c: plan_c.ext,
        psi_reflected,
        w1,
        w2,
        bridge_start,
        bridge_end,
        bound_c1,
        ubar_slope,
        psi_slope,
        ubar_sup,
        psi_sup,
        claimed_h: bound_c1 * (1.0 + ubar_sup + psi_sup),
        claimed_u: bound_c1 * (ubar_sup + psi_sup + ubar_slope + psi_slope),
        model,
    };
    Ok((control, plan))
}

fn stage_context(stage: &str, e: Error) -> Error {
    match e {
        Error::Feasibility(m) => Error::Feasibility(format!("{stage}: {m}")),
        Error::ExtensionInfeasible(m) => Error::ExtensionInfeasible(format!("{stage}: {m}")),
        other => other,
    }
}
