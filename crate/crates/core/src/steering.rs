//! Classical verification of a composite control, leg by leg.
//!
//! Leg A runs the null control of `ū` from its extension. During the bridge the
//! state on `[a, b]` is the constant `w₁ + H(t) − H(T₁ᴬ)`. Leg C restarts from
//! the reflected snapshot of the target stage and must end at `ψ` on `[a, b]`.
//! Restarting from glued data is what the free boundary values allow.

use rayon::prelude::*;
use serde::Serialize;

use crate::characteristics::{solve_classical, verify_no_blowup_bound, BlowupReport, ClassicalOptions, ClassicalSolution, Side};
use crate::control::{CompositionPlan, ControlSignal};
use crate::interval::Interval;
use crate::profile::ProfileC1;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SteeringOptions {
    /// Retained times per leg.
    pub samples: usize,
    /// Points of `[a, b]` used for errors and bounds.
    pub check_points: usize,
    pub max_gap: f64,
}

impl Default for SteeringOptions {
    fn default() -> Self {
        SteeringOptions { samples: 40, check_points: 200, max_gap: 1.0 / 400.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LegSummary {
    pub name: String,
    pub t_start: f64,
    pub t_end: f64,
    pub characteristics: usize,
    pub max_gap: f64,
    pub min_gap: f64,
}

/// Measured quantities of a classical steering run.
#[derive(Debug, Clone, Serialize)]
pub struct SteeringOutcome {
    pub legs: Vec<LegSummary>,
    /// `sup |u(T₁ᴬ) − w₁|` on `[a, b]`.
    pub plateau_error_a: f64,
    /// `sup |u₂(T₁ᶜ) − w₂|` for the reflected target stage.
    pub plateau_error_c: f64,
    /// `sup |u(T) − ψ|` on `[a, b]`.
    pub terminal_error: f64,
    /// Leg C against the time-reversed target stage.
    pub reversal_error: f64,
    pub riccati_a: BlowupReport,
    pub riccati_c: BlowupReport,
    pub measured_h: f64,
    /// `sup_t ‖u(t)‖ + TV(u(t))` on `[a, b]` over the sampled times.
    pub measured_u: f64,
    pub max_abs_u: f64,
}

/// Output of a run: measurements plus the data needed for dumps.
pub struct SteeringRun {
    pub outcome: SteeringOutcome,
    pub leg_a: ClassicalSolution,
    pub leg_c: ClassicalSolution,
    /// Forward solution of the reflected target stage.
    pub target_stage: ClassicalSolution,
    /// `(t, u(t, a), u(t, b))` on `[0, T]`.
    pub traces: Vec<(f64, f64, f64)>,
    /// `(t, [(x, u)])` on `[0, T]`.
    pub snapshots: Vec<(f64, Vec<(f64, f64)>)>,
}

pub(crate) fn options(span: Interval, horizon: f64, o: &SteeringOptions) -> ClassicalOptions {
    let mut c = ClassicalOptions::for_span(span).with_samples(horizon, o.samples);
    c.max_gap = o.max_gap * span.width();
    c
}

fn norm_plus_tv(samples: &[(f64, f64)]) -> (f64, f64) {
    let sup = samples.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let tv: f64 = samples.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum();
    (sup, tv)
}

fn leg_summary(name: &str, t_start: f64, sol: &ClassicalSolution) -> LegSummary {
    LegSummary {
        name: name.into(),
        t_start,
        t_end: t_start + sol.horizon(),
        characteristics: sol.fan_size(),
        max_gap: sol.max_gap(),
        min_gap: sol.min_gap(),
    }
}

/// Run the three legs of `plan` with the characteristics solver.
pub fn run_classical(plan: &CompositionPlan, psi: &ProfileC1, o: &SteeringOptions) -> Result<SteeringRun> {
    let span = Interval::new(plan.a, plan.b)?;
    let model = &plan.model;
    let n = o.check_points;

    let h_a = plan.control_a()?;
    let ta = plan.stage_a.t1;
    let leg_a = solve_classical(model, plan.ext_a.whole(), &h_a, ta, span, &options(span, ta, o))?;
    let riccati_a = verify_no_blowup_bound(&leg_a, &plan.stage_a)?;
    let plateau_error_a = leg_a.terminal_error(ta, |_| plan.w1, n)?;

    let h_c = plan.control_c()?;
    let tc = plan.stage_c.t1;
    let target_stage = solve_classical(model, plan.ext_c.whole(), &h_c, tc, span, &options(span, tc, o))?;
    let riccati_c = verify_no_blowup_bound(&target_stage, &plan.stage_c)?;
    let plateau_error_c = target_stage.terminal_error(tc, |_| plan.w2, n)?;

    // glued restart: reflected target-stage snapshot at T₁ᶜ
    let restart: ProfileC1 = target_stage.snapshot_profile(tc)?.reflect_across(plan.a + plan.b);
    let h_rev = h_c.reversed_negated();
    let leg_c = solve_classical(model, &restart, &h_rev, tc, span, &options(span, tc, o))?;
    let terminal_error = leg_c.terminal_error(tc, |x| psi.value(x), n)?;

    let mut reversal_error: f64 = 0.0;
    for &t in leg_c.times().iter().step_by(4) {
        let back = (tc - t).max(0.0);
        let pairs: Vec<Result<f64>> = span
            .linspace(n / 8 + 1)
            .par_iter()
            .map(|&x| Ok((leg_c.eval_exact(t, x)? - target_stage.eval_exact(back, plan.a + plan.b - x)?).abs()))
            .collect();
        for e in pairs {
            reversal_error = reversal_error.max(e?);
        }
    }

    // full-horizon traces, snapshots and bounds
    let t_bridge = plan.bridge_start;
    let t_c0 = plan.bridge_end;
    let hb = plan.control_b()?;
    let mut traces = Vec::new();
    let mut snapshots = Vec::new();
    for &t in leg_a.times() {
        let s = leg_a.sample(t, n)?;
        traces.push((t, s[0].1, s[s.len() - 1].1));
        snapshots.push((t, s));
    }
    let bridge_steps = o.samples.max(1);
    for i in 1..bridge_steps {
        let t = t_bridge + (t_c0 - t_bridge) * i as f64 / bridge_steps as f64;
        let u = plan.w1 + hb.primitive(t - t_bridge);
        traces.push((t, u, u));
        snapshots.push((t, span.linspace(n + 1).into_iter().map(|x| (x, u)).collect()));
    }
    for &t in leg_c.times() {
        let s = leg_c.sample(t, n)?;
        traces.push((t_c0 + t, s[0].1, s[s.len() - 1].1));
        snapshots.push((t_c0 + t, s));
    }
    let mut measured_u: f64 = 0.0;
    let mut max_abs_u: f64 = 0.0;
    for (_, s) in &snapshots {
        let (sup, tv) = norm_plus_tv(s);
        measured_u = measured_u.max(sup + tv);
        max_abs_u = max_abs_u.max(sup);
    }
    let full = full_control(plan)?;
    let outcome = SteeringOutcome {
        legs: vec![leg_summary("initial", 0.0, &leg_a), leg_summary("target", t_c0, &leg_c)],
        plateau_error_a,
        plateau_error_c,
        terminal_error,
        reversal_error,
        riccati_a,
        riccati_c,
        measured_h: full.sup_norm() + full.total_variation(),
        measured_u,
        max_abs_u,
    };
    Ok(SteeringRun { outcome, leg_a, leg_c, target_stage, traces, snapshots })
}

/// The composite signal on `[0, T]` rebuilt from the plan.
pub fn full_control(plan: &CompositionPlan) -> Result<ControlSignal> {
    plan.control_a()?.concat(&plan.control_b()?)?.concat(&plan.control_c()?.reversed_negated())
}

/// `u(t, a⁺)`, `u(t, b⁻)` from one leg.
pub fn leg_traces(sol: &ClassicalSolution) -> Result<Vec<(f64, f64, f64)>> {
    let l = sol.trace(Side::Left)?;
    let r = sol.trace(Side::Right)?;
    if l.len() != r.len() {
        return Err(Error::Invalid("trace lengths differ".into()));
    }
    Ok(l.into_iter().zip(r).map(|((t, ul), (_, ur))| (t, ul, ur)).collect())
}
