//! Entropy-solution steering of BV data through smooth approximations.
//!
//! For each `n` both profiles are mollified with kernel radius `1/n` keeping
//! their one-sided bounds, a classical composite control is synthesized for
//! the smooth pair, and the finite-volume solver runs that control from the
//! original BV state.

use serde::Serialize;

use crate::characteristics::solve_classical;
use crate::control::{compose_full_control, default_interval, BoundMode, CompositionPlan, SteeringProblem};
use crate::flux::{Derivative, FluxModel, Shape};
use crate::control::ControlSignal;
use crate::fv::{cell_averages, fv_window, solve_fv_cells, FvMeta, FvOptions, FvSolution, Grid};
use crate::hypotheses::{check_hypotheses, HypothesisQuery, HypothesisVerdict, Theorem};
use crate::interval::Interval;
use crate::metrics;
use crate::profile::{mollify_one_sided, OneSided, ProfileBV, ProfileC1};
use crate::steering::{full_control, options, SteeringOptions};
use crate::{Error, Result};

/// FV run of a composite control, with the state glued to the plan's restart data.
pub struct FvSteering {
    pub solution: FvSolution,
    /// `∫_a^b |u(T) − ψ|`.
    pub terminal_l1: f64,
    pub max_sup: f64,
    pub max_tv: f64,
    /// `sup_t ‖u(t)‖ + TV(u(t))` on `[a, b]` over the stored times.
    pub measured_u: f64,
}

/// Run `plan` with finite volumes.
///
/// `initial` replaces the smooth initial state on `[a, b]` (the extension is
/// kept outside). At the end of the first stage the exterior is set to `w₁`;
/// at the start of the last one it is set to the reflected target-stage state.
pub fn run_fv(plan: &CompositionPlan, initial: Option<&ProfileBV>, psi: &ProfileBV, dx: f64, samples: usize) -> Result<FvSteering> {
    let span = Interval::new(plan.a, plan.b)?;
    let model = &plan.model;
    let control = full_control(plan)?;

    let h_c = plan.control_c()?;
    let tc = plan.stage_c.t1;
    let so = SteeringOptions::default();
    let target_stage = solve_classical(model, plan.ext_c.whole(), &h_c, tc, span, &options(span, tc, &so))?;
    let restart = target_stage.snapshot_profile(tc)?.reflect_across(plan.a + plan.b);
    let plateau = ProfileC1::constant(plan.w1, plan.a, plan.b)?;

    let ext = plan.ext_a.whole();
    let mut image = ext.image().union_hull(&restart.image()).union_hull(&Interval::point(plan.w1));
    if let Some(p) = initial {
        image = image.union_hull(&p.image());
    }
    let leg = plan.stage_a.t1.max(tc).max(plan.bridge_end - plan.bridge_start);
    let window = fv_window(model, image, &control, span, leg)?;
    let grid = Grid::covering(window, span, dx)?;
    let cells = match initial {
        Some(p) => {
            let mut breaks: Vec<f64> = p.joints().iter().map(|j| j.x).collect();
            breaks.extend(ext.knots().iter().map(|k| k.x));
            breaks.extend([plan.a, plan.b]);
            cell_averages(&grid, |x| if span.contains(x) { p.value(x) } else { ext.value(x) }, &breaks)
        }
        None => crate::fv::averages_c1(&grid, ext),
    };

    let mut o = FvOptions::new(dx);
    o.window = Some(window);
    o.snapshots = (1..samples).map(|i| plan.horizon * i as f64 / samples as f64).collect();
    o.snapshots.extend([plan.bridge_start, plan.bridge_end]);
    o.entropy_ks = image.linspace(7)[1..6].to_vec();
    o.exterior_resets = vec![(plan.bridge_start, plateau), (plan.bridge_end, restart)];
    let solution = solve_fv_cells(model, grid, cells, &control, plan.horizon, span, &o)?;

    let terminal_l1 = solution.verify_terminal(psi);
    let (mut max_sup, mut max_tv, mut measured_u) = (0.0f64, 0.0f64, 0.0f64);
    for (_, c) in solution.snapshots() {
        let (sup, tv) = solution.sup_and_tv(c);
        max_sup = max_sup.max(sup);
        max_tv = max_tv.max(tv);
        measured_u = measured_u.max(sup + tv);
    }
    Ok(FvSteering { solution, terminal_l1, max_sup, max_tv, measured_u })
}

#[derive(Debug, Clone, Copy)]
pub struct BvProblem<'a> {
    pub model: &'a FluxModel,
    pub ubar: &'a ProfileBV,
    pub psi: &'a ProfileBV,
    pub initial_interval: Option<Interval>,
    pub target_interval: Option<Interval>,
    pub horizon: f64,
    pub rho: f64,
}

/// One line of the convergence table.
#[derive(Debug, Clone, Serialize)]
pub struct BvRow {
    pub n: usize,
    pub kernel_radius: f64,
    pub mollification_error_ubar: f64,
    pub mollification_error_psi: f64,
    pub mollification_error: f64,
    pub dx: f64,
    pub terminal_l1: f64,
    /// `mollification_error + 10·dx·(TV(ū) + TV(ψ))`.
    pub allowed_l1: f64,
    pub terminal_ok: bool,
    pub claimed_h: f64,
    pub measured_h: f64,
    pub claimed_u: f64,
    pub measured_u: f64,
    pub max_sup: f64,
    pub max_tv: f64,
    pub bounds_ok: bool,
    pub tv_increase: f64,
    pub tv_tolerance: f64,
    pub entropy_violation: f64,
    /// `‖u_n(T) − u_prev(T)‖_{L¹(a,b)}` against the previous row.
    pub distance_to_previous: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BvTable {
    pub theorem: Theorem,
    pub verdict: HypothesisVerdict,
    pub initial_interval: Interval,
    pub target_interval: Interval,
    /// One-sided bound kept by the mollification of each profile.
    pub bound_ubar: f64,
    pub bound_psi: f64,
    pub tv_data: f64,
    pub rows: Vec<BvRow>,
    /// Control and FV output of the last `n`.
    #[serde(skip)]
    pub finest: Option<BvArtifacts>,
}

#[derive(Debug, Clone)]
pub struct BvArtifacts {
    pub control: ControlSignal,
    pub snapshot_csv: String,
    pub meta: FvMeta,
}

/// Sides of the one-sided bounds: `(ū, ψ)`.
fn sides(model: &FluxModel) -> Result<(OneSided, OneSided)> {
    match model.shape() {
        Shape::Convex => Ok((OneSided::Lower, OneSided::Upper)),
        Shape::Concave => Ok((OneSided::Upper, OneSided::Lower)),
        Shape::General => Err(Error::Invalid("BV steering needs a convex or concave flux".into())),
    }
}

fn dini(p: &ProfileBV, side: OneSided) -> f64 {
    match side {
        OneSided::Upper => p.d_plus(),
        OneSided::Lower => p.d_minus(),
    }
}

/// Mollify, synthesize and FV-solve for each `n`.
pub fn run_bv_pipeline(p: &BvProblem, ns: &[usize], dx: f64) -> Result<BvTable> {
    let (side_u, side_p) = sides(p.model)?;
    let i1 = match p.initial_interval {
        Some(iv) => iv,
        None => default_interval(p.model, p.ubar.image())?,
    };
    let i2 = match p.target_interval {
        Some(iv) => iv,
        None => default_interval(p.model, p.psi.image())?,
    };
    let bounded = p.model.sup_norm_on(Derivative::First, p.model.states()).map_or(false, |v| v.is_finite());
    let theorem = if bounded { Theorem::Theorem5 } else { Theorem::Theorem6 };
    let verdict = check_hypotheses(&HypothesisQuery {
        theorem,
        model: p.model,
        ubar: p.ubar,
        psi: p.psi,
        initial_interval: i1,
        target_interval: i2,
        horizon: p.horizon,
        rho: p.rho,
    })?;
    let (du, dp) = (dini(p.ubar, side_u), dini(p.psi, side_p));
    if du.is_infinite() || dp.is_infinite() {
        return Err(Error::OneSidedViolation(format!(
            "forbidden jump sign: one-sided bound of ubar = {du}, of psi = {dp}"
        )));
    }
    if !verdict.holds {
        let list: Vec<&str> = verdict.violated_conditions.iter().map(|c| c.label.as_str()).collect();
        return Err(Error::Feasibility(format!("hypotheses fail: {}", list.join("; "))));
    }
    let (bound_ubar, bound_psi) = if bounded {
        let d2 = p.model.sup_norm_on(Derivative::Second, p.model.states())?;
        let len = p.ubar.domain().width();
        let b1 = metrics::bracket_norm(p.model, i1, 1e-10)?.value / (len * d2) - p.rho;
        let b2 = metrics::bracket_norm(p.model, i2, 1e-10)?.value / (len * d2) - p.rho;
        (b1, b2)
    } else {
        (du + 1.0, dp + 1.0)
    };
    let tv_data = p.ubar.variation().tv + p.psi.variation().tv;

    let mut rows = Vec::with_capacity(ns.len());
    let mut finest = None;
    let mut previous: Option<FvSolution> = None;
    for &n in ns {
        let un = mollify_one_sided(p.ubar, bound_ubar, n, side_u)?;
        let pn = mollify_one_sided(p.psi, bound_psi, n, side_p)?;
        let eu = p.ubar.l1_distance(|x| un.value(x));
        let ep = p.psi.l1_distance(|x| pn.value(x));
        let (control, plan) = compose_full_control(&SteeringProblem {
            model: p.model,
            ubar: &un,
            psi: &pn,
            initial_interval: Some(i1),
            target_interval: Some(i2),
            horizon: p.horizon,
            rho: p.rho,
            mode: BoundMode::OneSided,
        })?;
        let run = run_fv(&plan, Some(p.ubar), p.psi, dx, 40)?;
        let allowed = eu + ep + 10.0 * dx * tv_data;
        let measured_h = control.sup_norm() + control.total_variation();
        let distance_to_previous = previous.as_ref().map(|q| {
            let faces: Vec<f64> = (0..=q.grid().cells).map(|i| q.grid().face(i)).collect();
            run.solution.l1_error(run.solution.final_state(), |x| q.value_at(q.final_state(), x), &faces)
        });
        rows.push(BvRow {
            n,
            kernel_radius: 1.0 / n as f64,
            mollification_error_ubar: eu,
            mollification_error_psi: ep,
            mollification_error: eu + ep,
            dx,
            terminal_l1: run.terminal_l1,
            allowed_l1: allowed,
            terminal_ok: run.terminal_l1 <= allowed,
            claimed_h: plan.claimed_h,
            measured_h,
            claimed_u: plan.claimed_u,
            measured_u: run.measured_u,
            max_sup: run.max_sup,
            max_tv: run.max_tv,
            bounds_ok: measured_h <= plan.claimed_h * (1.0 + 1e-9) && run.measured_u <= plan.claimed_u * (1.0 + 1e-9),
            tv_increase: run.solution.tv_increase(),
            tv_tolerance: run.solution.tv_tolerance(),
            entropy_violation: run.solution.entropy_violation(),
            distance_to_previous,
        });
        finest = Some(BvArtifacts { control, snapshot_csv: run.solution.snapshot_csv(), meta: run.solution.meta().clone() });
        previous = Some(run.solution);
    }
    Ok(BvTable { theorem, verdict, initial_interval: i1, target_interval: i2, bound_ubar, bound_psi, tv_data, rows, finest })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(l: f64, r: f64) -> ProfileBV {
        ProfileBV::step(&[0.0, 0.5, 1.0], &[l, r]).unwrap()
    }

    #[test]
    fn rejects_forbidden_jump_signs() {
        // concave flux: ū may not jump up, ψ may not jump down
        let f1 = FluxModel::builtin("lwr_greenshields").unwrap();
        let prob = |u: &ProfileBV, psi: &ProfileBV| {
            run_bv_pipeline(
                &BvProblem {
                    model: &f1,
                    ubar: u,
                    psi,
                    initial_interval: Some(Interval { lo: 0.0, hi: 0.75 }),
                    target_interval: Some(Interval { lo: 0.75, hi: 1.25 }),
                    horizon: 6.5,
                    rho: 0.01,
                },
                &[10],
                1e-2,
            )
        };
        assert!(matches!(prob(&step(0.2, 0.5), &step(0.9, 1.1)), Err(Error::OneSidedViolation(_))));
        assert!(matches!(prob(&step(0.5, 0.2), &step(1.1, 0.9)), Err(Error::OneSidedViolation(_))));
        let b = FluxModel::builtin("burgers").unwrap();
        let r = run_bv_pipeline(
            &BvProblem { model: &b, ubar: &step(0.5, 0.2), psi: &step(0.0, 1.0), initial_interval: None, target_interval: None, horizon: 1.0, rho: 0.0 },
            &[10],
            1e-2,
        );
        assert!(matches!(r, Err(Error::OneSidedViolation(_))));
    }

    #[test]
    fn coarse_concave_run_reaches_the_target() {
        let f1 = FluxModel::builtin("lwr_greenshields").unwrap();
        let p = BvProblem {
            model: &f1,
            ubar: &step(0.5, 0.2),
            psi: &step(0.85, 1.1),
            initial_interval: Some(Interval { lo: 0.0, hi: 0.75 }),
            target_interval: Some(Interval { lo: 0.75, hi: 1.25 }),
            horizon: 6.5,
            rho: 0.01,
        };
        let t = run_bv_pipeline(&p, &[20], 1e-2).unwrap();
        let r = &t.rows[0];
        assert!(r.terminal_ok, "{r:?}");
        assert!(r.bounds_ok);
        assert!(r.tv_increase <= r.tv_tolerance && r.entropy_violation <= 1e-12);
    }
}
