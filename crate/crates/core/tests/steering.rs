use claw_core::characteristics::solve_classical;
use claw_core::control::{compose_full_control, BoundMode, SteeringProblem};
use claw_core::metrics::{boundary_control_time, controllability_times};
use claw_core::profile::ProfileC1;
use claw_core::steering::{full_control, run_classical, SteeringOptions};
use claw_core::{Error, FluxModel, Interval};
use proptest::prelude::*;

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

fn wave(c: f64, a: f64, w: f64) -> ProfileC1 {
    ProfileC1::from_fn(0.0, 1.0, 65, move |x| c + a * (w * x).sin(), move |x| a * w * (w * x).cos()).unwrap()
}

struct Steered {
    terminal: f64,
    reversal: f64,
    bounds_hold: bool,
}

fn steer(name: &str, i1: Interval, i2: Interval, u: &ProfileC1, psi: &ProfileC1, factor: f64, mode: BoundMode) -> Steered {
    let m = FluxModel::builtin(name).unwrap();
    let (_, _, ts) = controllability_times(&m, i1, i2, 0.0, 1.0).unwrap();
    let prob = SteeringProblem {
        model: &m,
        ubar: u,
        psi,
        initial_interval: Some(i1),
        target_interval: Some(i2),
        horizon: factor * ts,
        rho: 0.0,
        mode,
    };
    let (control, plan) = compose_full_control(&prob).unwrap();
    assert!((control.duration() - factor * ts).abs() < 1e-9);
    let run = run_classical(&plan, psi, &SteeringOptions::default()).unwrap();
    let o = &run.outcome;
    Steered {
        terminal: o.terminal_error,
        reversal: o.reversal_error,
        bounds_hold: o.measured_h <= plan.claimed_h && o.measured_u <= plan.claimed_u,
    }
}

#[test]
fn greenshields_into_the_critical_state() {
    // ψ crosses 1 where f₁' vanishes: boundary controls never get there
    let f1 = FluxModel::builtin("lwr_greenshields").unwrap();
    let psi = ProfileC1::from_fn(0.0, 1.0, 65, |x| 1.0 + 0.05 * (2.0 * x).cos(), |x| -0.1 * (2.0 * x).sin()).unwrap();
    assert!(boundary_control_time(&f1, |x| psi.value(x), 0.0, 1.0).is_infinite());
    let s = steer("lwr_greenshields", iv(0.0, 0.75), iv(0.75, 1.25), &wave(0.35, 0.05, 3.0), &psi, 1.05, BoundMode::OneSided);
    assert!(s.terminal <= 1e-6, "{}", s.terminal);
    assert!(s.bounds_hold);
}

#[test]
fn greenshields_second_pair() {
    let s = steer("lwr_greenshields", iv(1.5, 2.0), iv(0.0, 0.75), &wave(1.7, 0.1, 3.0), &wave(0.4, 0.05, 2.0), 1.05, BoundMode::OneSided);
    assert!(s.terminal <= 1e-6 && s.bounds_hold);
}

#[test]
fn general_fluxes_with_full_bounds() {
    let s = steer("lwr_bonzani_mussone", iv(4.0 / 3.0, 2.0 - 1e-6), iv(0.6, 1.0), &wave(1.6, 0.05, 2.0), &wave(0.8, 0.05, 2.0), 1.05, BoundMode::FullBound);
    assert!(s.terminal <= 1e-6 && s.bounds_hold);
    // leg C retraces the reflected target stage
    assert!(s.reversal <= 1e-6, "{}", s.reversal);
    let s = steer("kynch_mw", iv(2.0 / 3.0, 1.0), iv(1.0 / 3.0, 2.0 / 3.0), &wave(0.8, 0.02, 2.0), &wave(0.5, 0.02, 2.0), 1.05, BoundMode::FullBound);
    assert!(s.terminal <= 1e-6 && s.bounds_hold);
}

#[test]
fn burgers_in_short_time() {
    let b = FluxModel::builtin("burgers").unwrap();
    let u = ProfileC1::from_fn(0.0, 1.0, 129, |x| (10.0 * x).sin(), |x| 10.0 * (10.0 * x).cos()).unwrap();
    let psi = ProfileC1::from_fn(0.0, 1.0, 129, |x| 0.5 - (9.0 * x).cos(), |x| 9.0 * (9.0 * x).sin()).unwrap();
    let prob = SteeringProblem {
        model: &b,
        ubar: &u,
        psi: &psi,
        initial_interval: None,
        target_interval: None,
        horizon: 0.05,
        rho: 0.0,
        mode: BoundMode::FullBound,
    };
    let (_, plan) = compose_full_control(&prob).unwrap();
    assert!(plan.truncation.is_some());
    let run = run_classical(&plan, &psi, &SteeringOptions::default()).unwrap();
    assert!(run.outcome.terminal_error <= 1e-6, "{}", run.outcome.terminal_error);
}

#[test]
fn stage_a_gathers_span_onto_the_plateau() {
    let m = FluxModel::builtin("lwr_greenshields").unwrap();
    let u = wave(0.35, 0.05, 3.0);
    let psi = wave(1.0, 0.04, 2.0);
    let prob = SteeringProblem {
        model: &m,
        ubar: &u,
        psi: &psi,
        initial_interval: Some(iv(0.0, 0.75)),
        target_interval: Some(iv(0.75, 1.25)),
        horizon: 6.5,
        rho: 0.0,
        mode: BoundMode::OneSided,
    };
    let (_, plan) = compose_full_control(&prob).unwrap();
    let h = plan.control_a().unwrap();
    let t1 = plan.stage_a.t1;
    let span = iv(0.0, 1.0);
    let opts = claw_core::characteristics::ClassicalOptions::for_span(span).with_samples(t1, 4);
    let sol = solve_classical(&m, plan.ext_a.whole(), &h, t1, span, &opts).unwrap();
    // every foot reaching [a, b] at T₁ starts where the data sits at w₁ − H(T₁)
    let feet = sol.feet_landing_in_span(t1).unwrap();
    for x0 in feet.linspace(101) {
        let v = plan.ext_a.whole().value(x0) + h.primitive(t1);
        assert!((v - plan.w1).abs() < 1e-9, "foot {x0}: {v} vs {}", plan.w1);
    }
    assert!(!feet.contains(0.5), "feet {feet} still inside the data");
    // the composite signal is continuous and ends at zero
    let full = full_control(&plan).unwrap();
    assert!(full.value(full.duration()).abs() < 1e-9 && full.value(0.0).abs() < 1e-9);
}

#[test]
fn horizon_at_or_below_t_star_is_refused() {
    let m = FluxModel::builtin("lwr_greenshields").unwrap();
    let (u, psi) = (wave(0.35, 0.05, 3.0), wave(1.0, 0.04, 2.0));
    for horizon in [5.0, 6.0] {
        let prob = SteeringProblem {
            model: &m,
            ubar: &u,
            psi: &psi,
            initial_interval: Some(iv(0.0, 0.75)),
            target_interval: Some(iv(0.75, 1.25)),
            horizon,
            rho: 0.0,
            mode: BoundMode::OneSided,
        };
        assert!(matches!(compose_full_control(&prob), Err(Error::Feasibility(_))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_greenshields_data_is_steered(c in 0.25f64..0.45, a in 0.0f64..0.05, w in 1.0f64..3.0, d in 0.9f64..1.1, e in 0.0f64..0.05, v in 1.0f64..2.0) {
        // ū' ≤ a·w < 1/4 and ψ' ≥ −e·v > −1/8 on [0, 1]
        let s = steer("lwr_greenshields", iv(0.0, 0.75), iv(0.75, 1.25), &wave(c, a, w), &wave(d, e, v), 1.05, BoundMode::OneSided);
        prop_assert!(s.terminal <= 1e-6, "terminal {}", s.terminal);
        prop_assert!(s.bounds_hold);
    }
}
