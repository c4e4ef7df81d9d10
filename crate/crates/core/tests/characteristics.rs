use std::sync::OnceLock;

use claw_core::characteristics::{solve_classical, ClassicalOptions, ClassicalSolution};
use claw_core::control::{ControlSignal, SignalBuilder};
use claw_core::profile::ProfileC1;
use claw_core::{FluxModel, Interval};
use proptest::prelude::*;

const HORIZON: f64 = 2.0;

fn span() -> Interval {
    Interval::new(0.0, 1.0).unwrap()
}

fn wobble() -> ControlSignal {
    let mut b = SignalBuilder::new();
    b.ramp_to(0.3, 0.2).hold(0.4).ramp_to(0.5, -0.15).transfer(0.6, 0.02).ramp_to(0.2, 0.0);
    b.build().unwrap()
}

struct Case {
    model: FluxModel,
    control: ControlSignal,
    sol: ClassicalSolution,
}

fn case(which: usize) -> &'static Case {
    static CASES: OnceLock<Vec<Case>> = OnceLock::new();
    &CASES.get_or_init(|| {
        [("kynch_mw", 0.5), ("lwr_bonzani_mussone", 0.8)]
            .into_iter()
            .map(|(name, mean)| {
                let model = FluxModel::builtin(name).unwrap();
                let init = ProfileC1::from_fn(-3.0, 4.0, 281, |x| mean + 0.05 * (4.0 * x).sin(), |x| 0.2 * (4.0 * x).cos()).unwrap();
                let control = wobble();
                let opts = ClassicalOptions::for_span(span()).with_samples(HORIZON, 20);
                let sol = solve_classical(&model, &init, &control, HORIZON, span(), &opts).unwrap();
                Case { model, control, sol }
            })
            .collect()
    })[which]
}

/// RK4 on `x' = f'(z0)`, `z1' = −f''(z0) z1²`, stepping between control breakpoints.
fn riccati_ode(model: &FluxModel, h: &ControlSignal, x0: f64, u0: f64, du0: f64, t: f64) -> (f64, f64) {
    let rhs = |s: f64, z: f64| {
        let z0 = u0 + h.primitive(s);
        (model.df(z0), -model.d2f(z0) * z * z)
    };
    let mut cuts: Vec<f64> = h.breakpoints().into_iter().filter(|&b| b > 0.0 && b < t).collect();
    cuts.insert(0, 0.0);
    cuts.push(t);
    let (mut x, mut z) = (x0, du0);
    for w in cuts.windows(2) {
        let n = 400;
        let dt = (w[1] - w[0]) / n as f64;
        for i in 0..n {
            let s = w[0] + i as f64 * dt;
            let (a1, b1) = rhs(s, z);
            let (a2, b2) = rhs(s + 0.5 * dt, z + 0.5 * dt * b1);
            let (a3, b3) = rhs(s + 0.5 * dt, z + 0.5 * dt * b2);
            let (a4, b4) = rhs(s + dt, z + dt * b3);
            x += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            z += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
    }
    (x, z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn riccati_closed_form_matches_the_ode(which in 0usize..2, pick in 0.0f64..1.0, slot in 1usize..21) {
        let c = case(which);
        let j = ((c.sol.fan_size() - 1) as f64 * pick) as usize;
        let t = c.sol.times()[slot];
        let (x0, _, u0, du0) = c.sol.fan_state(j, 0.0).unwrap();
        let (_, x, z0, z1) = c.sol.fan_state(j, t).unwrap();
        let (xo, zo) = riccati_ode(&c.model, &c.control, x0, u0, du0, t);
        prop_assert!((z0 - u0 - c.control.primitive(t)).abs() < 1e-14);
        prop_assert!((x - xo).abs() <= 1e-9, "x {} vs {}", x, xo);
        let scale = zo.abs().max(1e-3 * du0.abs()).max(1e-12);
        prop_assert!((z1 - zo).abs() / scale <= 1e-7, "z1 {} vs {} (t = {}, foot {})", z1, zo, t, x0);
    }
}

#[test]
fn burgers_linear_data_is_exact() {
    // u(t, x) = (αx + β)/(1 + αt)
    let b = FluxModel::builtin("burgers").unwrap();
    let (alpha, beta) = (0.8, -0.3);
    let init = ProfileC1::linear(beta - 4.0 * alpha, alpha, -4.0, 5.0).unwrap();
    let h = ControlSignal::zero(1.5).unwrap();
    let sol = solve_classical(&b, &init, &h, 1.5, span(), &ClassicalOptions::for_span(span()).with_samples(1.5, 6)).unwrap();
    for &t in sol.times() {
        for x in span().linspace(21) {
            let exact = (alpha * x + beta) / (1.0 + alpha * t);
            let got = sol.eval(t, x).unwrap();
            assert!((got - exact).abs() < 1e-9, "t {t} x {x}: {got} vs {exact}");
        }
    }
}

#[test]
fn constant_source_shifts_the_solution() {
    // a constant source c moves every state by c·t and bends the characteristics
    let f1 = FluxModel::builtin("lwr_greenshields").unwrap();
    let init = ProfileC1::constant(0.4, -2.0, 3.0).unwrap();
    let h = ControlSignal::constant(0.1, 1.0).unwrap();
    let sol = solve_classical(&f1, &init, &h, 1.0, span(), &ClassicalOptions::for_span(span()).with_samples(1.0, 4)).unwrap();
    for &t in sol.times() {
        for x in span().linspace(11) {
            assert!((sol.eval(t, x).unwrap() - (0.4 + 0.1 * t)).abs() < 1e-14);
        }
    }
    // x(t) = x0 + ∫(2 − 2(0.4 + 0.1s)) ds = x0 + 1.2t − 0.1t²
    let (x, d) = sol.trajectory(0.25, 1.0);
    assert!((x - (0.25 + 1.2 - 0.1)).abs() < 1e-12);
    assert_eq!(d, 1.0);
}

#[test]
fn burgers_compression_blows_up() {
    let b = FluxModel::builtin("burgers").unwrap();
    let init = ProfileC1::from_fn(-2.0, 3.0, 201, |x| -(2.0 * x).sin(), |x| -2.0 * (2.0 * x).cos()).unwrap();
    let h = ControlSignal::zero(1.0).unwrap();
    let r = solve_classical(&b, &init, &h, 1.0, span(), &ClassicalOptions::for_span(span()).with_samples(1.0, 4));
    assert!(matches!(r, Err(claw_core::Error::BlowUp { .. })), "{:?}", r.err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversal_is_an_involution(levels in prop::collection::vec((0.05f64..1.0, -2.0f64..2.0), 1..8)) {
        let mut b = SignalBuilder::new();
        for &(len, to) in &levels {
            b.ramp_to(len, to);
        }
        b.ramp_to(0.3, 0.0);
        let h = b.build().unwrap();
        let t = h.duration();
        let r = h.reversed_negated();
        prop_assert!((r.duration() - t).abs() < 1e-12);
        for i in 0..=50 {
            let s = t * i as f64 / 50.0;
            prop_assert!((r.value(s) + h.value(t - s)).abs() < 1e-9);
            // G(s) = H(T − s) − H(T)
            prop_assert!((r.primitive(s) - (h.primitive(t - s) - h.primitive(t))).abs() < 1e-9);
        }
        let back = r.reversed_negated();
        for i in 0..=50 {
            let s = t * i as f64 / 50.0;
            prop_assert!((back.value(s) - h.value(s)).abs() < 1e-9);
        }
    }
}
