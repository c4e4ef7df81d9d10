use claw_core::flux::Derivative;
use claw_core::metrics::{bracket_norm, boundary_control_time, controllability_times};
use claw_core::{FluxModel, Interval};
use proptest::prelude::*;

fn flux(name: &str) -> FluxModel {
    FluxModel::builtin(name).unwrap()
}

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

/// Greenshields chords are `2 − 2u − k`; the sup over shifts sits at an end of the shift range.
fn greenshields_bracket(lo: f64, hi: f64) -> f64 {
    let (c_lo, c_hi) = (2.0 - 2.0 * hi, 2.0 - 2.0 * lo);
    let dist = |k: f64| (c_lo - k).max(k - c_hi).max(0.0);
    dist(-lo).max(dist(2.0 - hi))
}

/// Brute force `sup_k inf_u |(f(u+k) − f(u))/k|` on plain grids.
fn brute_bracket(m: &FluxModel, j: Interval, n: usize) -> f64 {
    let s = m.states();
    let (klo, khi) = (s.lo - j.lo, s.hi - j.hi);
    let us = j.linspace(n);
    let chord = |u: f64, k: f64| if k.abs() < 1e-9 { m.df(u) } else { (m.f(u + k) - m.f(u)) / k };
    (0..n)
        .map(|i| klo + (khi - klo) * i as f64 / (n - 1) as f64)
        .map(|k| us.iter().map(|&u| chord(u, k).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[test]
fn greenshields_intervals() {
    let f1 = flux("lwr_greenshields");
    for (lo, hi, want) in [(0.0, 0.75, 0.5), (0.75, 1.25, 0.25), (1.5, 2.0, 1.0)] {
        let v = bracket_norm(&f1, iv(lo, hi), 1e-10).unwrap().value;
        assert!((v - want).abs() <= 1e-9, "[{lo}, {hi}]: {v}");
        assert!((v - greenshields_bracket(lo, hi)).abs() <= 1e-9);
    }
}

#[test]
fn times_scale_with_the_domain_length() {
    let f1 = flux("lwr_greenshields");
    let (t1, t2, t) = controllability_times(&f1, iv(0.0, 0.75), iv(0.75, 1.25), 0.0, 1.0).unwrap();
    assert!((t1 - 2.0).abs() < 1e-9 && (t2 - 4.0).abs() < 1e-9 && (t - 6.0).abs() < 1e-9);
    let (_, _, t) = controllability_times(&f1, iv(1.5, 2.0), iv(0.0, 0.75), -1.0, 2.0).unwrap();
    assert!((t - 9.0).abs() < 1e-9, "{t}");
    let f3 = flux("kynch_mw");
    let (_, _, t) = controllability_times(&f3, iv(2.0 / 3.0, 1.0), iv(1.0 / 3.0, 2.0 / 3.0), 0.0, 0.5).unwrap();
    assert!((t - 4.5).abs() < 1e-9, "{t}");
}

#[test]
fn second_derivative_norms() {
    // f₂'' has its largest modulus where f₂''' vanishes
    let f2 = flux("lwr_bonzani_mussone");
    let (arg, val) = f2.argsup_on(Derivative::Second, f2.states()).unwrap();
    let h = 1e-4;
    let fd = |u: f64| (f2.f(u + h) - 2.0 * f2.f(u) + f2.f(u - h)) / (h * h);
    assert!((fd(arg).abs() - val).abs() < 1e-5, "{} vs {val}", fd(arg));
    let d3 = |u: f64| (f2.d2f(u + h) - f2.d2f(u - h)) / (2.0 * h);
    assert!(d3(arg).abs() < 1e-4 * val);
    assert!((arg - (11.0 + 13f64.sqrt()) / 9.0).abs() < 1e-6);

    let f3 = flux("kynch_mw");
    assert!((f3.sup_norm_on(Derivative::Second, f3.states()).unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn boundary_time_cases() {
    let b = flux("burgers");
    assert!(boundary_control_time(&b, |_| 0.0, 0.0, 1.0).is_infinite());
    assert!(boundary_control_time(&b, |x| x - 0.5, 0.0, 1.0).is_infinite());
    // constant speed c: waves cross the domain in (b − a)/c
    assert!((boundary_control_time(&b, |_| 2.0, 0.0, 1.0) - 0.5).abs() < 1e-12);
    assert!((boundary_control_time(&b, |_| -4.0, 0.0, 2.0) - 0.5).abs() < 1e-12);
    let f1 = flux("lwr_greenshields");
    assert!(boundary_control_time(&f1, |x| 0.9 + 0.2 * x, 0.0, 1.0).is_infinite());
    assert!(boundary_control_time(&f1, |x| 0.5 + 0.2 * x, 0.0, 1.0).is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn greenshields_matches_closed_form(lo in 0.0f64..1.9, w in 0.01f64..1.0) {
        let hi = (lo + w).min(2.0);
        let f1 = flux("lwr_greenshields");
        let v = bracket_norm(&f1, iv(lo, hi), 1e-10).unwrap().value;
        prop_assert!((v - greenshields_bracket(lo, hi)).abs() <= 1e-8, "[{}, {}]: {} vs {}", lo, hi, v, greenshields_bracket(lo, hi));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn general_fluxes_match_brute_force(which in 0usize..2, lo in 0.0f64..0.9, w in 0.05f64..0.5) {
        let (m, top) = if which == 0 { (flux("kynch_mw"), 1.0) } else { (flux("lwr_bonzani_mussone"), 1.9) };
        let hi = (lo * top + w).min(top);
        let j = iv(lo * top, hi);
        let v = bracket_norm(&m, j, 1e-10).unwrap().value;
        let brute = brute_bracket(&m, j, 1201);
        // the grid oracle is a lower bound up to its resolution
        prop_assert!(v >= brute - 1e-9, "{:?} {} {}", j, v, brute);
        prop_assert!(v - brute <= 5e-3, "{:?} {} {}", j, v, brute);
    }
}
