//! Numerical evaluation of the hypotheses behind each controllability theorem.

use serde::{Deserialize, Serialize};

use crate::control::h2_growth;
use crate::flux::{Derivative, FluxModel, Shape};
use crate::interval::Interval;
use crate::metrics;
use crate::profile::ProfileBV;
use crate::Result;

/// The six controllability statements.
///
/// 1, 2: C¹ data, any flux (bounded or growing derivatives);
/// 3, 4: C¹ data, convex or concave flux;
/// 5, 6: BV data, convex or concave flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
    Theorem5,
    Theorem6,
}

impl Theorem {
    pub fn number(self) -> u8 {
        match self {
            Theorem::Theorem1 => 1,
            Theorem::Theorem2 => 2,
            Theorem::Theorem3 => 3,
            Theorem::Theorem4 => 4,
            Theorem::Theorem5 => 5,
            Theorem::Theorem6 => 6,
        }
    }

    /// Data only needs to be BV.
    pub fn is_bv(self) -> bool {
        matches!(self, Theorem::Theorem5 | Theorem::Theorem6)
    }

    /// Bounded flux derivatives with a positive time threshold `T*`.
    pub fn has_threshold(self) -> bool {
        matches!(self, Theorem::Theorem1 | Theorem::Theorem3 | Theorem::Theorem5)
    }

    /// Relies on one-sided slope bounds.
    pub fn one_sided(self) -> bool {
        !matches!(self, Theorem::Theorem1 | Theorem::Theorem2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        })
    }
}

/// One labelled inequality with both sides evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    #[serde(with = "crate::serde_f64")]
    pub lhs: f64,
    pub relation: Relation,
    #[serde(with = "crate::serde_f64")]
    pub rhs: f64,
    pub holds: bool,
}

impl Condition {
    fn new(label: impl Into<String>, lhs: f64, relation: Relation, rhs: f64) -> Self {
        let holds = match relation {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Ge => lhs >= rhs,
        };
        Condition { label: label.into(), lhs, relation, rhs, holds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVerdict {
    pub theorem: Theorem,
    pub holds: bool,
    pub conditions: Vec<Condition>,
    pub violated_conditions: Vec<Condition>,
}

/// Input to [`check_hypotheses`]; the intervals are ignored by theorems 2, 4, 6.
#[derive(Debug, Clone, Copy)]
pub struct HypothesisQuery<'a> {
    pub theorem: Theorem,
    pub model: &'a FluxModel,
    pub ubar: &'a ProfileBV,
    pub psi: &'a ProfileBV,
    pub initial_interval: Interval,
    pub target_interval: Interval,
    pub horizon: f64,
    pub rho: f64,
}

fn image_conditions(out: &mut Vec<Condition>, name: &str, im: Interval, iv: Interval) {
    // Im ⊊ I': inside, and not the whole interval
    out.push(Condition::new(format!("inf Im({name}) >= inf I'"), im.lo, Relation::Ge, iv.lo));
    out.push(Condition::new(format!("sup Im({name}) <= sup I'"), im.hi, Relation::Le, iv.hi));
    out.push(Condition::new(format!("|Im({name})| < |I'|"), im.hi - im.lo, Relation::Lt, iv.width()));
}

/// Evaluate every inequality of the selected theorem.
pub fn check_hypotheses(q: &HypothesisQuery) -> Result<HypothesisVerdict> {
    let model = q.model;
    let th = q.theorem;
    let mut c = Vec::new();
    let dom = q.ubar.domain();
    let len = dom.width();

    if th.one_sided() {
        let shaped = match th {
            Theorem::Theorem6 => model.shape() == Shape::Convex,
            _ => matches!(model.shape(), Shape::Convex | Shape::Concave),
        };
        let want = if th == Theorem::Theorem6 { "convex flux" } else { "convex or concave flux" };
        c.push(Condition::new(want, if shaped { 1.0 } else { 0.0 }, Relation::Ge, 1.0));
    }

    if !th.is_bv() {
        for (name, p) in [("ubar", q.ubar), ("psi", q.psi)] {
            let smooth = p.as_c1().is_some();
            c.push(Condition::new(format!("{name} is C1"), if smooth { 1.0 } else { 0.0 }, Relation::Ge, 1.0));
        }
    }

    if th.has_threshold() {
        // H2(i): bounded derivatives on the states
        let states = model.states();
        let df = model.sup_norm_on(Derivative::First, states).unwrap_or(f64::INFINITY);
        let d2f = model.sup_norm_on(Derivative::Second, states).unwrap_or(f64::INFINITY);
        c.push(Condition::new("H2(i): sup|f'|", df, Relation::Lt, f64::INFINITY));
        c.push(Condition::new("H2(i): sup|f''|", d2f, Relation::Lt, f64::INFINITY));
        if !df.is_finite() || !d2f.is_finite() {
            return Ok(finish(th, c));
        }
        let v1 = metrics::bracket_norm(model, q.initial_interval, 1e-9)?.value;
        let v2 = metrics::bracket_norm(model, q.target_interval, 1e-9)?.value;
        c.push(Condition::new("[|f|]_{I'1} > 0", v1, Relation::Gt, 0.0));
        c.push(Condition::new("[|f|]_{I'2} > 0", v2, Relation::Gt, 0.0));
        image_conditions(&mut c, "ubar", q.ubar.image(), q.initial_interval);
        image_conditions(&mut c, "psi", q.psi.image(), q.target_interval);
        let t_star = len / v1 + len / v2;
        c.push(Condition::new("T > T*", q.horizon, Relation::Gt, t_star));
        let b1 = v1 / (len * d2f);
        let b2 = v2 / (len * d2f);
        let concave = model.shape() == Shape::Concave;
        match th {
            Theorem::Theorem1 => {
                let (s1, s2) = (slope_sup(q.ubar), slope_sup(q.psi));
                c.push(Condition::new("||ubar'|| < [|f|]_{I'1}/((b-a)||f''||)", s1, Relation::Lt, b1));
                c.push(Condition::new("||psi'|| < [|f|]_{I'2}/((b-a)||f''||)", s2, Relation::Lt, b2));
            }
            Theorem::Theorem3 => {
                c.push(Condition::new("rho > 0", q.rho, Relation::Gt, 0.0));
                let (lu, lp, s1, s2) = if concave {
                    ("sup [ubar']+", "sup [psi']-", pos_slope(q.ubar), neg_slope(q.psi))
                } else {
                    ("sup [ubar']-", "sup [psi']+", neg_slope(q.ubar), pos_slope(q.psi))
                };
                c.push(Condition::new(format!("{lu} <= [|f|]_{{I'1}}/((b-a)||f''||) - rho"), s1, Relation::Le, b1 - q.rho));
                c.push(Condition::new(format!("{lp} <= [|f|]_{{I'2}}/((b-a)||f''||) - rho"), s2, Relation::Le, b2 - q.rho));
            }
            _ => {
                c.push(Condition::new("rho > 0", q.rho, Relation::Gt, 0.0));
                let (lu, lp, s1, s2) = if concave {
                    ("d+ of ubar", "d- of psi", q.ubar.d_plus(), q.psi.d_minus())
                } else {
                    ("d- of ubar", "d+ of psi", q.ubar.d_minus(), q.psi.d_plus())
                };
                c.push(Condition::new(format!("{lu} < [|f|]_{{I'1}}/((b-a)||f''||) - rho"), s1, Relation::Lt, b1 - q.rho));
                c.push(Condition::new(format!("{lp} < [|f|]_{{I'2}}/((b-a)||f''||) - rho"), s2, Relation::Lt, b2 - q.rho));
            }
        }
    } else {
        let growth = h2_growth(model);
        c.push(Condition::new(
            "H2(ii) or H2(iii): |f'| / sup|f''| grows without bound",
            if growth.is_some() { 1.0 } else { 0.0 },
            Relation::Ge,
            1.0,
        ));
        c.push(Condition::new("T > 0", q.horizon, Relation::Gt, 0.0));
        if th == Theorem::Theorem6 {
            c.push(Condition::new("d- of ubar < inf", q.ubar.d_minus(), Relation::Lt, f64::INFINITY));
            c.push(Condition::new("d+ of psi < inf", q.psi.d_plus(), Relation::Lt, f64::INFINITY));
        }
    }
    Ok(finish(th, c))
}

fn finish(theorem: Theorem, conditions: Vec<Condition>) -> HypothesisVerdict {
    let violated: Vec<Condition> = conditions.iter().filter(|c| !c.holds).cloned().collect();
    HypothesisVerdict { theorem, holds: violated.is_empty(), conditions, violated_conditions: violated }
}

fn slope_sup(p: &ProfileBV) -> f64 {
    if !p.jumps().is_empty() {
        return f64::INFINITY;
    }
    p.pieces().iter().map(|q| q.deriv_sup()).fold(0.0, f64::max)
}

fn neg_slope(p: &ProfileBV) -> f64 {
    p.d_minus()
}

fn pos_slope(p: &ProfileBV) -> f64 {
    p.d_plus()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProfileC1;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    fn c1(p: ProfileC1) -> ProfileBV {
        ProfileBV::from_c1(p)
    }

    #[test]
    fn greenshields_theorem3_uses_positive_part() {
        let f1 = FluxModel::builtin("lwr_greenshields").unwrap();
        // increasing ubar: the (+) part is the one bounded for a concave flux
        let u = c1(ProfileC1::linear(0.2, 0.2, 0.0, 1.0).unwrap());
        let psi = c1(ProfileC1::linear(1.1, -0.1, 0.0, 1.0).unwrap());
        let q = HypothesisQuery {
            theorem: Theorem::Theorem3,
            model: &f1,
            ubar: &u,
            psi: &psi,
            initial_interval: iv(0.0, 0.75),
            target_interval: iv(0.75, 1.25),
            horizon: 6.5,
            rho: 0.01,
        };
        let v = check_hypotheses(&q).unwrap();
        assert!(v.holds, "{:?}", v.violated_conditions);
        let steep = c1(ProfileC1::linear(0.1, 0.3, 0.0, 1.0).unwrap());
        let v = check_hypotheses(&HypothesisQuery { ubar: &steep, ..q }).unwrap();
        assert!(!v.holds);
        assert!(v.violated_conditions.iter().any(|c| c.label.starts_with("sup [ubar']+")));
        let v = check_hypotheses(&HypothesisQuery { horizon: 5.9, ..q }).unwrap();
        assert_eq!(v.violated_conditions.len(), 1);
        assert_eq!(v.violated_conditions[0].label, "T > T*");
    }

    #[test]
    fn burgers_is_unrestricted() {
        let b = FluxModel::builtin("burgers").unwrap();
        let u = c1(ProfileC1::from_fn(0.0, 1.0, 64, |x| 0.1 * x.sin(), |x| 0.1 * x.cos()).unwrap());
        let q = HypothesisQuery {
            theorem: Theorem::Theorem2,
            model: &b,
            ubar: &u,
            psi: &u,
            initial_interval: iv(-0.2, 0.2),
            target_interval: iv(-0.2, 0.2),
            horizon: 0.05,
            rho: 0.0,
        };
        assert!(check_hypotheses(&q).unwrap().holds);
        let v = check_hypotheses(&HypothesisQuery { theorem: Theorem::Theorem1, ..q }).unwrap();
        assert!(!v.holds);
        let f3 = FluxModel::builtin("kynch_mw").unwrap();
        let v = check_hypotheses(&HypothesisQuery { model: &f3, ..q }).unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn upward_jump_breaks_theorem5_for_convex_target() {
        let b = FluxModel::builtin("burgers").unwrap().truncated(iv(-1.0, 3.0)).unwrap();
        let u = ProfileBV::step(&[0.0, 0.5, 1.0], &[0.6, 0.2]).unwrap();
        let psi = ProfileBV::step(&[0.0, 0.5, 1.0], &[0.2, 0.6]).unwrap();
        let q = HypothesisQuery {
            theorem: Theorem::Theorem5,
            model: &b,
            ubar: &psi,
            psi: &u,
            initial_interval: iv(0.0, 1.0),
            target_interval: iv(0.0, 1.0),
            horizon: 10.0,
            rho: 0.01,
        };
        let v = check_hypotheses(&q).unwrap();
        assert!(v.holds, "{:?}", v.violated_conditions);
        let v = check_hypotheses(&HypothesisQuery { ubar: &u, psi: &psi, ..q }).unwrap();
        assert!(!v.holds);
        assert!(v.violated_conditions.iter().all(|c| c.lhs.is_infinite()));
    }
}
