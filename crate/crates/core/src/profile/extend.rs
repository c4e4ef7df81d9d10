use serde::{Deserialize, Serialize};

use super::c1::{Knot, ProfileC1};
use crate::error::{Error, Result};
use crate::interval::Interval;

/// Which part of the derivative the extension must keep below the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideRule {
    /// `|u'| < bound`
    TwoSided,
    /// `⌊u'⌋₋ < bound`
    LowerOnly,
    /// `⌊u'⌋₊ < bound`
    UpperOnly,
}

impl SideRule {
    pub fn measure(self, p: &ProfileC1) -> f64 {
        match self {
            SideRule::TwoSided => p.deriv_sup(),
            SideRule::LowerOnly => p.deriv_neg_sup(),
            SideRule::UpperOnly => p.deriv_pos_sup(),
        }
    }
}

/// A profile on `[a, b]` continued to the line by cubic bridges and plateaus.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedProfile {
    inner: ProfileC1,
    whole: ProfileC1,
    alpha_minus: f64,
    alpha_plus: f64,
    width_left: f64,
    width_right: f64,
}

impl ExtendedProfile {
    pub fn inner(&self) -> &ProfileC1 {
        &self.inner
    }

    /// Inner profile plus bridges as one C¹ profile; constant beyond its ends.
    pub fn whole(&self) -> &ProfileC1 {
        &self.whole
    }

    pub fn alpha_minus(&self) -> f64 {
        self.alpha_minus
    }

    pub fn alpha_plus(&self) -> f64 {
        self.alpha_plus
    }

    pub fn width_left(&self) -> f64 {
        self.width_left
    }

    pub fn width_right(&self) -> f64 {
        self.width_right
    }

    pub fn value(&self, x: f64) -> f64 {
        self.whole.value(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.whole.deriv(x)
    }

    pub fn image(&self) -> Interval {
        self.whole.image()
    }

    /// The unextended profile viewed as already extended (constant outside).
    pub fn trivial(p: ProfileC1) -> ExtendedProfile {
        ExtendedProfile {
            alpha_minus: p.left_value(),
            alpha_plus: p.right_value(),
            whole: p.clone(),
            inner: p,
            width_left: 0.0,
            width_right: 0.0,
        }
    }
}

/// Plateau offset of a bridge: zero, or the offset that makes it monotone.
#[derive(Clone, Copy)]
enum Bridge {
    Flat,
    Monotone,
}

fn assemble(p: &ProfileC1, wl: f64, wr: f64, left: Bridge, right: Bridge) -> Result<(ProfileC1, f64, f64)> {
    let ks = p.knots();
    let (k0, kn) = (ks[0], ks[ks.len() - 1]);
    let am = match left {
        Bridge::Flat => k0.u,
        Bridge::Monotone => k0.u - k0.du * wl / 3.0,
    };
    let ap = match right {
        Bridge::Flat => kn.u,
        Bridge::Monotone => kn.u + kn.du * wr / 3.0,
    };
    let mut knots = Vec::with_capacity(ks.len() + 2);
    knots.push(Knot { x: k0.x - wl, u: am, du: 0.0 });
    knots.extend_from_slice(ks);
    knots.push(Knot { x: kn.x + wr, u: ap, du: 0.0 });
    Ok((ProfileC1::new(knots)?, am, ap))
}

/// Continue `p` beyond `[a, b]` by bridges of width at most `eps1·(b−a)`.
///
/// The bridge at each end is a cubic Hermite joining `(p, p')` to a plateau
/// with zero slope. Plateaus equal the end values unless the side rule forbids
/// the small opposite-sign dip of such a bridge, in which case the plateau is
/// offset so the bridge is monotone. Widths are halved until the result keeps
/// the derivative bound, stays inside `keep_within`, and at most doubles the
/// sup-norm and the total variation.
pub fn extend_profile(
    p: &ProfileC1,
    eps1: f64,
    deriv_bound: f64,
    side: SideRule,
    keep_within: Interval,
) -> Result<ExtendedProfile> {
    if eps1 <= 0.0 {
        return Err(Error::Invalid("eps1 must be positive".into()));
    }
    let m = side.measure(p);
    if m >= deriv_bound {
        return Err(Error::ExtensionInfeasible(format!(
            "profile slope {m} already violates the bound {deriv_bound}"
        )));
    }
    let var = p.variation();
    let len = p.domain().width();
    let mut w = eps1 * len;
    let ok = |q: &ProfileC1| {
        let v = q.variation();
        side.measure(q) < deriv_bound
            && keep_within.contains_interval(&q.image())
            && v.sup_norm <= 2.0 * var.sup_norm + 1e-300
            && v.tv <= 2.0 * var.tv + 1e-300
    };
    for _ in 0..64 {
        for (left, right) in bridge_choices(side) {
            let (q, am, ap) = assemble(p, w, w, left, right)?;
            if ok(&q) {
                return Ok(ExtendedProfile {
                    inner: p.clone(),
                    whole: q,
                    alpha_minus: am,
                    alpha_plus: ap,
                    width_left: w,
                    width_right: w,
                });
            }
        }
        w *= 0.5;
    }
    Err(Error::ExtensionInfeasible(format!(
        "no bridge within width {} meets the slope bound {deriv_bound} inside {keep_within}",
        eps1 * len
    )))
}

fn bridge_choices(side: SideRule) -> Vec<(Bridge, Bridge)> {
    use Bridge::*;
    match side {
        SideRule::TwoSided => vec![(Flat, Flat)],
        _ => vec![(Flat, Flat), (Monotone, Flat), (Flat, Monotone), (Monotone, Monotone)],
    }
}
