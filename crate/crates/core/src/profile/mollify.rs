use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::bv::ProfileBV;
use super::c1::{Knot, ProfileC1};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, GaussLegendre};

/// Which Dini bound the mollification must preserve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OneSided {
    /// `D⁺p < M`, giving `φ' < M`.
    Upper,
    /// `D⁻p > −M`, giving `φ' > −M`.
    Lower,
}

fn bump(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - z * z)).exp()
    }
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| integrate_adaptive(bump, -1.0, 1.0, 1e-15))
}

/// Normalized bump of radius `r`.
pub fn kernel(z: f64, r: f64) -> f64 {
    bump(z / r) / (r * bump_mass())
}

/// Convolution of the constantly extended profile with the bump of radius `r`.
pub struct Mollified<'a> {
    p: &'a ProfileBV,
    r: f64,
    breaks: Vec<f64>,
    jumps: Vec<(f64, f64)>,
}

impl<'a> Mollified<'a> {
    pub fn new(p: &'a ProfileBV, r: f64) -> Self {
        let d = p.domain();
        let mut breaks: Vec<f64> = p.joints().iter().map(|j| j.x).collect();
        breaks.push(d.lo);
        breaks.push(d.hi);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let jumps = p.jumps().iter().map(|j| (j.x, j.size())).collect();
        Mollified { p, r, breaks, jumps }
    }

    /// Subintervals of `[x−r, x+r]` split at joints and ends.
    fn cells(&self, x: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = (x - self.r, x + self.r);
        let mut pts = vec![lo];
        pts.extend(self.breaks.iter().copied().filter(|&b| b > lo && b < hi));
        pts.push(hi);
        pts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn value(&self, x: f64) -> f64 {
        let gl = GaussLegendre::gl64();
        let p = self.p;
        self.cells(x)
            .into_iter()
            .map(|(lo, hi)| {
                let mid = 0.5 * (lo + hi);
                // evaluate the piece owning the cell, not the jump-side convention
                gl.integrate(lo, hi, |y| kernel(x - y, self.r) * piece_value(p, mid, y))
            })
            .sum()
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let gl = GaussLegendre::gl64();
        let p = self.p;
        let smooth: f64 = self
            .cells(x)
            .into_iter()
            .map(|(lo, hi)| gl.integrate(lo, hi, |y| kernel(x - y, self.r) * p.deriv(y)))
            .sum();
        let singular: f64 = self.jumps.iter().map(|&(xj, s)| s * kernel(x - xj, self.r)).sum();
        smooth + singular
    }
}

fn piece_value(p: &ProfileBV, owner: f64, y: f64) -> f64 {
    let pieces = p.pieces();
    let i = pieces.partition_point(|q| q.domain().hi <= owner).min(pieces.len() - 1);
    let d = p.domain();
    if y <= d.lo {
        return pieces[0].left_value();
    }
    if y >= d.hi {
        return pieces[pieces.len() - 1].right_value();
    }
    pieces[i].value(y)
}

/// Smooth approximation `φₙ = ρₙ * p` (radius `1/n`) keeping the one-sided
/// derivative bound `M` of the chosen side.
///
/// Since the kernel is even, `ρₙ * (p − Mx) + Mx = ρₙ * p`; the bound carries
/// over because `p − Mx` is decreasing (resp. `p + Mx` increasing) and the
/// constant continuation outside `[a, b]` keeps that property for `M > 0`.
pub fn mollify_one_sided(p: &ProfileBV, m: f64, n: usize, side: OneSided) -> Result<ProfileC1> {
    if n == 0 {
        return Err(Error::Invalid("mollification index n must be positive".into()));
    }
    if m <= 0.0 {
        return Err(Error::Invalid(format!("one-sided bound M = {m} must be positive")));
    }
    let dini = match side {
        OneSided::Upper => p.d_plus(),
        OneSided::Lower => p.d_minus(),
    };
    if dini >= m {
        return Err(Error::OneSidedViolation(format!("Dini bound {dini} is not below M = {m}")));
    }
    let r = 1.0 / n as f64;
    let moll = Mollified::new(p, r);
    let d = p.domain();
    let mut spacing = (r / 32.0).min(d.width() / 2048.0);
    let target = p.image();
    for _ in 0..4 {
        let count = (d.width() / spacing).ceil() as usize + 1;
        let knots: Vec<Knot> = d
            .linspace(count)
            .into_iter()
            .map(|x| Knot { x, u: moll.value(x), du: moll.deriv(x) })
            .collect();
        let q = squeeze_into(ProfileC1::new(knots)?, target.lo, target.hi)?;
        let (lo, hi) = q.deriv_range();
        let fine = match side {
            OneSided::Upper => hi < m,
            OneSided::Lower => -lo < m,
        };
        if fine {
            return Ok(q);
        }
        spacing *= 0.5;
    }
    Err(Error::OneSidedViolation(format!("sampled mollification does not keep the bound {m}")))
}

/// Interpolation can overshoot the range of `p` by a hair; an affine squeeze
/// about the mid-range removes that without loosening any slope bound.
fn squeeze_into(q: ProfileC1, lo: f64, hi: f64) -> Result<ProfileC1> {
    let im = q.image();
    if im.lo >= lo && im.hi <= hi {
        return Ok(q);
    }
    let c = 0.5 * (lo + hi);
    let over = (im.hi - c).max(c - im.lo);
    let lambda = if over > 0.0 { ((hi - lo) * 0.5 / over).min(1.0) } else { 1.0 };
    let knots = q
        .knots()
        .iter()
        .map(|k| Knot { x: k.x, u: (c + lambda * (k.u - c)).clamp(lo, hi), du: lambda * k.du })
        .collect();
    ProfileC1::new(knots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_has_unit_mass() {
        let r = 0.03;
        let mass = integrate_adaptive(|z| kernel(z, r), -r, r, 1e-14);
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn downward_step() {
        let p = ProfileBV::step(&[0.0, 0.5, 1.0], &[1.0, 0.0]).unwrap();
        let q = mollify_one_sided(&p, 1.0, 100, OneSided::Upper).unwrap();
        assert!(q.deriv_range().1 < 1.0);
        let err = p.l1_distance(|x| q.value(x));
        assert!(err <= 0.02, "{err}");
        let im = q.image();
        assert!(im.lo >= -1e-9 && im.hi <= 1.0 + 1e-9, "{im:?}");
    }

    #[test]
    fn upward_step_is_rejected() {
        let p = ProfileBV::step(&[0.0, 0.5, 1.0], &[0.0, 1.0]).unwrap();
        assert!(matches!(mollify_one_sided(&p, 1.0, 50, OneSided::Upper), Err(Error::OneSidedViolation(_))));
        assert!(mollify_one_sided(&p, 1.0, 50, OneSided::Lower).is_ok());
    }

    #[test]
    fn value_matches_direct_convolution() {
        let p = ProfileBV::step(&[0.0, 0.3, 0.6, 1.0], &[2.0, 1.0, 0.5]).unwrap();
        let m = Mollified::new(&p, 0.05);
        for x in [0.02, 0.29, 0.31, 0.62, 0.97] {
            let direct = integrate_adaptive(|y| kernel(x - y, 0.05) * p.value(y), x - 0.05, x + 0.05, 1e-13);
            assert!((m.value(x) - direct).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn smooth_profile_converges() {
        let c = ProfileC1::from_fn(0.0, 1.0, 64, |x| 0.3 * x * x - x, |x| 0.6 * x - 1.0).unwrap();
        let p = ProfileBV::from_c1(c);
        let mut last = f64::INFINITY;
        for n in [10, 20, 40] {
            let q = mollify_one_sided(&p, 1.0, n, OneSided::Upper).unwrap();
            assert!(q.deriv_range().1 < 1.0);
            let e = p.l1_distance(|x| q.value(x));
            assert!(e < last);
            last = e;
        }
    }
}
