use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// A knot of a piecewise cubic Hermite profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub x: f64,
    pub u: f64,
    pub du: f64,
}

/// Total, negative and positive variation plus sup-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub tv: f64,
    pub tv_neg: f64,
    pub tv_pos: f64,
    pub sup_norm: f64,
}

/// C¹ profile on `[a, b]`: cubic Hermite between knots, constant outside.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileC1 {
    knots: Vec<Knot>,
}

/// One cubic segment; `deriv(s) = A s² + B s + C` in the physical variable.
struct Seg {
    x0: f64,
    h: f64,
    y0: f64,
    y1: f64,
    m0: f64,
    m1: f64,
}

impl Seg {
    fn value(&self, s: f64) -> f64 {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.y0
            + (s3 - 2.0 * s2 + s) * self.h * self.m0
            + (-2.0 * s3 + 3.0 * s2) * self.y1
            + (s3 - s2) * self.h * self.m1
    }

    fn coeffs(&self) -> (f64, f64, f64) {
        let d = (self.y1 - self.y0) / self.h;
        (-6.0 * d + 3.0 * (self.m0 + self.m1), 6.0 * d - 4.0 * self.m0 - 2.0 * self.m1, self.m0)
    }

    fn deriv(&self, s: f64) -> f64 {
        let (a, b, c) = self.coeffs();
        (a * s + b) * s + c
    }

    /// Zeros of the derivative strictly inside (0, 1), ascending.
    fn critical(&self) -> Vec<f64> {
        let (a, b, c) = self.coeffs();
        let scale = a.abs().max(b.abs()).max(c.abs());
        let mut r = Vec::new();
        if scale == 0.0 {
            return r;
        }
        if a.abs() <= 1e-14 * scale {
            if b != 0.0 {
                r.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let q = -0.5 * (b + b.signum() * disc.sqrt());
                if q != 0.0 {
                    r.push(q / a);
                    r.push(c / q);
                } else {
                    r.push(0.0);
                }
            }
        }
        r.retain(|s| *s > 0.0 && *s < 1.0);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r
    }

    fn deriv_range(&self) -> (f64, f64) {
        let (a, b, _) = self.coeffs();
        let mut lo = self.m0.min(self.m1);
        let mut hi = self.m0.max(self.m1);
        if a != 0.0 {
            let s = -b / (2.0 * a);
            if s > 0.0 && s < 1.0 {
                let v = self.deriv(s);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Values at the segment ends and at interior critical points.
    fn turning_values(&self) -> Vec<f64> {
        let mut v = vec![self.y0];
        v.extend(self.critical().into_iter().map(|s| self.value(s)));
        v.push(self.y1);
        v
    }
}

impl ProfileC1 {
    pub fn new(knots: Vec<Knot>) -> Result<ProfileC1> {
        if knots.len() < 2 {
            return Err(Error::Invalid("a profile needs at least two knots".into()));
        }
        if knots.iter().any(|k| !(k.x.is_finite() && k.u.is_finite() && k.du.is_finite())) {
            return Err(Error::Invalid("profile knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].x <= w[0].x) {
            return Err(Error::Invalid("profile knots must have strictly increasing x".into()));
        }
        Ok(ProfileC1 { knots })
    }

    pub fn constant(c: f64, a: f64, b: f64) -> Result<ProfileC1> {
        Self::new(vec![Knot { x: a, u: c, du: 0.0 }, Knot { x: b, u: c, du: 0.0 }])
    }

    pub fn linear(u_a: f64, slope: f64, a: f64, b: f64) -> Result<ProfileC1> {
        Self::new(vec![Knot { x: a, u: u_a, du: slope }, Knot { x: b, u: u_a + slope * (b - a), du: slope }])
    }

    /// Hermite interpolant of `(f, df)` on `n` uniform knots.
    pub fn from_fn<F: Fn(f64) -> f64, D: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F, df: D) -> Result<ProfileC1> {
        let n = n.max(2);
        let knots = (0..n)
            .map(|i| {
                let x = if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 };
                Knot { x, u: f(x), du: df(x) }
            })
            .collect();
        Self::new(knots)
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn domain(&self) -> Interval {
        Interval { lo: self.knots[0].x, hi: self.knots[self.knots.len() - 1].x }
    }

    fn seg(&self, i: usize) -> Seg {
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        Seg { x0: k0.x, h: k1.x - k0.x, y0: k0.u, y1: k1.u, m0: k0.du, m1: k1.du }
    }

    fn segs(&self) -> impl Iterator<Item = Seg> + '_ {
        (0..self.knots.len() - 1).map(|i| self.seg(i))
    }

    fn locate(&self, x: f64) -> (Seg, f64) {
        let n = self.knots.len();
        let i = match self.knots.partition_point(|k| k.x <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let s = self.seg(i);
        let t = ((x - s.x0) / s.h).clamp(0.0, 1.0);
        (s, t)
    }

    /// Value; constant extension by the end values outside the domain.
    pub fn value(&self, x: f64) -> f64 {
        let d = self.domain();
        if x <= d.lo {
            return self.knots[0].u;
        }
        if x >= d.hi {
            return self.knots[self.knots.len() - 1].u;
        }
        let (s, t) = self.locate(x);
        s.value(t)
    }

    /// Derivative; zero outside the domain.
    pub fn deriv(&self, x: f64) -> f64 {
        let d = self.domain();
        if x < d.lo || x > d.hi {
            return 0.0;
        }
        let (s, t) = self.locate(x);
        s.deriv(t)
    }

    pub fn left_value(&self) -> f64 {
        self.knots[0].u
    }

    pub fn right_value(&self) -> f64 {
        self.knots[self.knots.len() - 1].u
    }

    /// Exact range of the profile.
    pub fn image(&self) -> Interval {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in self.segs() {
            for v in s.turning_values() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Interval { lo, hi }
    }

    pub fn sup_norm(&self) -> f64 {
        let im = self.image();
        im.lo.abs().max(im.hi.abs())
    }

    /// `(inf u', sup u')`.
    pub fn deriv_range(&self) -> (f64, f64) {
        self.segs().map(|s| s.deriv_range()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| (a.min(c), b.max(d)))
    }

    /// `sup |u'|`.
    pub fn deriv_sup(&self) -> f64 {
        let (lo, hi) = self.deriv_range();
        lo.abs().max(hi.abs())
    }

    /// `sup ⌊u'⌋₋`.
    pub fn deriv_neg_sup(&self) -> f64 {
        (-self.deriv_range().0).max(0.0)
    }

    /// `sup ⌊u'⌋₊`.
    pub fn deriv_pos_sup(&self) -> f64 {
        self.deriv_range().1.max(0.0)
    }

    pub fn variation(&self) -> Variation {
        let (mut neg, mut pos) = (0.0, 0.0);
        for s in self.segs() {
            for w in s.turning_values().windows(2) {
                let d = w[1] - w[0];
                if d > 0.0 {
                    pos += d;
                } else {
                    neg -= d;
                }
            }
        }
        Variation { tv: neg + pos, tv_neg: neg, tv_pos: pos, sup_norm: self.sup_norm() }
    }

    /// `x ↦ p(a + b − x)`.
    pub fn reflect(&self) -> ProfileC1 {
        let d = self.domain();
        let knots = self.knots.iter().rev().map(|k| Knot { x: d.lo + d.hi - k.x, u: k.u, du: -k.du }).collect();
        ProfileC1 { knots }
    }

    /// `x ↦ p(s − x)`, defined on the mirrored domain.
    pub fn reflect_across(&self, s: f64) -> ProfileC1 {
        let knots = self.knots.iter().rev().map(|k| Knot { x: s - k.x, u: k.u, du: -k.du }).collect();
        ProfileC1 { knots }
    }

    /// `p + c`.
    pub fn shifted(&self, c: f64) -> ProfileC1 {
        ProfileC1 { knots: self.knots.iter().map(|k| Knot { u: k.u + c, ..*k }).collect() }
    }

    /// `−p`.
    pub fn negated(&self) -> ProfileC1 {
        ProfileC1 { knots: self.knots.iter().map(|k| Knot { x: k.x, u: -k.u, du: -k.du }).collect() }
    }

    /// `∫ |p − g|` over the domain, by composite Gauss–Legendre per segment.
    pub fn l1_distance<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let gl = crate::quadrature::GaussLegendre::gl16();
        self.segs().map(|s| gl.integrate(s.x0, s.x0 + s.h, |x| (s.value((x - s.x0) / s.h) - g(x)).abs())).sum()
    }

    /// Maximal value and derivative mismatch against another representation on sample points.
    pub fn max_mismatch<G: Fn(f64) -> f64>(&self, g: G, n: usize) -> f64 {
        self.domain().linspace(n).into_iter().map(|x| (self.value(x) - g(x)).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine() -> ProfileC1 {
        ProfileC1::from_fn(0.0, 1.0, 401, |x| (2.0 * PI * x).sin(), |x| 2.0 * PI * (2.0 * PI * x).cos()).unwrap()
    }

    #[test]
    fn sine_variation() {
        let v = sine().variation();
        assert!((v.tv - 4.0).abs() < 1e-9, "{v:?}");
        assert!((v.tv_neg - 2.0).abs() < 1e-9);
        assert!((v.sup_norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_and_monotone() {
        let c = ProfileC1::constant(-0.3, 0.0, 2.0).unwrap();
        assert_eq!(c.variation(), Variation { tv: 0.0, tv_neg: 0.0, tv_pos: 0.0, sup_norm: 0.3 });
        let m = ProfileC1::from_fn(0.0, 1.0, 20, |x| x * x * x, |x| 3.0 * x * x).unwrap();
        assert_eq!(m.variation().tv_neg, 0.0);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = ProfileC1::from_fn(-1.0, 2.0, 7, |x| x * x * x - x, |x| 3.0 * x * x - 1.0).unwrap();
        for x in [-0.9, -0.2, 0.55, 1.97] {
            assert!((p.value(x) - (x * x * x - x)).abs() < 1e-12);
            assert!((p.deriv(x) - (3.0 * x * x - 1.0)).abs() < 1e-12);
        }
        let (lo, hi) = p.deriv_range();
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 11.0).abs() < 1e-12);
    }

    #[test]
    fn reflection_swaps_one_sided_slopes() {
        let p = ProfileC1::from_fn(0.0, 1.0, 50, |x| x.sin() - 2.0 * x * x, |x| x.cos() - 4.0 * x).unwrap();
        let r = p.reflect();
        assert!((p.deriv_pos_sup() - r.deriv_neg_sup()).abs() < 1e-14);
        assert!((r.value(0.2) - p.value(0.8)).abs() < 1e-14);
    }

    #[test]
    fn constant_extension_outside() {
        let p = ProfileC1::linear(1.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(p.value(-5.0), 1.0);
        assert_eq!(p.value(5.0), 3.0);
        assert_eq!(p.deriv(5.0), 0.0);
    }
}
