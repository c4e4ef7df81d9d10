use serde::{Deserialize, Serialize};

use super::c1::{Knot, ProfileC1, Variation};
use crate::error::{Error, Result};
use crate::interval::Interval;

/// A jump between consecutive pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub x: f64,
    pub u_left: f64,
    pub u_right: f64,
}

impl Jump {
    pub fn size(&self) -> f64 {
        self.u_right - self.u_left
    }
}

/// Contiguous C¹ pieces with jumps (possibly of size zero) at the joints.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBV {
    pieces: Vec<ProfileC1>,
}

const JOINT_TOL: f64 = 1e-12;

impl ProfileBV {
    pub fn new(pieces: Vec<ProfileC1>) -> Result<ProfileBV> {
        if pieces.is_empty() {
            return Err(Error::Invalid("a BV profile needs at least one piece".into()));
        }
        for w in pieces.windows(2) {
            let (l, r) = (w[0].domain().hi, w[1].domain().lo);
            if (l - r).abs() > JOINT_TOL * l.abs().max(1.0) {
                return Err(Error::Invalid(format!("pieces are not contiguous: {l} vs {r}")));
            }
        }
        Ok(ProfileBV { pieces })
    }

    pub fn from_c1(p: ProfileC1) -> ProfileBV {
        ProfileBV { pieces: vec![p] }
    }

    /// Piecewise constant profile: `values[i]` on `[breaks[i], breaks[i+1]]`.
    pub fn step(breaks: &[f64], values: &[f64]) -> Result<ProfileBV> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::Invalid("step profile needs one more break than values".into()));
        }
        let pieces = values
            .iter()
            .enumerate()
            .map(|(i, &v)| ProfileC1::constant(v, breaks[i], breaks[i + 1]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pieces)
    }

    pub fn pieces(&self) -> &[ProfileC1] {
        &self.pieces
    }

    pub fn domain(&self) -> Interval {
        Interval { lo: self.pieces[0].domain().lo, hi: self.pieces[self.pieces.len() - 1].domain().hi }
    }

    /// Jumps at the joints, including zero-size ones.
    pub fn joints(&self) -> Vec<Jump> {
        self.pieces
            .windows(2)
            .map(|w| Jump { x: w[1].domain().lo, u_left: w[0].right_value(), u_right: w[1].left_value() })
            .collect()
    }

    /// Joints where the value actually changes.
    pub fn jumps(&self) -> Vec<Jump> {
        self.joints().into_iter().filter(|j| j.size() != 0.0).collect()
    }

    /// Right-continuous value; constant extension outside the domain.
    pub fn value(&self, x: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.domain().hi <= x).min(self.pieces.len() - 1);
        self.pieces[i].value(x)
    }

    /// Classical derivative away from joints; zero outside.
    pub fn deriv(&self, x: f64) -> f64 {
        let d = self.domain();
        if x < d.lo || x > d.hi {
            return 0.0;
        }
        let i = self.pieces.partition_point(|p| p.domain().hi <= x).min(self.pieces.len() - 1);
        self.pieces[i].deriv(x)
    }

    pub fn image(&self) -> Interval {
        self.pieces.iter().map(|p| p.image()).reduce(|a, b| a.union_hull(&b)).unwrap()
    }

    pub fn sup_norm(&self) -> f64 {
        let im = self.image();
        im.lo.abs().max(im.hi.abs())
    }

    /// `sup ⌊D⁻u⌋₋`; infinite when some jump goes down.
    pub fn d_minus(&self) -> f64 {
        if self.jumps().iter().any(|j| j.size() < 0.0) {
            return f64::INFINITY;
        }
        self.pieces.iter().map(|p| p.deriv_neg_sup()).fold(0.0, f64::max)
    }

    /// `sup ⌊D⁺u⌋₊`; infinite when some jump goes up.
    pub fn d_plus(&self) -> f64 {
        if self.jumps().iter().any(|j| j.size() > 0.0) {
            return f64::INFINITY;
        }
        self.pieces.iter().map(|p| p.deriv_pos_sup()).fold(0.0, f64::max)
    }

    pub fn variation(&self) -> Variation {
        let mut v = Variation { tv: 0.0, tv_neg: 0.0, tv_pos: 0.0, sup_norm: self.sup_norm() };
        for p in &self.pieces {
            let pv = p.variation();
            v.tv += pv.tv;
            v.tv_neg += pv.tv_neg;
            v.tv_pos += pv.tv_pos;
        }
        for j in self.jumps() {
            let s = j.size();
            v.tv += s.abs();
            if s > 0.0 {
                v.tv_pos += s;
            } else {
                v.tv_neg -= s;
            }
        }
        v
    }

    /// The single C¹ profile when every joint is continuous in value and slope.
    pub fn as_c1(&self) -> Option<ProfileC1> {
        if self.pieces.len() == 1 {
            return Some(self.pieces[0].clone());
        }
        let mut knots: Vec<Knot> = self.pieces[0].knots().to_vec();
        for p in &self.pieces[1..] {
            let last = *knots.last().unwrap();
            let first = p.knots()[0];
            let scale = last.u.abs().max(last.du.abs()).max(1.0);
            if (last.u - first.u).abs() > 1e-9 * scale || (last.du - first.du).abs() > 1e-9 * scale {
                return None;
            }
            knots.extend_from_slice(&p.knots()[1..]);
        }
        ProfileC1::new(knots).ok()
    }

    /// `x ↦ p(a + b − x)`.
    pub fn reflect(&self) -> ProfileBV {
        ProfileBV { pieces: self.pieces.iter().rev().map(|p| reflect_in(p, self.domain())).collect() }
    }

    pub fn negated(&self) -> ProfileBV {
        ProfileBV { pieces: self.pieces.iter().map(|p| p.negated()).collect() }
    }

    /// `∫_a^b |p − g|`.
    pub fn l1_distance<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.pieces.iter().map(|p| p.l1_distance(&g)).sum()
    }
}

/// Reflect a piece inside the whole domain rather than its own.
fn reflect_in(p: &ProfileC1, whole: Interval) -> ProfileC1 {
    let knots = p
        .knots()
        .iter()
        .rev()
        .map(|k| Knot { x: whole.lo + whole.hi - k.x, u: k.u, du: -k.du })
        .collect();
    ProfileC1::new(knots).expect("reflection keeps knots ordered")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pieces(left: f64, right: f64) -> ProfileBV {
        let l = ProfileC1::from_fn(0.0, 0.5, 9, |x| left + 0.2 * x * x, |x| 0.4 * x).unwrap();
        let r = ProfileC1::from_fn(0.5, 1.0, 9, |x| right - 0.1 * x, |_| -0.1).unwrap();
        ProfileBV::new(vec![l, r]).unwrap()
    }

    #[test]
    fn tv_is_pieces_plus_jumps() {
        let p = two_pieces(1.0, 0.0);
        let pv: f64 = p.pieces().iter().map(|q| q.variation().tv).sum();
        let jv: f64 = p.jumps().iter().map(|j| j.size().abs()).sum();
        assert!((p.variation().tv - pv - jv).abs() < 1e-15);
        assert!(p.variation().tv <= 2.0 * (p.sup_norm() + p.variation().tv_neg) + 1e-9);
    }

    #[test]
    fn dini_bounds_follow_jump_signs() {
        let down = two_pieces(1.0, 0.0);
        assert!(down.d_minus().is_infinite());
        assert!((down.d_plus() - 0.2).abs() < 1e-12);
        let up = two_pieces(0.0, 1.0);
        assert!(up.d_plus().is_infinite());
        assert!((up.d_minus() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn reflection_maps_d_plus_to_d_minus() {
        let p = two_pieces(1.0, 0.0);
        let r = p.reflect();
        assert_eq!(r.d_plus(), p.d_minus());
        assert!((r.d_minus() - p.d_plus()).abs() < 1e-12);
        assert!((r.value(0.3) - p.value(0.7)).abs() < 1e-14);
    }

    #[test]
    fn continuous_joint_merges() {
        let l = ProfileC1::linear(0.0, 1.0, 0.0, 0.5).unwrap();
        let r = ProfileC1::linear(0.5, 1.0, 0.5, 1.0).unwrap();
        let p = ProfileBV::new(vec![l, r]).unwrap();
        assert!(p.jumps().is_empty());
        assert_eq!(p.as_c1().unwrap().knots().len(), 3);
        assert!(two_pieces(1.0, 0.0).as_c1().is_none());
    }
}
