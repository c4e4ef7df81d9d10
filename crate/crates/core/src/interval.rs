use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]`; either end may be infinite for flux domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::Invalid(format!("interval requires lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Degenerate intervals are allowed here (images of constant profiles).
    pub fn hull(lo: f64, hi: f64) -> Self {
        Interval { lo: lo.min(hi), hi: lo.max(hi) }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn real_line() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    /// `other ⊊ self`: contained and not equal.
    pub fn strictly_contains_interval(&self, other: &Interval) -> bool {
        self.contains_interval(other) && (other.lo > self.lo || other.hi < self.hi)
    }

    pub fn shift(&self, k: f64) -> Interval {
        Interval { lo: self.lo + k, hi: self.hi + k }
    }

    pub fn union_hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Uniform samples including both ends; requires a finite interval.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        if n <= 1 || self.width() == 0.0 {
            return vec![self.lo];
        }
        let step = self.width() / (n - 1) as f64;
        (0..n).map(|i| if i == n - 1 { self.hi } else { self.lo + step * i as f64 }).collect()
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn strict_containment() {
        let outer = Interval::new(0.0, 1.0).unwrap();
        assert!(outer.strictly_contains_interval(&Interval::hull(0.0, 0.5)));
        assert!(!outer.strictly_contains_interval(&outer));
        assert!(!outer.contains_interval(&Interval::hull(-0.1, 0.5)));
    }

    #[test]
    fn linspace_hits_ends() {
        let v = Interval::new(-1.0, 3.0).unwrap().linspace(5);
        assert_eq!(v, vec![-1.0, 0.0, 1.0, 2.0, 3.0]);
    }
}
