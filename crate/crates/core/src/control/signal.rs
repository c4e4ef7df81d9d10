use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `h(t) = c0 + c1·(t − t_lo)` on `[t_lo, t_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub t_lo: f64,
    pub t_hi: f64,
    pub c0: f64,
    pub c1: f64,
}

impl Piece {
    pub fn len(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    pub fn start(&self) -> f64 {
        self.c0
    }

    pub fn end(&self) -> f64 {
        self.c0 + self.c1 * self.len()
    }

    /// The same end values over new times.
    fn retimed(&self, t_lo: f64, t_hi: f64) -> Piece {
        let end = self.end();
        Piece { t_lo, t_hi, c0: self.c0, c1: (end - self.c0) / (t_hi - t_lo) }
    }

    pub fn area(&self) -> f64 {
        let l = self.len();
        l * (self.c0 + 0.5 * self.c1 * l)
    }
}

/// Continuous piecewise-linear source `h` on `[0, T]` with exact primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    pieces: Vec<Piece>,
    /// `H(t_lo)` of each piece.
    offsets: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalDoc {
    pieces: Vec<Piece>,
}

const CONTINUITY_TOL: f64 = 1e-12;

impl ControlSignal {
    pub fn new(pieces: Vec<Piece>) -> Result<ControlSignal> {
        let first = pieces.first().ok_or_else(|| Error::Invalid("a control needs at least one piece".into()))?;
        if first.t_lo != 0.0 {
            return Err(Error::Invalid(format!("a control must start at t = 0, not {}", first.t_lo)));
        }
        for p in &pieces {
            if ![p.t_lo, p.t_hi, p.c0, p.c1].iter().all(|v| v.is_finite()) || p.t_hi <= p.t_lo {
                return Err(Error::Invalid(format!("bad control piece {p:?}")));
            }
        }
        let scale = pieces.iter().fold(1.0f64, |m, p| m.max(p.start().abs()).max(p.end().abs()));
        for w in pieces.windows(2) {
            if w[0].t_hi != w[1].t_lo {
                return Err(Error::Invalid(format!("control pieces leave a gap at t = {}", w[0].t_hi)));
            }
            if (w[0].end() - w[1].start()).abs() > CONTINUITY_TOL * scale {
                return Err(Error::Invalid(format!(
                    "control jumps from {} to {} at t = {}",
                    w[0].end(),
                    w[1].start(),
                    w[0].t_hi
                )));
            }
        }
        let mut offsets = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            offsets.push(acc);
            acc += p.area();
        }
        Ok(ControlSignal { pieces, offsets })
    }

    pub fn zero(t: f64) -> Result<ControlSignal> {
        Self::new(vec![Piece { t_lo: 0.0, t_hi: t, c0: 0.0, c1: 0.0 }])
    }

    pub fn constant(c: f64, t: f64) -> Result<ControlSignal> {
        Self::new(vec![Piece { t_lo: 0.0, t_hi: t, c0: c, c1: 0.0 }])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn duration(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].t_hi
    }

    /// Piece boundaries including `0` and `T`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.pieces.iter().map(|p| p.t_lo).collect();
        v.push(self.duration());
        v
    }

    fn index(&self, t: f64) -> usize {
        self.pieces.partition_point(|p| p.t_hi <= t).min(self.pieces.len() - 1)
    }

    /// `h(t)`, held constant outside `[0, T]`.
    pub fn value(&self, t: f64) -> f64 {
        let i = self.index(t);
        let p = &self.pieces[i];
        let s = (t - p.t_lo).clamp(0.0, p.len());
        p.c0 + p.c1 * s
    }

    /// `H(t) = ∫₀ᵗ h`, exact; clamped to `[0, T]`.
    pub fn primitive(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let i = self.index(t);
        let p = &self.pieces[i];
        let s = (t - p.t_lo).clamp(0.0, p.len());
        self.offsets[i] + s * (p.c0 + 0.5 * p.c1 * s)
    }

    pub fn total_integral(&self) -> f64 {
        self.primitive(self.duration())
    }

    /// Total variation (the signal is continuous, so only slopes count).
    pub fn total_variation(&self) -> f64 {
        self.pieces.iter().map(|p| (p.c1 * p.len()).abs()).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.pieces.iter().fold(0.0, |m, p| m.max(p.start().abs()).max(p.end().abs()))
    }

    /// `sup |H|`, exact: `H` is piecewise quadratic.
    pub fn primitive_sup(&self) -> f64 {
        let mut m = 0.0f64;
        for (i, p) in self.pieces.iter().enumerate() {
            m = m.max(self.offsets[i].abs()).max((self.offsets[i] + p.area()).abs());
            if p.c1 != 0.0 {
                let s = -p.c0 / p.c1;
                if s > 0.0 && s < p.len() {
                    m = m.max((self.offsets[i] + s * (p.c0 + 0.5 * p.c1 * s)).abs());
                }
            }
        }
        m
    }

    /// `t ↦ −h(T − t)`.
    pub fn reversed_negated(&self) -> ControlSignal {
        let t = self.duration();
        let pieces = self
            .pieces
            .iter()
            .rev()
            .map(|p| {
                let (t_lo, t_hi) = (t - p.t_hi, t - p.t_lo);
                Piece { t_lo, t_hi, c0: -p.end(), c1: (p.end() - p.c0) / (t_hi - t_lo) }
            })
            .collect::<Vec<_>>();
        Self::new(fix_ends(pieces)).expect("reversal keeps a valid signal")
    }

    /// `self` followed by `other` shifted to start at `self.duration()`.
    pub fn concat(&self, other: &ControlSignal) -> Result<ControlSignal> {
        let t0 = self.duration();
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().map(|p| p.retimed(p.t_lo + t0, p.t_hi + t0)));
        Self::new(fix_ends(pieces))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SignalDoc { pieces: self.pieces.clone() })?)
    }

    pub fn from_json(text: &str) -> Result<ControlSignal> {
        let doc: SignalDoc = serde_json::from_str(text)?;
        Self::new(doc.pieces).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Make consecutive pieces share exact boundary times.
fn fix_ends(mut pieces: Vec<Piece>) -> Vec<Piece> {
    for i in 0..pieces.len() {
        let t_lo = if i == 0 { 0.0 } else { pieces[i - 1].t_hi };
        pieces[i] = pieces[i].retimed(t_lo, pieces[i].t_hi);
    }
    pieces
}

/// Builder for signals assembled from consecutive ramps and plateaus.
#[derive(Debug, Default)]
pub struct SignalBuilder {
    pieces: Vec<Piece>,
    t: f64,
    level: f64,
}

impl SignalBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Linear move from the current level to `to` over `len`; zero lengths are skipped.
    pub fn ramp_to(&mut self, len: f64, to: f64) -> &mut Self {
        if len > 0.0 {
            let t_hi = self.t + len;
            let c1 = (to - self.level) / (t_hi - self.t);
            self.pieces.push(Piece { t_lo: self.t, t_hi, c0: self.level, c1 });
            self.t = t_hi;
        }
        self.level = to;
        self
    }

    pub fn hold(&mut self, len: f64) -> &mut Self {
        let level = self.level;
        self.ramp_to(len, level)
    }

    /// Trapezoid pulse with integral `amount`: ramps of `len/4`, plateau `len/2`.
    pub fn transfer(&mut self, len: f64, amount: f64) -> &mut Self {
        let top = 4.0 * amount / (3.0 * len);
        let base = self.level;
        self.ramp_to(0.25 * len, base + top).hold(0.5 * len).ramp_to(0.25 * len, base)
    }

    pub fn build(&self) -> Result<ControlSignal> {
        ControlSignal::new(fix_ends(self.pieces.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ControlSignal {
        let mut b = SignalBuilder::new();
        b.ramp_to(0.5, 2.0).hold(1.0).ramp_to(0.5, 0.0).transfer(2.0, -3.0);
        b.build().unwrap()
    }

    #[test]
    fn primitive_is_exact() {
        let h = sample();
        assert!((h.primitive(0.5) - 0.5).abs() < 1e-15);
        assert!((h.primitive(2.0) - 3.0).abs() < 1e-15);
        assert!(h.total_integral().abs() < 1e-14);
        assert_eq!(h.value(1.0), 2.0);
        assert!((h.total_variation() - 4.0 - 2.0 * 4.0 * 3.0 / 6.0).abs() < 1e-14);
        assert!(h.sup_norm() <= h.total_variation() / 2.0 + 1e-15);
    }

    #[test]
    fn reversal_identity() {
        let h = sample();
        let r = h.reversed_negated();
        let t = h.duration();
        for s in [0.0, 0.3, 1.7, 2.5, 3.9, 4.0] {
            assert!((r.value(s) + h.value(t - s)).abs() < 1e-14);
            // ∫₀ˢ −h(T−τ)dτ = H(T−s) − H(T)
            assert!((r.primitive(s) - (h.primitive(t - s) - h.total_integral())).abs() < 1e-13);
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let h = sample();
        assert_eq!(ControlSignal::from_json(&h.to_json().unwrap()).unwrap(), h);
        let jump = r#"{"pieces":[{"t_lo":0,"t_hi":1,"c0":0,"c1":1},{"t_lo":1,"t_hi":2,"c0":0,"c1":0}]}"#;
        assert!(ControlSignal::from_json(jump).is_err());
        let gap = r#"{"pieces":[{"t_lo":0,"t_hi":1,"c0":0,"c1":0},{"t_lo":1.5,"t_hi":2,"c0":0,"c1":0}]}"#;
        assert!(ControlSignal::from_json(gap).is_err());
    }

    #[test]
    fn primitive_sup_matches_sampling() {
        let h = sample();
        let sampled = (0..=4000).map(|i| h.primitive(i as f64 * 1e-3).abs()).fold(0.0, f64::max);
        assert!((h.primitive_sup() - sampled).abs() < 1e-6);
        assert!(h.primitive_sup() >= sampled);
    }
}
