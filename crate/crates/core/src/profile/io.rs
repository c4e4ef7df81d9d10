//! JSON form of profiles: `{pieces: [{x_lo, x_hi, knots}], jumps: [{x, u_left, u_right}]}`.

use serde::{Deserialize, Serialize};

use super::bv::{Jump, ProfileBV};
use super::c1::{Knot, ProfileC1};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDoc {
    pub x_lo: f64,
    pub x_hi: f64,
    pub knots: Vec<Knot>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    pub pieces: Vec<PieceDoc>,
    #[serde(default)]
    pub jumps: Vec<Jump>,
}

const MATCH_TOL: f64 = 1e-9;

impl ProfileDoc {
    pub fn into_profile(self) -> Result<ProfileBV> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for (i, pd) in self.pieces.into_iter().enumerate() {
            let (first, last) = match (pd.knots.first(), pd.knots.last()) {
                (Some(f), Some(l)) => (*f, *l),
                _ => return Err(Error::Parse(format!("piece {i} has no knots"))),
            };
            if first.x != pd.x_lo || last.x != pd.x_hi {
                return Err(Error::Parse(format!(
                    "piece {i}: knots span [{}, {}] but the piece is [{}, {}]",
                    first.x, last.x, pd.x_lo, pd.x_hi
                )));
            }
            pieces.push(ProfileC1::new(pd.knots).map_err(|e| Error::Parse(format!("piece {i}: {e}")))?);
        }
        let p = ProfileBV::new(pieces).map_err(|e| Error::Parse(e.to_string()))?;
        let joints = p.joints();
        for j in &self.jumps {
            let found = joints.iter().find(|q| (q.x - j.x).abs() <= MATCH_TOL * q.x.abs().max(1.0));
            match found {
                Some(q) if close(q.u_left, j.u_left) && close(q.u_right, j.u_right) => {}
                Some(q) => {
                    return Err(Error::Parse(format!(
                        "jump at {}: declared {} -> {}, pieces give {} -> {}",
                        j.x, j.u_left, j.u_right, q.u_left, q.u_right
                    )))
                }
                None => return Err(Error::Parse(format!("jump at {} is not at a piece boundary", j.x))),
            }
        }
        for q in p.jumps() {
            if !self.jumps.iter().any(|j| (q.x - j.x).abs() <= MATCH_TOL * q.x.abs().max(1.0)) {
                return Err(Error::Parse(format!(
                    "pieces jump from {} to {} at {} without a declared jump",
                    q.u_left, q.u_right, q.x
                )));
            }
        }
        Ok(p)
    }

    pub fn from_profile(p: &ProfileBV) -> ProfileDoc {
        ProfileDoc {
            pieces: p
                .pieces()
                .iter()
                .map(|q| PieceDoc { x_lo: q.domain().lo, x_hi: q.domain().hi, knots: q.knots().to_vec() })
                .collect(),
            jumps: p.jumps(),
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= MATCH_TOL * a.abs().max(b.abs()).max(1.0)
}

pub fn parse_profile(text: &str) -> Result<ProfileBV> {
    let doc: ProfileDoc = serde_json::from_str(text)?;
    doc.into_profile()
}

pub fn profile_to_json(p: &ProfileBV) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ProfileDoc::from_profile(p))?)
}
