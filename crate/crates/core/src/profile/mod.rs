//! Spatial states: C¹ and BV profiles, extensions to the line, mollification.

mod bv;
mod c1;
mod extend;
pub mod io;
mod mollify;

pub use bv::{Jump, ProfileBV};
pub use c1::{Knot, ProfileC1, Variation};
pub use extend::{extend_profile, ExtendedProfile, SideRule};
pub use mollify::{kernel, mollify_one_sided, Mollified, OneSided};
