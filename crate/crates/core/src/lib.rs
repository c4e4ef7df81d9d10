//! Controllability of scalar conservation laws through a time-dependent source term.

pub mod error;
pub mod flux;
pub mod interval;
pub mod optimize;
pub mod quadrature;

pub use error::{Error, Result};
pub use flux::{Derivative, FluxModel, Shape};
pub use interval::Interval;
pub mod metrics;
mod serde_f64;
pub mod profile;
pub mod control;
pub mod characteristics;
pub mod hypotheses;
pub mod steering;
pub mod fv;
pub mod pipeline;
pub mod scenario;
