//! Source controls: piecewise-linear signals, parameter selection, composition.

mod compose;
mod signal;
mod synthesis;
mod u0;

pub use signal::{ControlSignal, Piece, SignalBuilder};
pub use synthesis::{
    build_null_control, build_stage_control, select_parameters, BoundMode, NullPlan, NullProblem,
    SynthesisCertificate, Travel,
};
pub use u0::{h2_growth, u0_search, Growth, Truncation};
pub use compose::{compose_full_control, default_interval, CompositionPlan, SteeringProblem, IMAGE_PAD, STAGE_SHARE};
