//! Pre-geodesics in `h`-arclength parametrization, two-point shooting,
//! periodic loops in winding classes, and the lightlike lift.

mod integrate;
mod lift;
mod periodic;
mod shooting;

pub use integrate::{
    h_unit, integrate_pregeodesic, pregeodesic_acceleration, GeodesicProblem, Trajectory, DEFAULT_STEPS,
};
pub(crate) use integrate::integrate_flow;
pub use lift::{lift_lightlike, SpacetimeCurve, SpacetimeSample};
pub use periodic::{periodic_search, PeriodicLoop, PeriodicOptions};
pub use shooting::{shoot_connect, shoot_connect_all, shoot_connect_class, ShootingOptions, ShootingResult};

use thiserror::Error;

use crate::fields::Winding;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("step rejected at t = {t} after repeated halving")]
    StepRejected { t: f64 },
    #[error("trajectory left the chart immediately")]
    LeftChart,
    #[error("no connector found in winding class {winding:?}")]
    NotFound { winding: Winding },
    #[error("winding must be nonzero")]
    ZeroWinding,
    #[error("winding {winding:?} is nonzero along a bounded axis")]
    NotPeriodic { winding: Winding },
    #[error("length unbounded below in class (reached {length})")]
    UnboundedBelow { length: f64 },
}
