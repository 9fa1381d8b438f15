//! Time integration of the controlled CGL equation by composition of exact
//! sub-flows.

mod flows;
mod params;
mod picard;
mod resolve;
mod stability;

pub use flows::{control_flow, linear_propagator, nonlinear_flow, step, Stepper};
pub use params::{CGLParams, ControlSchedule, ControlSegment, SolverConfig, SubstepPolicy};
pub use picard::{picard_reference, PICARD_ITERATION_CAP};
pub use resolve::{resolve, resolve_with, Trajectory, TrajectoryRow, TRAJECTORY_CSV_HEADER};
pub use stability::stability_probe;
