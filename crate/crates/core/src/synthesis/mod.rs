//! Control schedules realizing null control, phase steering through the
//! saturation chain, and the small-time conjugation limit.

mod config;
mod conjugation;
mod execute;
mod limit;
mod mollifier;
mod null;
mod plan;

pub use config::{BudgetSplit, SynthesisConfig};
pub use conjugation::{conjugation_coeffs, phase_coupling, ConjugationCoeffs};
pub use execute::{execute_and_refine, execute_plan, NodeError, PhaseOutcome, RefinementRow, REFINEMENT_CSV_HEADER};
pub use limit::{limit_probe, limit_probe_with, log_log_slope, LimitRow, LIMIT_CSV_HEADER};
pub use mollifier::{same_argument_target, MollifierSpec};
pub use null::{null_control_schedule, NullControl};
pub use plan::{control_for, phase_plan, PhasePlan, PlanNode};
