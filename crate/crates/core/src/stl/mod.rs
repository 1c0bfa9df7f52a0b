//! Signal temporal logic: syntax, satisfaction and task normalization.

mod eval;
mod formula;
mod parser;
mod tasks;

pub use eval::{satisfies, RegionTrack, TaskVerdict, Trajectory, GRID_TOL};
pub use formula::{Formula, Interval, Predicate, Relation};
pub use parser::{check_stratification, parse};
pub use tasks::{normalize_tasks, AvoidConstraint, Obligation, Recurrence, TaskSet};

/// Horizon of `f` in time units.
pub fn horizon(f: &Formula) -> f64 {
    f.horizon()
}
