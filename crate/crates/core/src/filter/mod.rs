//! Corrective control from the barrier QP and the slack-based lower bound.

mod bound;
mod qp;

pub use bound::BoundTracker;
pub use qp::{compose, solve_qp, ActiveSet, BarrierConstraint, QpSolution};
