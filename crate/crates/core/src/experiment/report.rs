use serde::{Deserialize, Serialize};

use crate::learner::{CurvePoint, EpisodeLog, Mode, PolicyKind};

/// Slack below which a step counts as unrelaxed.
pub const EPS_ZERO: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub episodes: usize,
    /// Mean return of the last (up to) five training episodes.
    pub final_return: f64,
    pub satisfaction_rate: f64,
}

impl TrainSummary {
    pub fn from_curve(curve: &[CurvePoint]) -> Self {
        let tail = &curve[curve.len().saturating_sub(5)..];
        let mean = |f: &dyn Fn(&CurvePoint) -> f64| {
            if tail.is_empty() {
                0.0
            } else {
                tail.iter().map(f).sum::<f64>() / tail.len() as f64
            }
        };
        TrainSummary {
            episodes: curve.len(),
            final_return: mean(&|c| c.ret),
            satisfaction_rate: if curve.is_empty() {
                0.0
            } else {
                curve.iter().filter(|c| c.stl_satisfied).count() as f64 / curve.len() as f64
            },
        }
    }
}

/// Aggregate outcome of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub episodes: usize,
    pub mode: Mode,
    pub policy: PolicyKind,
    pub seed: u64,
    pub satisfaction_rate: f64,
    /// Temporal relaxation per episode: the largest deadline extension its
    /// trajectory needed (episodes that never met an obligation excluded).
    pub mean_relaxation: f64,
    pub max_relaxation: f64,
    pub episodes_with_unmet_obligation: usize,
    pub mean_return: f64,
    /// Mean over episodes of the per-episode largest slack.
    pub eps_mean: f64,
    pub eps_max: f64,
    pub slack_step_fraction: f64,
    pub bound_check_passed: bool,
    pub bound_failures: usize,
    pub worst_bound_margin: f64,
    pub phases_with_negative_start: usize,
    /// Violating episodes whose relaxation exceeded the slack bound.
    pub relaxation_failures: usize,
    /// Unrelaxed shielded episodes that still violated the specification.
    pub hard_link_failures: usize,
    pub train: Option<TrainSummary>,
}

/// Whether a violating episode stayed within the slack-implied relaxation.
pub fn relaxation_ok(log: &EpisodeLog) -> bool {
    log.satisfied || log.delays.iter().all(|d| d.is_some_and(|d| d <= log.relaxation_bound()))
}

/// Whether an unrelaxed shielded episode satisfied the specification.
pub fn hard_link_ok(log: &EpisodeLog) -> bool {
    log.mode != Mode::Shielded || log.eps_max > EPS_ZERO || log.satisfied
}

impl RunReport {
    pub fn from_logs(logs: &[EpisodeLog], policy: PolicyKind, mode: Mode, seed: u64) -> Self {
        let n = logs.len().max(1) as f64;
        let finite: Vec<f64> = logs
            .iter()
            .map(|l| l.max_delay())
            .filter(|d| d.is_finite())
            .collect();
        let qp: usize = logs.iter().map(|l| l.qp_steps).sum();
        let slack: usize = logs.iter().map(|l| l.slack_steps).sum();
        let bound_failures = logs.iter().map(|l| l.bound_failures).sum();
        RunReport {
            episodes: logs.len(),
            mode,
            policy,
            seed,
            satisfaction_rate: logs.iter().filter(|l| l.satisfied).count() as f64 / n,
            mean_relaxation: if finite.is_empty() {
                0.0
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            },
            max_relaxation: finite.iter().copied().fold(0.0, f64::max),
            episodes_with_unmet_obligation: logs.len() - finite.len(),
            mean_return: logs.iter().map(|l| l.ret).sum::<f64>() / n,
            eps_mean: logs.iter().map(|l| l.eps_max).sum::<f64>() / n,
            eps_max: logs.iter().map(|l| l.eps_max).fold(0.0, f64::max),
            slack_step_fraction: if qp == 0 { 0.0 } else { slack as f64 / qp as f64 },
            bound_check_passed: bound_failures == 0,
            bound_failures,
            worst_bound_margin: logs
                .iter()
                .map(|l| l.worst_bound_margin)
                .fold(f64::INFINITY, f64::min),
            phases_with_negative_start: logs.iter().map(|l| l.unmet_preconditions).sum(),
            relaxation_failures: logs.iter().filter(|l| !relaxation_ok(l)).count(),
            hard_link_failures: logs.iter().filter(|l| !hard_link_ok(l)).count(),
            train: None,
        }
    }
}
