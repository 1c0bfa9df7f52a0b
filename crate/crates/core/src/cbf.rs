//! Sequential control barrier functions over an ordered visit sequence.
//!
//! For visits `S_0..S_{n-1}` with deadlines `D_j` and dwell durations `w_j`,
//! the remaining time of visit `j` is `tau_j = max(0, D_j - t)`. Time spent
//! dwelling in earlier visits is unavailable for travel, so with offsets
//! `o_j = w_0 + .. + w_{j-1}` the effective remaining time budget is
//! `s_i = min_{j >= i} (tau_j - o_j)`. Candidate `i` is
//!
//! `b_i = s_i - chain_i / (u_max - d_max)`
//!
//! where `chain_i` sums the worst-case distance from the agent to `S_0` and
//! the pairwise worst-case distances along `S_0..S_i`. A region is inflated
//! by its speed bound times the time until it is visited (and, as a pair
//! source, until it is left). Targets are eroded by `reach_margin`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sup_inf_distance, Vec2};
use crate::sequencer::PlannedVisit;
use crate::world::Region;

/// Tunables of the shield (barrier construction, QP and sequencing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShieldConfig {
    /// Linear class-K gain: `alpha(b) = gamma * b`.
    pub gamma: f64,
    /// Slack penalty weight.
    pub k_eps: f64,
    /// Targets are eroded by this much when planning the approach.
    pub reach_margin: f64,
    /// Depth inside a region required to start a dwell.
    pub dwell_entry_margin: f64,
    /// Depth kept by the containment barrier while dwelling.
    pub dwell_hold_margin: f64,
    /// Look-ahead used for region motion in the containment barrier;
    /// defaults to the simulation step.
    pub dwell_time_margin: Option<f64>,
    /// Candidate sequences need `b_i(x0, 0) >= feasibility_margin`. A
    /// negative margin admits starts that cannot meet every deadline.
    pub feasibility_margin: f64,
    /// Extra recurring visits tried beyond the minimal count.
    pub max_extra_reps: usize,
    pub max_candidates: usize,
    pub sampler_attempts: usize,
}

impl Default for ShieldConfig {
    fn default() -> Self {
        ShieldConfig {
            gamma: 1.0,
            k_eps: 1e4,
            reach_margin: 0.8,
            dwell_entry_margin: 0.45,
            dwell_hold_margin: 0.3,
            dwell_time_margin: None,
            feasibility_margin: 0.0,
            max_extra_reps: 1,
            max_candidates: 10_000,
            sampler_attempts: 10_000,
        }
    }
}

impl ShieldConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, f: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("shield.{f}"), "must be positive"))
            }
        };
        let nonneg = |v: f64, f: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("shield.{f}"), "must be non-negative"))
            }
        };
        pos(self.gamma, "gamma")?;
        pos(self.k_eps, "k_eps")?;
        nonneg(self.reach_margin, "reach_margin")?;
        nonneg(self.dwell_entry_margin, "dwell_entry_margin")?;
        nonneg(self.dwell_hold_margin, "dwell_hold_margin")?;
        if let Some(m) = self.dwell_time_margin {
            nonneg(m, "dwell_time_margin")?;
        }
        if !self.feasibility_margin.is_finite() {
            return Err(Error::config("shield.feasibility_margin", "must be finite"));
        }
        if self.sampler_attempts == 0 || self.max_candidates == 0 {
            return Err(Error::config("shield", "attempt and candidate budgets must be positive"));
        }
        Ok(())
    }
}

/// Agent bounds and target erosion needed to evaluate the barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbfParams {
    pub u_max: f64,
    pub d_max: f64,
    pub reach_margin: f64,
}

impl CbfParams {
    pub fn new(u_max: f64, d_max: f64) -> Self {
        CbfParams {
            u_max,
            d_max,
            reach_margin: 0.0,
        }
    }

    pub fn with_margin(mut self, reach_margin: f64) -> Self {
        self.reach_margin = reach_margin;
        self
    }

    /// Net speed available against the worst disturbance.
    pub fn net_speed(&self) -> Result<f64> {
        if self.u_max > self.d_max {
            Ok(self.u_max - self.d_max)
        } else {
            Err(Error::BoundOrdering {
                u_max: self.u_max,
                d_max: self.d_max,
            })
        }
    }
}

/// Barrier value of the critical candidate and its partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CbfEvaluation {
    /// All candidate values `b_i`.
    pub values: Vec<f64>,
    /// Index of the critical candidate (smallest index on ties).
    pub critical: usize,
    pub value: f64,
    pub grad_x: Vec2,
    /// Derivative with respect to each world region center.
    pub grad_targets: Vec<Vec2>,
    pub grad_t: f64,
    /// For each `i`, the visit `j >= i` whose budget attains `s_i`.
    pub active: Vec<usize>,
    /// Some distance gradient in the critical chain is undefined.
    pub singular: bool,
}

impl CbfEvaluation {
    /// `db/dt` along the motion of the regions, excluding the agent input.
    pub fn drift(&self, regions: &[Region]) -> f64 {
        self.grad_targets
            .iter()
            .zip(regions)
            .map(|(g, r)| g.dot(r.velocity))
            .sum::<f64>()
            + self.grad_t
    }
}

/// Index and value of the smallest candidate; ties go to the smallest index.
pub fn critical(values: &[f64]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.ok_or(Error::EmptyCandidates)
}

struct Budgets {
    s: Vec<f64>,
    ds: Vec<f64>,
    active: Vec<usize>,
    /// Time until visit (clamped at 0) and its time derivative.
    visit: Vec<(f64, f64)>,
    /// Time until the region is left after dwelling.
    leave: Vec<(f64, f64)>,
}

fn budgets(items: &[PlannedVisit], t: f64) -> Budgets {
    let n = items.len();
    let mut offset = vec![0.0; n];
    for j in 1..n {
        offset[j] = offset[j - 1] + items[j - 1].dwell;
    }
    let mut s = vec![0.0; n];
    let mut ds = vec![0.0; n];
    let mut active = vec![0; n];
    for j in (0..n).rev() {
        let rem = items[j].deadline - t;
        let sigma = rem.max(0.0) - offset[j];
        let dsigma = if rem > 0.0 { -1.0 } else { 0.0 };
        if j + 1 == n || sigma < s[j + 1] {
            s[j] = sigma;
            ds[j] = dsigma;
            active[j] = j;
        } else {
            s[j] = s[j + 1];
            ds[j] = ds[j + 1];
            active[j] = active[j + 1];
        }
    }
    let clamp = |v: f64, dv: f64| if v > 0.0 { (v, dv) } else { (0.0, 0.0) };
    let visit = (0..n).map(|i| clamp(s[i] + offset[i], ds[i])).collect();
    let leave = (0..n)
        .map(|i| clamp(s[i] + offset[i] + items[i].dwell, ds[i]))
        .collect();
    Budgets {
        s,
        ds,
        active,
        visit,
        leave,
    }
}

/// All candidate values `b_i(x, t)`.
pub fn candidates(x: Vec2, items: &[PlannedVisit], regions: &[Region], t: f64, p: &CbfParams) -> Result<Vec<f64>> {
    Ok(evaluate(x, items, regions, t, p)?.values)
}

/// Evaluates every candidate and the partials of the critical one.
pub fn evaluate(x: Vec2, items: &[PlannedVisit], regions: &[Region], t: f64, p: &CbfParams) -> Result<CbfEvaluation> {
    if items.is_empty() {
        return Err(Error::EmptySequence);
    }
    let ubar = p.net_speed()?;
    let region = |i: usize| &regions[items[i].region];
    let bud = budgets(items, t);
    let n = items.len();

    let first = region(0);
    let d0 = first.shape.shrunk(p.reach_margin).distance_sample(x - first.center);
    let mut pair = Vec::with_capacity(n);
    let mut chain = vec![0.0; n];
    let mut dchain = vec![0.0; n];
    chain[0] = d0.value + first.speed_bound * bud.visit[0].0;
    dchain[0] = first.speed_bound * bud.visit[0].1;
    for i in 1..n {
        let (src, dst) = (region(i - 1), region(i));
        let h = sup_inf_distance(&src.shape, src.center, &dst.shape.shrunk(p.reach_margin), dst.center);
        chain[i] = chain[i - 1] + h.value + src.speed_bound * bud.leave[i - 1].0 + dst.speed_bound * bud.visit[i].0;
        dchain[i] = dchain[i - 1] + src.speed_bound * bud.leave[i - 1].1 + dst.speed_bound * bud.visit[i].1;
        pair.push(h);
    }
    let values: Vec<f64> = (0..n).map(|i| bud.s[i] - chain[i] / ubar).collect();
    let (ic, value) = critical(&values)?;

    let mut grad_targets = vec![Vec2::ZERO; regions.len()];
    grad_targets[items[0].region] += d0.grad / ubar;
    let mut singular = d0.singular;
    for (l, h) in pair.iter().enumerate().take(ic) {
        grad_targets[items[l].region] -= h.grad / ubar;
        grad_targets[items[l + 1].region] += h.grad / ubar;
        singular |= h.singular;
    }
    Ok(CbfEvaluation {
        values,
        critical: ic,
        value,
        grad_x: -d0.grad / ubar,
        grad_targets,
        grad_t: bud.ds[ic] - dchain[ic] / ubar,
        active: bud.active,
        singular,
    })
}

/// Containment barrier used while dwelling inside `regions[region]`:
/// `-(Dist(x, P) + hold) - v_P * time_margin`.
pub fn dwell_barrier(x: Vec2, region: usize, regions: &[Region], hold: f64, time_margin: f64) -> CbfEvaluation {
    let r = &regions[region];
    let d = r.distance_sample(x);
    let value = -(d.value + hold) - r.speed_bound * time_margin;
    let mut grad_targets = vec![Vec2::ZERO; regions.len()];
    grad_targets[region] = d.grad;
    CbfEvaluation {
        values: vec![value],
        critical: 0,
        value,
        grad_x: -d.grad,
        grad_targets,
        grad_t: 0.0,
        active: vec![0],
        singular: d.singular,
    }
}
