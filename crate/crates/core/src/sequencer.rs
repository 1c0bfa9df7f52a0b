//! Visit sequences: generation from obligations, feasible initial states and
//! runtime maintenance (hits, dwells, rolling deadlines, alternative swaps).

use std::cmp::Ordering;

use rand::Rng;

use crate::cbf::{self, CbfEvaluation, CbfParams, ShieldConfig};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::stl::{Obligation, Recurrence, TaskSet};
use crate::world::{dist_wc_agent, dist_wc_pair, Arena, Region};

const TIME_TOL: f64 = 1e-9;

/// One pending visit of the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedVisit {
    /// Index into the obligation list the visit was planned from.
    pub obligation: usize,
    pub task: usize,
    /// Region indices that discharge the visit.
    pub alternatives: Vec<usize>,
    /// The alternative currently targeted.
    pub region: usize,
    pub release: f64,
    pub deadline: f64,
    pub dwell: f64,
    pub recurrence: Option<Recurrence>,
}

impl PlannedVisit {
    /// A plain reach visit with no alternatives.
    pub fn single(region: usize, deadline: f64) -> Self {
        PlannedVisit {
            obligation: 0,
            task: 0,
            alternatives: vec![region],
            region,
            release: 0.0,
            deadline,
            dwell: 0.0,
            recurrence: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellProgress {
    pub region: usize,
    pub started: f64,
    pub until: f64,
}

/// A discharged visit. For dwell visits `time` is the entry time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitRecord {
    pub obligation: usize,
    pub task: usize,
    pub region: usize,
    pub time: f64,
    pub deadline: f64,
}

impl HitRecord {
    pub fn delay(&self) -> f64 {
        (self.time - self.deadline).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SequenceEvent {
    Hit(HitRecord),
    DwellStarted(DwellProgress),
    DwellCancelled,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceState {
    pub items: Vec<PlannedVisit>,
    pub dwell: Option<DwellProgress>,
    pub hits: Vec<HitRecord>,
}

/// Region indices of each obligation's alternatives.
fn resolve(tasks: &TaskSet, regions: &[Region]) -> Result<Vec<Vec<usize>>> {
    tasks
        .obligations
        .iter()
        .map(|o| {
            o.alternatives
                .iter()
                .map(|n| {
                    regions
                        .iter()
                        .position(|r| &r.name == n)
                        .ok_or_else(|| Error::UnknownRegion(n.clone()))
                })
                .collect()
        })
        .collect()
}

/// Minimal number of visits that can cover a recurring obligation.
pub fn minimal_hits(o: &Obligation) -> usize {
    match o.recurrence {
        Some(rec) => (((rec.coverage - o.release) / rec.period - TIME_TOL).ceil().max(1.0)) as usize,
        None => 1,
    }
}

/// Planned deadlines when a recurring obligation is covered with `reps`
/// visits spaced evenly over the window (never more than a period apart).
fn recurring_deadlines(o: &Obligation, rec: Recurrence, reps: usize) -> Vec<f64> {
    let span = (rec.coverage - o.release + rec.period) / reps as f64;
    let step = rec.period.min(span);
    (1..=reps).map(|k| o.release + k as f64 * step).collect()
}

fn visits_of(idx: usize, o: &Obligation, alts: &[usize], reps: usize) -> Vec<PlannedVisit> {
    let base = PlannedVisit {
        obligation: idx,
        task: o.task,
        alternatives: alts.to_vec(),
        region: alts[0],
        release: o.release,
        deadline: o.deadline,
        dwell: o.dwell,
        recurrence: o.recurrence,
    };
    match o.recurrence {
        None => vec![base],
        Some(rec) => recurring_deadlines(o, rec, reps)
            .into_iter()
            .map(|deadline| PlannedVisit {
                deadline,
                ..base.clone()
            })
            .collect(),
    }
}

/// A candidate ordering before alternatives are chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub visits: Vec<PlannedVisit>,
    /// Visits beyond the minimal count, summed over recurring obligations.
    pub extra_reps: usize,
}

/// All ways of distributing `total` extra visits over `slots` obligations.
fn distributions(slots: usize, total: usize) -> Vec<Vec<usize>> {
    if slots == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in distributions(slots - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn interleavings(lists: &[Vec<PlannedVisit>], cap: usize, out: &mut Vec<Vec<PlannedVisit>>) {
    fn rec(lists: &[Vec<PlannedVisit>], pos: &mut [usize], cur: &mut Vec<PlannedVisit>, cap: usize, out: &mut Vec<Vec<PlannedVisit>>) {
        if out.len() >= cap {
            return;
        }
        let mut done = true;
        for i in 0..lists.len() {
            if pos[i] < lists[i].len() {
                done = false;
                cur.push(lists[i][pos[i]].clone());
                pos[i] += 1;
                rec(lists, pos, cur, cap, out);
                pos[i] -= 1;
                cur.pop();
            }
        }
        if done {
            out.push(cur.clone());
        }
    }
    rec(lists, &mut vec![0; lists.len()], &mut Vec::new(), cap, out);
}

fn priority(a: &[PlannedVisit], b: &[PlannedVisit], regions: &[Region]) -> Ordering {
    let deadlines = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.deadline.total_cmp(&y.deadline))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal);
    deadlines.then_with(|| {
        let names = |v: &[PlannedVisit]| -> Vec<Vec<&str>> {
            v.iter()
                .map(|p| p.alternatives.iter().map(|&r| regions[r].name.as_str()).collect())
                .collect()
        };
        names(a).cmp(&names(b))
    })
}

/// Candidate orderings in the order they are tried: fewer extra recurring
/// visits first, then earliest deadlines first, then by region names.
pub fn enumerate_candidates(tasks: &TaskSet, regions: &[Region], cfg: &ShieldConfig) -> Result<Vec<Candidate>> {
    let alts = resolve(tasks, regions)?;
    let recurring: Vec<usize> = (0..tasks.obligations.len())
        .filter(|&i| tasks.obligations[i].recurrence.is_some())
        .collect();
    let mut out = Vec::new();
    for extra in 0..=cfg.max_extra_reps {
        let mut group = Vec::new();
        for dist in distributions(recurring.len(), extra) {
            let lists: Vec<Vec<PlannedVisit>> = tasks
                .obligations
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    let more = recurring.iter().position(|&r| r == i).map_or(0, |k| dist[k]);
                    visits_of(i, o, &alts[i], minimal_hits(o) + more)
                })
                .collect();
            interleavings(&lists, cfg.max_candidates, &mut group);
        }
        group.sort_by(|a, b| priority(a, b, regions));
        for visits in group {
            if out.len() >= cfg.max_candidates {
                return Ok(out);
            }
            out.push(Candidate {
                visits,
                extra_reps: extra,
            });
        }
        if recurring.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Picks, visit by visit, the alternative closest in worst-case distance to
/// the previous choice (or to `x0` for the first visit).
fn choose_alternatives(x0: Vec2, visits: &mut [PlannedVisit], regions: &[Region]) -> Result<()> {
    for i in 0..visits.len() {
        let mut best: Option<(usize, f64)> = None;
        for &alt in &visits[i].alternatives {
            let d = if i == 0 {
                dist_wc_agent(x0, &regions[alt], visits[i].deadline.max(0.0))?
            } else {
                let prev = &visits[i - 1];
                dist_wc_pair(&regions[prev.region], &regions[alt], prev.deadline.max(0.0), visits[i].deadline.max(0.0))?
            };
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((alt, d));
            }
        }
        visits[i].region = best.expect("alternatives are non-empty").0;
    }
    Ok(())
}

/// First candidate ordering whose barrier candidates are all at least the
/// feasibility margin at `(x0, 0)`, or `None` when there is none.
pub fn generate_sequence(
    x0: Vec2,
    tasks: &TaskSet,
    regions: &[Region],
    params: &CbfParams,
    cfg: &ShieldConfig,
) -> Result<Option<SequenceState>> {
    if tasks.obligations.is_empty() {
        return Ok(Some(SequenceState::default()));
    }
    for cand in enumerate_candidates(tasks, regions, cfg)? {
        let mut visits = cand.visits;
        choose_alternatives(x0, &mut visits, regions)?;
        let values = cbf::candidates(x0, &visits, regions, 0.0, params)?;
        if values.iter().all(|&b| b >= cfg.feasibility_margin) {
            return Ok(Some(SequenceState {
                items: visits,
                ..Default::default()
            }));
        }
    }
    Ok(None)
}

/// Rejection-samples a uniformly distributed initial state from which a
/// feasible sequence exists.
pub fn sample_feasible_state(
    tasks: &TaskSet,
    regions: &[Region],
    arena: &Arena,
    params: &CbfParams,
    cfg: &ShieldConfig,
    rng: &mut impl Rng,
) -> Result<(Vec2, SequenceState)> {
    for _ in 0..cfg.sampler_attempts {
        let x = arena.sample(rng);
        if let Some(seq) = generate_sequence(x, tasks, regions, params, cfg)? {
            return Ok((x, seq));
        }
    }
    Err(Error::SamplerExhausted {
        attempts: cfg.sampler_attempts,
        detail: format!(
            "no candidate sequence kept every barrier candidate above {} for {} obligations",
            cfg.feasibility_margin,
            tasks.obligations.len()
        ),
    })
}

impl SequenceState {
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn front(&self) -> Option<&PlannedVisit> {
        self.items.first()
    }

    /// `tau_j(t) = D_j - t`, clamped at zero.
    pub fn remaining_times(&self, t: f64) -> Vec<f64> {
        self.items.iter().map(|v| (v.deadline - t).max(0.0)).collect()
    }

    /// `min_{j >= i} tau_j(t)` for every `i`.
    pub fn effective_times(&self, t: f64) -> Vec<f64> {
        let mut out = self.remaining_times(t);
        for i in (0..out.len().saturating_sub(1)).rev() {
            out[i] = out[i].min(out[i + 1]);
        }
        out
    }

    /// Removes the front visit, discharged at time `t` in `region`. A
    /// recurring visit hit before its coverage time replaces the remaining
    /// visits of its obligation with fresh ones a period apart, merged by
    /// deadline.
    pub fn on_hit(&mut self, t: f64, region: usize) -> Option<HitRecord> {
        if self.items.is_empty() {
            return None;
        }
        let front = self.items.remove(0);
        self.dwell = None;
        let rec = HitRecord {
            obligation: front.obligation,
            task: front.task,
            region,
            time: t,
            deadline: front.deadline,
        };
        self.hits.push(rec);
        if let Some(r) = front.recurrence {
            self.items.retain(|v| v.obligation != front.obligation);
            if t < r.coverage - TIME_TOL {
                let needed = ((r.coverage - t) / r.period - TIME_TOL).ceil().max(1.0) as usize;
                for k in 1..=needed {
                    let v = PlannedVisit {
                        region,
                        release: t,
                        deadline: t + k as f64 * r.period,
                        ..front.clone()
                    };
                    let at = self
                        .items
                        .iter()
                        .position(|o| o.deadline > v.deadline)
                        .unwrap_or(self.items.len());
                    self.items.insert(at, v);
                }
            }
        }
        Some(rec)
    }

    /// Advances dwell bookkeeping and discharges the front visit when the
    /// agent at `x` meets it at time `t`.
    pub fn update(&mut self, x: Vec2, t: f64, regions: &[Region], cfg: &ShieldConfig) -> Option<SequenceEvent> {
        if let Some(dw) = self.dwell {
            if regions[dw.region].signed_distance(x) > 0.0 {
                self.dwell = None;
                return Some(SequenceEvent::DwellCancelled);
            }
            if t >= dw.until - TIME_TOL {
                return self.on_hit(dw.started, dw.region).map(SequenceEvent::Hit);
            }
            return None;
        }
        let front = self.items.first()?;
        if t < front.release - TIME_TOL {
            return None;
        }
        let depth = if front.dwell > 0.0 {
            -cfg.dwell_entry_margin
        } else {
            0.0
        };
        let hit = std::iter::once(front.region)
            .chain(front.alternatives.iter().copied())
            .find(|&r| regions[r].signed_distance(x) <= depth)?;
        if front.dwell > 0.0 {
            let dw = DwellProgress {
                region: hit,
                started: t,
                until: t + front.dwell,
            };
            self.items[0].region = hit;
            self.dwell = Some(dw);
            Some(SequenceEvent::DwellStarted(dw))
        } else {
            self.on_hit(t, hit).map(SequenceEvent::Hit)
        }
    }

    /// Retargets the front visit to the alternative with the largest
    /// critical barrier value; the incumbent wins ties. Returns whether the
    /// target changed.
    pub fn maybe_swap_alternative(&mut self, x: Vec2, t: f64, regions: &[Region], params: &CbfParams) -> Result<bool> {
        if self.dwell.is_some() {
            return Ok(false);
        }
        let Some(front) = self.items.first() else {
            return Ok(false);
        };
        if front.alternatives.len() < 2 {
            return Ok(false);
        }
        let incumbent = front.region;
        let mut items = self.items.clone();
        let mut best = (incumbent, cbf::evaluate(x, &items, regions, t, params)?.value);
        for &alt in &self.items[0].alternatives {
            if alt == incumbent {
                continue;
            }
            items[0].region = alt;
            let v = cbf::evaluate(x, &items, regions, t, params)?.value;
            if v > best.1 {
                best = (alt, v);
            }
        }
        self.items[0].region = best.0;
        Ok(best.0 != incumbent)
    }

    /// The barrier that governs the current phase: containment while
    /// dwelling, otherwise the time-critical sequential candidate.
    pub fn barrier(
        &self,
        x: Vec2,
        t: f64,
        regions: &[Region],
        params: &CbfParams,
        cfg: &ShieldConfig,
        dt: f64,
    ) -> Result<Option<CbfEvaluation>> {
        if let Some(dw) = self.dwell {
            let margin = cfg.dwell_time_margin.unwrap_or(dt);
            return Ok(Some(cbf::dwell_barrier(x, dw.region, regions, cfg.dwell_hold_margin, margin)));
        }
        if self.items.is_empty() {
            return Ok(None);
        }
        cbf::evaluate(x, &self.items, regions, t, params).map(Some)
    }
}
