//! Boolean satisfaction of STL formulas over sampled trajectories.
//!
//! Interval bounds `[t+a, t+b]` are mapped to the sample indices
//! `ceil((t+a)/dt) ..= floor((t+b)/dt)`. Each node is evaluated once over the
//! whole trajectory; windowed operators use prefix counts so the cost is
//! linear in the trajectory length per node.

use super::formula::{Formula, Interval, Predicate, Relation};
use crate::error::{Error, Result};
use crate::geometry::{Shape, Vec2};

/// Relative tolerance used when snapping interval bounds to the sample grid.
pub const GRID_TOL: f64 = 1e-9;

/// A moving region sampled alongside the agent trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTrack {
    pub name: String,
    pub shape: Shape,
    pub centers: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<Vec2>,
    pub regions: Vec<RegionTrack>,
}

impl Trajectory {
    pub fn new(dt: f64, states: Vec<Vec2>) -> Result<Self> {
        Self::with_regions(dt, states, Vec::new())
    }

    pub fn with_regions(dt: f64, states: Vec<Vec2>, regions: Vec<RegionTrack>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("sample period {dt} must be > 0")));
        }
        if states.is_empty() {
            return Err(Error::InvalidTrajectory("no samples".into()));
        }
        if let Some(r) = regions.iter().find(|r| r.centers.len() != states.len()) {
            return Err(Error::InvalidTrajectory(format!(
                "region `{}` has {} samples, trajectory has {}",
                r.name,
                r.centers.len(),
                states.len()
            )));
        }
        Ok(Self {
            dt,
            states,
            regions,
        })
    }

    /// One-dimensional convenience constructor: `x2` is zero.
    pub fn scalar(dt: f64, xs: &[f64]) -> Result<Self> {
        Self::new(dt, xs.iter().map(|&x| Vec2::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn region(&self, name: &str) -> Result<&RegionTrack> {
        self.regions
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegion(name.to_string()))
    }

    /// Membership signal of a named region over all samples.
    pub fn inside_signal(&self, name: &str) -> Result<Vec<bool>> {
        let track = self.region(name)?;
        Ok(self
            .states
            .iter()
            .zip(&track.centers)
            .map(|(&x, &c)| track.shape.signed_distance(x - c) <= 0.0)
            .collect())
    }

    /// Sample index of time `t` (rounded up onto the grid).
    pub fn index_of(&self, t: f64) -> usize {
        (t / self.dt - GRID_TOL).ceil().max(0.0) as usize
    }

    fn offsets(&self, iv: &Interval) -> (usize, usize) {
        let lo = (iv.lo / self.dt - GRID_TOL).ceil().max(0.0) as usize;
        let hi = (iv.hi / self.dt + GRID_TOL).floor().max(0.0) as usize;
        (lo, hi)
    }

    fn horizon_samples(&self, f: &Formula) -> usize {
        match f {
            Formula::Pred(_) => 0,
            Formula::Not(g) => self.horizon_samples(g),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().map(|g| self.horizon_samples(g)).max().unwrap_or(0)
            }
            Formula::Finally(iv, g) | Formula::Globally(iv, g) => {
                self.offsets(iv).1 + self.horizon_samples(g)
            }
            Formula::Until(iv, a, b) => {
                self.offsets(iv).1 + self.horizon_samples(a).max(self.horizon_samples(b))
            }
        }
    }

    /// Whether `(x, t) |= f`.
    pub fn satisfies(&self, f: &Formula, t: f64) -> Result<bool> {
        let k = self.index_of(t);
        let needed = k + self.horizon_samples(f);
        if needed >= self.len() {
            return Err(Error::TrajectoryTooShort {
                needed,
                available: self.len(),
            });
        }
        Ok(self.signal(f)?[k])
    }

    /// Truth value of `f` at every sample. Entries whose evaluation window
    /// runs past the end of the trajectory are computed on the truncated
    /// window and must not be relied upon.
    pub fn signal(&self, f: &Formula) -> Result<Vec<bool>> {
        let n = self.len();
        Ok(match f {
            Formula::Pred(p) => self.predicate_signal(p)?,
            Formula::Not(g) => self.signal(g)?.into_iter().map(|v| !v).collect(),
            Formula::And(fs) => {
                let mut acc = vec![true; n];
                for g in fs {
                    for (a, v) in acc.iter_mut().zip(self.signal(g)?) {
                        *a &= v;
                    }
                }
                acc
            }
            Formula::Or(fs) => {
                let mut acc = vec![false; n];
                for g in fs {
                    for (a, v) in acc.iter_mut().zip(self.signal(g)?) {
                        *a |= v;
                    }
                }
                acc
            }
            Formula::Finally(iv, g) => {
                let child = self.signal(g)?;
                let counts = prefix_counts(&child);
                let (lo, hi) = self.offsets(iv);
                (0..n)
                    .map(|k| window_count(&counts, k + lo, k + hi) > 0)
                    .collect()
            }
            Formula::Globally(iv, g) => {
                let child = self.signal(g)?;
                let counts = prefix_counts(&child);
                let (lo, hi) = self.offsets(iv);
                (0..n)
                    .map(|k| {
                        let a = (k + lo).min(n);
                        let b = (k + hi).min(n - 1);
                        a > b || window_count(&counts, a, b) == b - a + 1
                    })
                    .collect()
            }
            Formula::Until(iv, a, b) => {
                let lhs = self.signal(a)?;
                let rhs = self.signal(b)?;
                let rhs_counts = prefix_counts(&rhs);
                // first index >= k at which the left operand fails
                let mut first_false = vec![n; n + 1];
                for k in (0..n).rev() {
                    first_false[k] = if lhs[k] { first_false[k + 1] } else { k };
                }
                let (lo, hi) = self.offsets(iv);
                (0..n)
                    .map(|k| {
                        if first_false[k] == k {
                            return false;
                        }
                        let end = (k + hi).min(first_false[k] - 1);
                        k + lo <= end && window_count(&rhs_counts, k + lo, end) > 0
                    })
                    .collect()
            }
        })
    }

    fn predicate_signal(&self, p: &Predicate) -> Result<Vec<bool>> {
        Ok(match p {
            Predicate::Region { name, inside } => {
                let sig = self.inside_signal(name)?;
                if *inside {
                    sig
                } else {
                    sig.into_iter().map(|v| !v).collect()
                }
            }
            Predicate::Affine {
                coeffs,
                offset,
                rel,
            } => self
                .states
                .iter()
                .map(|x| {
                    let v = coeffs[0] * x.x + coeffs[1] * x.y + offset;
                    match rel {
                        Relation::Ge => v >= 0.0,
                        Relation::Le => v <= 0.0,
                    }
                })
                .collect(),
        })
    }
}

/// Verdict on one top-level task with its earliest deciding window.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskVerdict {
    pub task: String,
    pub satisfied: bool,
    /// Time window that witnesses satisfaction or exhibits the violation.
    pub window: Option<(f64, f64)>,
}

impl Trajectory {
    /// Splits a top-level conjunction into tasks and reports, for each, the
    /// earliest window that decides it at time 0.
    pub fn explain(&self, f: &Formula) -> Result<Vec<TaskVerdict>> {
        let tasks: Vec<&Formula> = match f {
            Formula::And(fs) => fs.iter().collect(),
            other => vec![other],
        };
        tasks
            .into_iter()
            .map(|task| {
                let satisfied = self.satisfies(task, 0.0)?;
                let window = self.deciding_window(task, satisfied)?;
                Ok(TaskVerdict {
                    task: task.to_string(),
                    satisfied,
                    window,
                })
            })
            .collect()
    }

    fn deciding_window(&self, f: &Formula, satisfied: bool) -> Result<Option<(f64, f64)>> {
        let span = |j: usize, g: &Formula| (self.time(j), self.time(j) + g.horizon());
        Ok(match f {
            Formula::Finally(iv, g) => {
                let (lo, hi) = self.offsets(iv);
                let sig = self.signal(g)?;
                match (lo..=hi.min(self.len() - 1)).find(|&j| sig[j]) {
                    Some(j) => Some(span(j, g)),
                    None => Some((iv.lo, iv.hi + g.horizon())),
                }
            }
            Formula::Globally(iv, g) => {
                let (lo, hi) = self.offsets(iv);
                let sig = self.signal(g)?;
                match (lo..=hi.min(self.len() - 1)).find(|&j| !sig[j]) {
                    Some(j) => Some(span(j, g)),
                    None => Some((iv.lo, iv.hi + g.horizon())),
                }
            }
            Formula::Until(iv, a, b) if satisfied => {
                let (lo, hi) = self.offsets(iv);
                let rhs = self.signal(b)?;
                (lo..=hi.min(self.len() - 1))
                    .find(|&j| rhs[j])
                    .map(|j| (0.0, self.time(j) + a.horizon().max(b.horizon())))
            }
            _ => None,
        })
    }
}

fn prefix_counts(sig: &[bool]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sig.len() + 1);
    out.push(0);
    let mut acc = 0;
    for &v in sig {
        acc += v as usize;
        out.push(acc);
    }
    out
}

/// Number of true samples in `[a, b]`, clipped to the signal.
fn window_count(counts: &[usize], a: usize, b: usize) -> usize {
    let n = counts.len() - 1;
    if a >= n || a > b {
        return 0;
    }
    let b = b.min(n - 1);
    counts[b + 1] - counts[a]
}

pub fn satisfies(traj: &Trajectory, f: &Formula, t: f64) -> Result<bool> {
    traj.satisfies(f, t)
}
