//! Normalization of a task conjunction into visit obligations.

use super::eval::Trajectory;
use super::formula::{Formula, Interval, Predicate};
use crate::error::{Error, Result};

/// Periodic revisit requirement produced by `G[a,b] F[0,c] phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recurrence {
    /// Maximal gap `c` between consecutive visits.
    pub period: f64,
    /// `b`: some visit must happen at or after this time.
    pub coverage: f64,
}

/// One reach (and optionally dwell / recur) requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct Obligation {
    /// Disjunction of region names; any one of them discharges the visit.
    pub alternatives: Vec<String>,
    pub release: f64,
    pub deadline: f64,
    pub dwell: f64,
    pub recurrence: Option<Recurrence>,
    /// Index of the conjunct this obligation came from.
    pub task: usize,
}

/// `G[a,b]` over an outside-region predicate. Reported, not enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct AvoidConstraint {
    pub region: String,
    pub window: Interval,
    pub task: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskSet {
    pub obligations: Vec<Obligation>,
    pub avoid: Vec<AvoidConstraint>,
}

fn unsupported(f: &Formula, why: &str) -> Error {
    Error::UnsupportedShape(format!("`{f}`: {why}"))
}

/// Region names of a disjunction of `in(..)` predicates.
fn alternatives(f: &Formula) -> Option<Vec<String>> {
    match f {
        Formula::Pred(Predicate::Region { name, inside: true }) => Some(vec![name.clone()]),
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                for n in alternatives(g)? {
                    if !out.contains(&n) {
                        out.push(n);
                    }
                }
            }
            (!out.is_empty()).then_some(out)
        }
        _ => None,
    }
}

fn avoided_region(f: &Formula) -> Option<String> {
    match f {
        Formula::Pred(Predicate::Region {
            name,
            inside: false,
        }) => Some(name.clone()),
        Formula::Not(g) => match g.as_ref() {
            Formula::Pred(Predicate::Region { name, inside: true }) => Some(name.clone()),
            _ => None,
        },
        _ => None,
    }
}

fn conjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::And(fs) => fs.iter().flat_map(conjuncts).collect(),
        other => vec![other],
    }
}

fn normalize_task(task: usize, f: &Formula, out: &mut TaskSet) -> Result<()> {
    let reach = |inner: &Formula| {
        alternatives(inner)
            .ok_or_else(|| unsupported(inner, "inner specification must be a disjunction of in(..)"))
    };
    match f {
        Formula::Finally(iv, inner) => match inner.as_ref() {
            Formula::Globally(hold, body) => {
                if hold.lo != 0.0 {
                    return Err(unsupported(f, "dwell window must start at 0"));
                }
                out.obligations.push(Obligation {
                    alternatives: reach(body)?,
                    release: iv.lo,
                    deadline: iv.hi,
                    dwell: hold.hi,
                    recurrence: None,
                    task,
                });
            }
            body => out.obligations.push(Obligation {
                alternatives: reach(body)?,
                release: iv.lo,
                deadline: iv.hi,
                dwell: 0.0,
                recurrence: None,
                task,
            }),
        },
        Formula::Globally(iv, inner) => match inner.as_ref() {
            Formula::Finally(win, body) => {
                if win.lo != 0.0 {
                    return Err(unsupported(f, "recurrence window must start at 0"));
                }
                if win.hi <= 0.0 {
                    return Err(unsupported(f, "recurrence period must be positive"));
                }
                out.obligations.push(Obligation {
                    alternatives: reach(body)?,
                    release: iv.lo,
                    deadline: iv.lo + win.hi,
                    dwell: 0.0,
                    recurrence: Some(Recurrence {
                        period: win.hi,
                        coverage: iv.hi,
                    }),
                    task,
                });
            }
            body => match avoided_region(body) {
                Some(region) => out.avoid.push(AvoidConstraint {
                    region,
                    window: *iv,
                    task,
                }),
                None => return Err(unsupported(f, "only avoidance is supported under a bare G")),
            },
        },
        Formula::Until(..) => return Err(unsupported(f, "until tasks are not enforced")),
        _ => return Err(unsupported(f, "expected F[a,b], F G, G F or G over regions")),
    }
    Ok(())
}

/// Splits a top-level conjunction of tasks into obligations.
pub fn normalize_tasks(f: &Formula) -> Result<TaskSet> {
    let mut out = TaskSet::default();
    for (i, task) in conjuncts(f).into_iter().enumerate() {
        normalize_task(i, task, &mut out)?;
    }
    Ok(out)
}

impl Obligation {
    pub fn is_met(&self, traj: &Trajectory) -> Result<bool> {
        Ok(self.lateness(traj)?.is_some_and(|d| d <= 0.0))
    }

    /// Smallest extension of all deadlines under which the trajectory meets
    /// the obligation; `Some(0.0)` when met on time, `None` if never met.
    pub fn lateness(&self, traj: &Trajectory) -> Result<Option<f64>> {
        let mut hit = vec![false; traj.len()];
        for name in &self.alternatives {
            for (h, v) in hit.iter_mut().zip(traj.inside_signal(name)?) {
                *h |= v;
            }
        }
        let start = traj.index_of(self.release);
        match self.recurrence {
            None => {
                let hold = (self.dwell / traj.dt - super::eval::GRID_TOL).ceil().max(0.0) as usize;
                let mut run_end = vec![0usize; traj.len() + 1];
                // run_end[k]: one past the last index of the in-region run containing k
                for k in (0..traj.len()).rev() {
                    run_end[k] = if hit[k] { run_end[k + 1].max(k + 1) } else { k };
                }
                for k in start..traj.len() {
                    if hit[k] && run_end[k] > k + hold {
                        return Ok(Some((traj.time(k) - self.deadline).max(0.0)));
                    }
                }
                Ok(None)
            }
            Some(rec) => {
                let hits: Vec<f64> = (start..traj.len()).filter(|&k| hit[k]).map(|k| traj.time(k)).collect();
                let Some(&first) = hits.first() else {
                    return Ok(None);
                };
                let last = *hits.last().expect("non-empty");
                if last < rec.coverage - super::eval::GRID_TOL * traj.dt {
                    return Ok(None);
                }
                let mut late = (first - (self.release + rec.period)).max(0.0);
                // gaps up to the first hit at or after the coverage time
                for w in hits.windows(2) {
                    late = late.max(w[1] - w[0] - rec.period);
                    if w[1] >= rec.coverage {
                        break;
                    }
                }
                Ok(Some(late.max(0.0)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse;

    #[test]
    fn periodic_charger() {
        let ts = normalize_tasks(&parse("G[0,210]F[0,90](in(c1)|in(c2))").unwrap()).unwrap();
        assert_eq!(ts.obligations.len(), 1);
        let o = &ts.obligations[0];
        assert_eq!(o.alternatives, vec!["c1", "c2"]);
        assert_eq!(o.deadline, 90.0);
        assert_eq!(
            o.recurrence,
            Some(Recurrence {
                period: 90.0,
                coverage: 210.0
            })
        );
    }

    #[test]
    fn reach_and_dwell() {
        let ts = normalize_tasks(&parse("F[150,180]G[0,10] in(t2)").unwrap()).unwrap();
        let o = &ts.obligations[0];
        assert_eq!((o.release, o.deadline, o.dwell), (150.0, 180.0, 10.0));
        let ts = normalize_tasks(&parse("F[0,60] in(t1)").unwrap()).unwrap();
        let o = &ts.obligations[0];
        assert_eq!((o.release, o.deadline, o.dwell), (0.0, 60.0, 0.0));
    }

    #[test]
    fn mixed_conjunction_keeps_task_indices() {
        let f = parse("F[0,60]G[0,10] in(t1) & F[150,180]G[0,10] in(t2) & G[0,190]F[0,110] in(ch) & G[0,300] out(wall)").unwrap();
        let ts = normalize_tasks(&f).unwrap();
        assert_eq!(ts.obligations.iter().map(|o| o.task).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(ts.avoid.len(), 1);
        assert_eq!(ts.avoid[0].region, "wall");
    }

    #[test]
    fn unsupported_shapes() {
        for src in [
            "U[0,5](x1 >= 0, in(a))",
            "F[0,5] (in(a) & in(b))",
            "G[0,5] in(a)",
            "F[0,5] G[1,2] in(a)",
            "F[0,5] x1 >= 0",
        ] {
            assert!(
                matches!(normalize_tasks(&parse(src).unwrap()), Err(Error::UnsupportedShape(_))),
                "{src}"
            );
        }
    }
}
