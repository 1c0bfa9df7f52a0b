use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// Scripted motion of a region center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion {
    Static {
        center: Vec2,
    },
    /// Back and forth along the segment `from`-`to`. `phase` in [0, 1] is
    /// the starting position along the segment.
    Patrol {
        from: Vec2,
        to: Vec2,
        speed: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Uniform circular motion; `rate` in radians per time unit.
    Circle {
        center: Vec2,
        radius: f64,
        rate: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Uniform random heading and speed in `[0, speed]` every step, reflected
    /// at the box `[min, max]`.
    RandomWalk {
        start: Vec2,
        min: Vec2,
        max: Vec2,
        speed: f64,
    },
}

impl Motion {
    pub fn initial_center(&self) -> Vec2 {
        match *self {
            Motion::Static { center } => center,
            Motion::Patrol {
                from, to, phase, ..
            } => from + (to - from) * phase.clamp(0.0, 1.0),
            Motion::Circle {
                center,
                radius,
                phase,
                ..
            } => center + Vec2::from_polar(radius, phase),
            Motion::RandomWalk { start, .. } => start,
        }
    }

    /// Upper bound on the center speed.
    pub fn speed_bound(&self) -> f64 {
        match *self {
            Motion::Static { .. } => 0.0,
            Motion::Patrol { speed, .. } | Motion::RandomWalk { speed, .. } => speed,
            Motion::Circle { radius, rate, .. } => radius * rate.abs(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |v: f64| v.is_finite();
        match *self {
            Motion::Static { center } if center.is_finite() => Ok(()),
            Motion::Patrol {
                from,
                to,
                speed,
                phase,
            } if from.is_finite() && to.is_finite() && speed >= 0.0 && finite(speed) => {
                if (0.0..=1.0).contains(&phase) {
                    Ok(())
                } else {
                    Err("patrol phase must lie in [0, 1]".into())
                }
            }
            Motion::Circle {
                center,
                radius,
                rate,
                phase,
            } if center.is_finite() && radius >= 0.0 && finite(radius) && finite(rate) && finite(phase) => Ok(()),
            Motion::RandomWalk {
                start,
                min,
                max,
                speed,
            } if speed >= 0.0 && finite(speed) => {
                if min.x <= start.x && start.x <= max.x && min.y <= start.y && start.y <= max.y {
                    Ok(())
                } else {
                    Err("random walk start must lie inside its bounds".into())
                }
            }
            _ => Err("motion parameters must be finite and non-negative".into()),
        }
    }
}

/// Mutable progress of a motion script.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum MotionState {
    None,
    /// `true` while heading towards `to`.
    Patrol { forward: bool },
    Circle { angle: f64 },
}

impl MotionState {
    pub(crate) fn initial(m: &Motion) -> Self {
        match *m {
            Motion::Patrol { phase, .. } => MotionState::Patrol {
                forward: phase < 1.0,
            },
            Motion::Circle { phase, .. } => MotionState::Circle { angle: phase },
            _ => MotionState::None,
        }
    }
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let mut v = v;
    // one reflection per side suffices when the step is shorter than the box
    if v < lo {
        v = 2.0 * lo - v;
    }
    if v > hi {
        v = 2.0 * hi - v;
    }
    v.clamp(lo, hi)
}

/// Plans the displacement of the next step and advances `state` past it.
pub(crate) fn plan_step(m: &Motion, state: &mut MotionState, center: Vec2, dt: f64, rng: &mut ChaCha8Rng) -> Vec2 {
    match (*m, state) {
        (Motion::Static { .. }, _) => Vec2::ZERO,
        (Motion::Patrol { from, to, speed, .. }, MotionState::Patrol { forward }) => {
            let goal = if *forward { to } else { from };
            let gap = goal - center;
            let len = gap.norm();
            let step = speed * dt;
            if len <= step {
                *forward = !*forward;
                gap
            } else {
                gap * (step / len)
            }
        }
        (Motion::Circle { center: c, radius, rate, .. }, MotionState::Circle { angle }) => {
            *angle += rate * dt;
            c + Vec2::from_polar(radius, *angle) - center
        }
        (Motion::RandomWalk { min, max, speed, .. }, _) => {
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            let v = rng.random_range(0.0..=speed);
            let p = center + Vec2::from_polar(v * dt, heading);
            Vec2::new(reflect(p.x, min.x, max.x), reflect(p.y, min.y, max.y)) - center
        }
        _ => unreachable!("motion state does not match its script"),
    }
}
