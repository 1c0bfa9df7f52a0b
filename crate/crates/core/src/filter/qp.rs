use serde::{Deserialize, Serialize};

use crate::cbf::CbfEvaluation;
use crate::geometry::Vec2;
use crate::world::Region;

const GRAD_EPS: f64 = 1e-12;

/// Which constraints bind at the QP optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveSet {
    /// The policy action already satisfies the barrier condition.
    Inactive,
    /// Barrier condition tight, input bound slack.
    Barrier,
    /// Barrier condition and input bound both tight.
    BarrierBound,
    /// Slack in use, input bound slack.
    Slack,
    /// Slack in use at the input bound.
    SlackBound,
    /// The barrier does not depend on the control; slack absorbs the deficit.
    NoAuthority,
}

impl ActiveSet {
    pub fn as_str(self) -> &'static str {
        match self {
            ActiveSet::Inactive => "inactive",
            ActiveSet::Barrier => "barrier",
            ActiveSet::BarrierBound => "barrier_bound",
            ActiveSet::Slack => "slack",
            ActiveSet::SlackBound => "slack_bound",
            ActiveSet::NoAuthority => "no_authority",
        }
    }
}

/// Linear barrier condition `g . (u + u_rl) + c >= -eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierConstraint {
    pub g: Vec2,
    pub c: f64,
}

impl BarrierConstraint {
    /// `g = db/dx`, `c = db/dx_target . u_target + db/dt + gamma * b`.
    pub fn from_barrier(eval: &CbfEvaluation, regions: &[Region], gamma: f64) -> Self {
        BarrierConstraint {
            g: eval.grad_x,
            c: eval.drift(regions) + gamma * eval.value,
        }
    }

    pub fn residual(&self, w: Vec2) -> f64 {
        self.g.dot(w) + self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSolution {
    pub u: Vec2,
    pub eps: f64,
    pub active: ActiveSet,
    pub objective: f64,
}

fn finish(u: Vec2, eps: f64, active: ActiveSet, k_eps: f64) -> QpSolution {
    QpSolution {
        u,
        eps,
        active,
        objective: u.norm_sq() + k_eps * eps,
    }
}

/// Minimizes `|u|^2 + k_eps * eps` subject to the barrier condition with
/// slack `eps >= 0` and `|u + u_rl| <= u_max`. Requires `|u_rl| <= u_max`.
///
/// With `w = u + u_rl` split along `n = g/|g|` as `w = l n + m t`, the best
/// `m` for a given `l` is `u_rl`'s tangential part clamped to the disk chord,
/// which leaves a convex problem in `l` alone.
pub fn solve_qp(con: &BarrierConstraint, u_rl: Vec2, u_max: f64, k_eps: f64) -> QpSolution {
    debug_assert!(u_rl.norm() <= u_max * (1.0 + 1e-9) + 1e-12);
    let h = -con.c;
    if con.g.dot(u_rl) >= h {
        return finish(Vec2::ZERO, 0.0, ActiveSet::Inactive, k_eps);
    }
    let gn = con.g.norm();
    if gn < GRAD_EPS {
        return finish(Vec2::ZERO, (h - con.g.dot(u_rl)).max(0.0), ActiveSet::NoAuthority, k_eps);
    }
    let n = con.g / gn;
    let tan = n.perp();
    let (pn, pt) = (u_rl.dot(n), u_rl.dot(tan));
    let chord = |l: f64| (u_max * u_max - l * l).max(0.0).sqrt();
    let target = h / gn;
    let hi = u_max.min(target);
    // derivative of the reduced objective; increasing on [pn, hi]
    let dphi = |l: f64| {
        let half = chord(l);
        let excess = (pt.abs() - half).max(0.0);
        let bend = if excess > 0.0 {
            if half > 0.0 {
                2.0 * excess * l / half
            } else {
                f64::INFINITY
            }
        } else {
            0.0
        };
        2.0 * (l - pn) + bend - k_eps * gn
    };
    let free = pn + 0.5 * k_eps * gn;
    let l = if free <= hi && pt.abs() <= chord(free) {
        free
    } else if dphi(hi) <= 0.0 {
        hi
    } else {
        let (mut lo, mut up) = (pn, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if mid <= lo || mid >= up {
                break;
            }
            if dphi(mid) > 0.0 {
                up = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    let half = chord(l);
    let m = pt.clamp(-half, half);
    let w = n * l + tan * m;
    let u = w - u_rl;
    let eps = (h - gn * l).max(0.0);
    let on_bound = pt.abs() > half || l >= u_max;
    let active = match (eps > 0.0, on_bound) {
        (false, false) => ActiveSet::Barrier,
        (false, true) => ActiveSet::BarrierBound,
        (true, false) => ActiveSet::Slack,
        (true, true) => ActiveSet::SlackBound,
    };
    finish(u, eps, active, k_eps)
}

/// Final executed control `u_rl + u_cbf`.
pub fn compose(u_rl: Vec2, sol: &QpSolution) -> Vec2 {
    u_rl + sol.u
}
