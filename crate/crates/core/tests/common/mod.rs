//! Independent oracles and random generators shared by the integration
//! tests and the acceptance harness.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use stl_shield::cbf::{evaluate, CbfEvaluation, CbfParams};
use stl_shield::filter::BarrierConstraint;
use stl_shield::sequencer::PlannedVisit;
use stl_shield::stl::{Formula, Predicate, RegionTrack, Relation, Trajectory};
use stl_shield::world::Region;
use stl_shield::{Shape, Vec2};

// ---------------------------------------------------------------- STL

const TOL: f64 = 1e-9;

fn inside(shape: &Shape, p: Vec2) -> bool {
    match *shape {
        Shape::Disk { radius } => p.x * p.x + p.y * p.y <= radius * radius,
        Shape::Rect {
            half_width,
            half_height,
        } => p.x.abs() <= half_width && p.y.abs() <= half_height,
    }
}

/// Samples needed beyond `k` to decide `f`.
pub fn need(f: &Formula, dt: f64) -> usize {
    let hi = |b: f64| (b / dt + TOL).floor() as usize;
    match f {
        Formula::Pred(_) => 0,
        Formula::Not(g) => need(g, dt),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().map(|g| need(g, dt)).max().unwrap_or(0),
        Formula::Finally(iv, g) | Formula::Globally(iv, g) => hi(iv.hi) + need(g, dt),
        Formula::Until(iv, a, b) => hi(iv.hi) + need(a, dt).max(need(b, dt)),
    }
}

/// Samples `j >= k` whose time lies in `[t_k + lo, t_k + hi]`.
fn window(k: usize, lo: f64, hi: f64, dt: f64, len: usize) -> Vec<usize> {
    (k..len)
        .filter(|&j| {
            let d = (j - k) as f64 * dt;
            d >= lo - TOL && d <= hi + TOL
        })
        .collect()
}

/// Direct recursive reading of the boolean semantics at sample `k`.
pub fn brute(traj: &Trajectory, f: &Formula, k: usize) -> bool {
    let n = traj.states.len();
    let dt = traj.dt;
    match f {
        Formula::Pred(Predicate::Affine { coeffs, offset, rel }) => {
            let x = traj.states[k];
            let v = coeffs[0] * x.x + coeffs[1] * x.y + offset;
            match rel {
                Relation::Ge => v >= 0.0,
                Relation::Le => v <= 0.0,
            }
        }
        Formula::Pred(Predicate::Region { name, inside: want }) => {
            let r = traj.regions.iter().find(|r| &r.name == name).expect("region track");
            inside(&r.shape, traj.states[k] - r.centers[k]) == *want
        }
        Formula::Not(g) => !brute(traj, g, k),
        Formula::And(gs) => gs.iter().all(|g| brute(traj, g, k)),
        Formula::Or(gs) => gs.iter().any(|g| brute(traj, g, k)),
        Formula::Finally(iv, g) => window(k, iv.lo, iv.hi, dt, n).into_iter().any(|j| brute(traj, g, j)),
        Formula::Globally(iv, g) => window(k, iv.lo, iv.hi, dt, n).into_iter().all(|j| brute(traj, g, j)),
        Formula::Until(iv, a, b) => window(k, iv.lo, iv.hi, dt, n)
            .into_iter()
            .any(|j| brute(traj, b, j) && (k..=j).all(|m| brute(traj, a, m))),
    }
}

/// `Some(verdict)` if the trajectory is long enough, `None` otherwise.
pub fn brute_satisfies(traj: &Trajectory, f: &Formula) -> Option<bool> {
    (need(f, traj.dt) < traj.states.len()).then(|| brute(traj, f, 0))
}

pub const REGION: &str = "r";

fn random_interval(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // tenths, so that endpoints fall both on and off the sample grid
    let a = rng.random_range(0..=30) as f64 / 10.0;
    let b = a + rng.random_range(0..=30) as f64 / 10.0;
    (a, b)
}

fn random_atom(rng: &mut ChaCha8Rng) -> Formula {
    match rng.random_range(0..4) {
        0 => Formula::inside(REGION),
        1 => Formula::Pred(Predicate::Region {
            name: REGION.into(),
            inside: false,
        }),
        _ => {
            let c = [rng.random_range(-2..=2) as f64, rng.random_range(-2..=2) as f64];
            let rel = if rng.random() { Relation::Ge } else { Relation::Le };
            Formula::affine(c, rng.random_range(-10..=10) as f64 / 10.0, rel)
        }
    }
}

/// Random formula of depth at most `depth` over the region `r` and the two
/// state coordinates.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    if depth <= 1 || rng.random_bool(0.25) {
        return random_atom(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, depth - 1);
    match rng.random_range(0..7) {
        0 => Formula::Not(Box::new(sub(rng))),
        1 => Formula::And((0..rng.random_range(2..=3)).map(|_| sub(rng)).collect()),
        2 => Formula::Or((0..rng.random_range(2..=3)).map(|_| sub(rng)).collect()),
        3 | 4 => {
            let (a, b) = random_interval(rng);
            Formula::finally(a, b, sub(rng))
        }
        5 => {
            let (a, b) = random_interval(rng);
            Formula::globally(a, b, sub(rng))
        }
        _ => {
            let (a, b) = random_interval(rng);
            let lhs = sub(rng);
            Formula::until(a, b, lhs, sub(rng))
        }
    }
}

/// Random walk of `len` samples with a moving disk region `r`.
pub fn random_trajectory(rng: &mut ChaCha8Rng, len: usize) -> Trajectory {
    let dt = [0.5, 1.0, 0.3][rng.random_range(0..3)];
    let mut x = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut c = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut states = Vec::with_capacity(len);
    let mut centers = Vec::with_capacity(len);
    for _ in 0..len {
        states.push(x);
        centers.push(c);
        x += Vec2::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
        c += Vec2::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
    }
    let shape = if rng.random() {
        Shape::Disk {
            radius: rng.random_range(0.3..1.2),
        }
    } else {
        Shape::Rect {
            half_width: rng.random_range(0.2..1.0),
            half_height: rng.random_range(0.2..1.0),
        }
    };
    let track = RegionTrack {
        name: REGION.into(),
        shape,
        centers,
    };
    Trajectory::with_regions(dt, states, vec![track]).expect("valid trajectory")
}

// ----------------------------------------------------------------- QP

/// Smallest objective `|u|^2 + k_eps * eps` found by enumeration, with
/// `eps in [0, eps_cap]` chosen optimally per point. Candidates are a square
/// grid of pitch `pitch` covering the feasible disk `|u + u_rl| <= u_max`,
/// plus samples `pitch / 10` apart along the disk boundary and the line
/// where the barrier condition is tight (a binding constraint puts the
/// optimum on one of them), their intersections and `u = 0`.
pub fn qp_grid_oracle(con: &BarrierConstraint, u_rl: Vec2, u_max: f64, k_eps: f64, pitch: f64, eps_cap: f64) -> f64 {
    let center = -u_rl;
    let mut best = f64::INFINITY;
    let mut try_u = |u: Vec2| {
        if (u + u_rl).norm() > u_max * (1.0 + 1e-12) {
            return;
        }
        let eps = (-(con.g.dot(u + u_rl) + con.c)).max(0.0);
        if eps > eps_cap {
            return;
        }
        best = best.min(u.norm_sq() + k_eps * eps);
    };
    try_u(Vec2::ZERO);
    let steps = (u_max / pitch).floor() as i64;
    for i in -steps..=steps {
        let dx = i as f64 * pitch;
        let half = (u_max * u_max - dx * dx).max(0.0).sqrt();
        let m = (half / pitch).floor() as i64;
        for j in -m..=m {
            try_u(center + Vec2::new(dx, j as f64 * pitch));
        }
    }
    let fine = pitch / 10.0;
    let arcs = (std::f64::consts::TAU * u_max / fine).ceil() as usize;
    for k in 0..arcs {
        let th = k as f64 * std::f64::consts::TAU / arcs as f64;
        try_u(center + Vec2::from_polar(u_max, th));
    }
    let gn = con.g.norm();
    if gn > 0.0 {
        // tight line in w = u + u_rl: n . w = -c / |g|
        let n = con.g / gn;
        let l = -con.c / gn;
        if l.abs() <= u_max {
            let half = (u_max * u_max - l * l).sqrt();
            let m = (half / fine).ceil() as i64;
            for j in -m..=m {
                let s = (j as f64 * fine).clamp(-half, half);
                try_u(n * l + n.perp() * s - u_rl);
            }
            try_u(n * l + n.perp() * half - u_rl);
            try_u(n * l - n.perp() * half - u_rl);
        }
    }
    best
}

/// Random QP instance: gradient, offset, policy action, input bound.
pub fn random_qp(rng: &mut ChaCha8Rng) -> (BarrierConstraint, Vec2, f64) {
    let u_max = rng.random_range(0.5..1.5);
    let g = if rng.random_bool(0.05) {
        Vec2::ZERO
    } else {
        Vec2::from_polar(rng.random_range(0.1..3.0), rng.random_range(0.0..std::f64::consts::TAU))
    };
    let c = rng.random_range(-4.0..4.0);
    let u_rl = Vec2::from_polar(u_max * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
    (BarrierConstraint { g, c }, u_rl, u_max)
}

// ---------------------------------------------------------------- CBF

/// Random sequence of 1..=4 visits over 3 moving regions.
pub fn random_cbf_case(rng: &mut ChaCha8Rng) -> (Vec2, Vec<PlannedVisit>, Vec<Region>, f64, CbfParams) {
    let regions: Vec<Region> = (0..3)
        .map(|i| {
            let shape = if rng.random() {
                Shape::Disk {
                    radius: rng.random_range(0.5..2.5),
                }
            } else {
                Shape::Rect {
                    half_width: rng.random_range(0.5..2.0),
                    half_height: rng.random_range(0.5..2.0),
                }
            };
            let c = Vec2::new(rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0));
            Region::snapshot(&format!("r{i}"), shape, c, rng.random_range(0.0..0.3))
        })
        .collect();
    let n = rng.random_range(1..=4);
    let mut deadline = 0.0;
    let items: Vec<PlannedVisit> = (0..n)
        .map(|_| {
            deadline += rng.random_range(3.0..40.0);
            let mut v = PlannedVisit::single(rng.random_range(0..3), deadline);
            if rng.random_bool(0.3) {
                v.dwell = rng.random_range(0.5..8.0);
            }
            v
        })
        .collect();
    let x = Vec2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    let t = rng.random_range(0.0..deadline * 1.1);
    let p = CbfParams::new(1.0, rng.random_range(0.0..0.5)).with_margin(rng.random_range(0.0..0.9));
    (x, items, regions, t, p)
}

/// Central-difference partials of the critical barrier value, or `None` if
/// the configuration sits within `h` of a kink (singular distance gradient,
/// a change of critical candidate or active budget branch, or one-sided
/// slopes that disagree).
pub struct FdPartials {
    pub grad_x: Vec2,
    pub grad_targets: Vec<Vec2>,
    pub grad_t: f64,
}

pub fn cbf_fd(x: Vec2, items: &[PlannedVisit], regions: &[Region], t: f64, p: &CbfParams, h: f64) -> Option<(CbfEvaluation, FdPartials)> {
    let base = evaluate(x, items, regions, t, p).ok()?;
    if base.singular {
        return None;
    }
    let same = |e: &CbfEvaluation| e.critical == base.critical && e.active == base.active && !e.singular;
    let mut ok = true;
    let mut slope = |f: &dyn Fn(f64) -> Option<CbfEvaluation>| -> f64 {
        match (f(h), f(-h)) {
            (Some(a), Some(b)) if same(&a) && same(&b) => {
                let fwd = (a.value - base.value) / h;
                let bwd = (base.value - b.value) / h;
                if (fwd - bwd).abs() > 1e-3 {
                    ok = false;
                }
                (a.value - b.value) / (2.0 * h)
            }
            _ => {
                ok = false;
                0.0
            }
        }
    };
    let gx = Vec2::new(
        slope(&|d| evaluate(x + Vec2::new(d, 0.0), items, regions, t, p).ok()),
        slope(&|d| evaluate(x + Vec2::new(0.0, d), items, regions, t, p).ok()),
    );
    let mut gts = Vec::new();
    for r in 0..regions.len() {
        let moved = |dv: Vec2| {
            let mut rs = regions.to_vec();
            rs[r].center += dv;
            evaluate(x, items, &rs, t, p).ok()
        };
        gts.push(Vec2::new(
            slope(&|d| moved(Vec2::new(d, 0.0))),
            slope(&|d| moved(Vec2::new(0.0, d))),
        ));
    }
    let gt = slope(&|d| {
        if t + d < 0.0 {
            None
        } else {
            evaluate(x, items, regions, t + d, p).ok()
        }
    });
    ok.then_some((
        base,
        FdPartials {
            grad_x: gx,
            grad_targets: gts,
            grad_t: gt,
        },
    ))
}

/// Largest absolute difference between analytic and numerical partials.
pub fn cbf_fd_error(e: &CbfEvaluation, fd: &FdPartials) -> f64 {
    let mut err = (e.grad_x - fd.grad_x).abs().x.max((e.grad_x - fd.grad_x).abs().y);
    for (a, b) in e.grad_targets.iter().zip(&fd.grad_targets) {
        let d = (*a - *b).abs();
        err = err.max(d.x).max(d.y);
    }
    err.max((e.grad_t - fd.grad_t).abs())
}

// ------------------------------------------------------------ learner

use ndarray::{Array1, Array2};
use rand_distr::StandardNormal;
use stl_shield::learner::{Batch, Sac};

pub fn random_batch(rng: &mut ChaCha8Rng, obs_dim: usize, b: usize, u_max: f64) -> Batch {
    let mut normal = || rng.sample::<f64, _>(StandardNormal);
    let obs = Array2::from_shape_simple_fn((b, obs_dim), &mut normal);
    let next = Array2::from_shape_simple_fn((b, obs_dim), &mut normal);
    let rew = Array1::from_shape_simple_fn(b, &mut normal);
    let act = Array2::from_shape_simple_fn((b, 2), || 0.5 * u_max * normal());
    Batch { obs, act, rew, next }
}

pub fn noise(rng: &mut ChaCha8Rng, b: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((b, 2), || rng.sample(StandardNormal))
}

/// `|g - g_fd| / max(|g|, |g_fd|)` over `coords` randomly chosen
/// parameters, with `g_fd` from central differences of `loss`.
fn fd_relative(
    params: &mut Array1<f64>,
    grad: &Array1<f64>,
    coords: usize,
    rng: &mut ChaCha8Rng,
    loss: &mut dyn FnMut(&Array1<f64>) -> f64,
) -> f64 {
    let h = 1e-6;
    let (mut num, mut ana) = (Vec::new(), Vec::new());
    for _ in 0..coords {
        let i = rng.random_range(0..params.len());
        let p0 = params[i];
        params[i] = p0 + h;
        let up = loss(params);
        params[i] = p0 - h;
        let down = loss(params);
        params[i] = p0;
        num.push((up - down) / (2.0 * h));
        ana.push(grad[i]);
    }
    let diff: f64 = num.iter().zip(&ana).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let na: f64 = ana.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = num.iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = na.max(nn);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Relative error of the actor loss gradient on a frozen minibatch.
pub fn actor_fd_error(sac: &Sac, batch: &Batch, xi: &Array2<f64>, coords: usize, rng: &mut ChaCha8Rng) -> f64 {
    let grad = sac.actor_loss_grad(batch, xi.view()).grad;
    let mut probe = sac.clone();
    let mut params = sac.actor.params.clone();
    fd_relative(&mut params, &grad, coords, rng, &mut |p| {
        probe.actor.params.assign(p);
        probe.actor_loss_grad(batch, xi.view()).loss
    })
}

/// Relative error of the first critic's TD loss gradient.
pub fn critic_fd_error(sac: &Sac, batch: &Batch, xi: &Array2<f64>, coords: usize, rng: &mut ChaCha8Rng) -> f64 {
    let y = sac.targets(batch, xi.view());
    let (_, grad) = sac.critic_loss_grad(1, batch, &y);
    let mut probe = sac.clone();
    let mut params = sac.q1.params.clone();
    fd_relative(&mut params, &grad, coords, rng, &mut |p| {
        probe.q1.params.assign(p);
        probe.critic_loss_grad(1, batch, &y).0
    })
}

// --------------------------------------------------------- experiments

use stl_shield::experiment::ExperimentConfig;

pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn load_config(name: &str, overrides: &[(&str, &str)]) -> ExperimentConfig {
    let ov: Vec<(String, String)> = overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    ExperimentConfig::load(&config_path(name), &ov).expect("config loads")
}
