//! One episode of the shielded learning loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::buffer::Transition;
use super::observe::observe;
use super::policy::{Policy, PolicyInput};
use crate::cbf::{CbfParams, ShieldConfig};
use crate::error::{Error, Result};
use crate::filter::{compose, solve_qp, ActiveSet, BarrierConstraint, BoundTracker};
use crate::geometry::Vec2;
use crate::sequencer::{sample_feasible_state, HitRecord, SequenceState};
use crate::stl::{normalize_tasks, Formula, RegionTrack, TaskSet, Trajectory};
use crate::world::{WorldConfig, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Shielded,
    Unshielded,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "shielded" => Ok(Mode::Shielded),
            "unshielded" => Ok(Mode::Unshielded),
            other => Err(format!("unknown mode `{other}` (expected shielded or unshielded)")),
        }
    }
}

/// Everything fixed across the episodes of a run.
#[derive(Debug, Clone)]
pub struct EpisodeSetup {
    pub world: WorldConfig,
    pub spec: Formula,
    pub tasks: TaskSet,
    pub shield: ShieldConfig,
    /// Episode length `T` in time units.
    pub horizon: f64,
}

impl EpisodeSetup {
    pub fn new(world: WorldConfig, spec: Formula, shield: ShieldConfig, horizon: f64) -> Result<Self> {
        world.validate()?;
        shield.validate()?;
        let names = world.region_names();
        for n in spec.region_names() {
            if !names.contains(&n.as_str()) {
                return Err(Error::UnknownRegion(n));
            }
        }
        let hrz = spec.horizon();
        if horizon + 1e-9 < hrz {
            return Err(Error::config(
                "train.horizon",
                format!("episode horizon {horizon} is shorter than the specification horizon {hrz}"),
            ));
        }
        let tasks = normalize_tasks(&spec)?;
        Ok(EpisodeSetup {
            world,
            spec,
            tasks,
            shield,
            horizon,
        })
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.world.dt - 1e-9).ceil() as usize
    }

    pub fn cbf_params(&self) -> CbfParams {
        CbfParams::new(self.world.agent.u_max, self.world.agent.d_max).with_margin(self.shield.reach_margin)
    }
}

/// One logged time step. The control fields describe the action taken
/// from this state (zero on the final row).
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub x: Vec2,
    pub u_rl: Vec2,
    pub u_cbf: Vec2,
    pub eps: f64,
    pub b_value: Option<f64>,
    pub active_set: Option<ActiveSet>,
    pub critical_task: Option<usize>,
    pub active_region: Option<String>,
    pub reward: f64,
    pub region_centers: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub seed: u64,
    pub mode: Mode,
    pub dt: f64,
    pub region_names: Vec<String>,
    pub x0: Vec2,
    /// Per-step rows; empty unless recording was requested.
    pub steps: Vec<StepRecord>,
    pub satisfied: bool,
    pub ret: f64,
    /// Largest QP slack over the episode.
    pub eps_max: f64,
    pub tol_disc: f64,
    pub gamma: f64,
    pub bound_failures: usize,
    pub worst_bound_margin: f64,
    pub unmet_preconditions: usize,
    pub hits: Vec<HitRecord>,
    /// Per obligation, the deadline extension the trajectory needed
    /// (`None` if it never met the obligation).
    pub delays: Vec<Option<f64>>,
    pub qp_steps: usize,
    pub slack_steps: usize,
}

impl EpisodeLog {
    pub fn relaxation_bound(&self) -> f64 {
        self.eps_max / self.gamma + self.tol_disc
    }

    /// Largest temporal relaxation over obligations (infinite if one was
    /// never met).
    pub fn max_delay(&self) -> f64 {
        self.delays
            .iter()
            .map(|d| d.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

/// Derives an independent seed for item `index` of a run seeded with
/// `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one episode: samples a feasible start, plans the visit sequence and
/// steps the world, shielding the policy action when `mode` asks for it.
/// Every transition is handed to `sink`.
pub fn run_episode(
    policy: &dyn Policy,
    setup: &EpisodeSetup,
    mode: Mode,
    episode: usize,
    seed: u64,
    record_steps: bool,
    sink: &mut dyn FnMut(Transition),
) -> Result<EpisodeLog> {
    let cfg = &setup.world;
    let shield = &setup.shield;
    let params = setup.cbf_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = WorldState::new(cfg, Vec2::ZERO, derive_seed(seed, 1));
    let (x0, mut seq) =
        sample_feasible_state(&setup.tasks, &world.regions, &cfg.arena, &params, shield, &mut rng)?;
    world.x = x0;
    let dt = cfg.dt;
    let u_max = cfg.agent.u_max;
    let steps = setup.steps();
    let mut tracker = BoundTracker::new(shield.gamma, u_max, cfg.agent.d_max, dt);

    let phase_value = |seq: &SequenceState, w: &WorldState| -> Result<Option<f64>> {
        Ok(seq
            .barrier(w.x, w.t, &w.regions, &params, shield, dt)?
            .map(|e| e.value))
    };
    let update_sequence = |seq: &mut SequenceState, w: &WorldState, tracker: &mut BoundTracker| -> Result<()> {
        if seq.update(w.x, w.t, &w.regions, shield).is_some() {
            if let Some(b0) = phase_value(seq, w)? {
                tracker.start_phase(b0);
            }
        }
        seq.maybe_swap_alternative(w.x, w.t, &w.regions, &params)?;
        Ok(())
    };
    if let Some(b0) = phase_value(&seq, &world)? {
        tracker.start_phase(b0);
    }
    update_sequence(&mut seq, &world, &mut tracker)?;

    let names: Vec<String> = world.regions.iter().map(|r| r.name.clone()).collect();
    let mut states = Vec::with_capacity(steps + 1);
    let mut centers: Vec<Vec<Vec2>> = vec![Vec::with_capacity(steps + 1); names.len()];
    let mut rows = Vec::new();
    let mut ret = 0.0;
    let mut eps_max: f64 = 0.0;
    let (mut qp_steps, mut slack_steps) = (0, 0);
    let mut obs = observe(&world, &seq, setup.horizon);
    let exploration = policy.exploration();
    let mut noise = match exploration {
        Some(_) => Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
        None => Vec2::ZERO,
    };

    for k in 0..=steps {
        states.push(world.x);
        for (c, r) in centers.iter_mut().zip(&world.regions) {
            c.push(r.center);
        }
        let barrier = seq.barrier(world.x, world.t, &world.regions, &params, shield, dt)?;
        let mut row = StepRecord {
            t: world.t,
            x: world.x,
            u_rl: Vec2::ZERO,
            u_cbf: Vec2::ZERO,
            eps: 0.0,
            b_value: barrier.as_ref().map(|e| e.value),
            active_set: None,
            critical_task: None,
            active_region: seq
                .dwell
                .map(|d| d.region)
                .or(seq.front().map(|v| v.region))
                .map(|i| names[i].clone()),
            reward: world.reward(),
            region_centers: world.regions.iter().map(|r| r.center).collect(),
        };
        if seq.dwell.is_none() {
            if let Some(e) = &barrier {
                row.critical_task = Some(seq.items[e.critical].task);
            }
        } else {
            row.critical_task = seq.front().map(|v| v.task);
        }
        if k == steps {
            if record_steps {
                rows.push(row);
            }
            break;
        }

        if let Some(rho) = exploration {
            let eta = Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            noise = noise * rho + eta * (1.0 - rho * rho).sqrt();
        }
        let input = PolicyInput {
            world: &world,
            obs: &obs,
            noise,
        };
        let u_rl = policy.act(&input, &mut rng).clamp_norm(u_max);
        let mut u = u_rl;
        if mode == Mode::Shielded {
            if let Some(e) = &barrier {
                let con = BarrierConstraint::from_barrier(e, &world.regions, shield.gamma);
                let sol = solve_qp(&con, u_rl, u_max, shield.k_eps);
                tracker.check(e.value, sol.eps);
                eps_max = eps_max.max(sol.eps);
                qp_steps += 1;
                if sol.eps > 0.0 {
                    slack_steps += 1;
                }
                u = compose(u_rl, &sol).clamp_norm(u_max);
                row.u_cbf = u - u_rl;
                row.eps = sol.eps;
                row.active_set = Some(sol.active);
            }
        }
        row.u_rl = u_rl;
        let x = world.x;
        let out = world.step(u)?;
        ret += out.reward;
        update_sequence(&mut seq, &world, &mut tracker)?;
        let obs_next = observe(&world, &seq, setup.horizon);
        let tr = Transition {
            episode,
            step: k,
            x,
            u,
            x_next: world.x,
            reward: out.reward,
            obs: std::mem::replace(&mut obs, obs_next.clone()),
            obs_next,
        };
        sink(tr);
        if record_steps {
            rows.push(row);
        }
    }

    let regions: Vec<RegionTrack> = names
        .iter()
        .zip(centers)
        .zip(&world.regions)
        .map(|((n, c), r)| RegionTrack {
            name: n.clone(),
            shape: r.shape,
            centers: c,
        })
        .collect();
    let traj = Trajectory::with_regions(dt, states, regions)?;
    let satisfied = traj.satisfies(&setup.spec, 0.0)?;
    let delays = setup
        .tasks
        .obligations
        .iter()
        .map(|o| o.lateness(&traj))
        .collect::<Result<Vec<_>>>()?;

    Ok(EpisodeLog {
        episode,
        seed,
        mode,
        dt,
        region_names: names,
        x0,
        steps: rows,
        satisfied,
        ret,
        eps_max,
        tol_disc: tracker.tol_disc,
        gamma: shield.gamma,
        bound_failures: tracker.failures,
        worst_bound_margin: tracker.worst_margin,
        unmet_preconditions: tracker.unmet_preconditions,
        hits: seq.hits,
        delays,
        qp_steps,
        slack_steps,
    })
}
