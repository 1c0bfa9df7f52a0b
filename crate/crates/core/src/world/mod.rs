//! Disturbed single-integrator agent among scripted moving regions.

mod motion;

pub use motion::Motion;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sup_inf_distance, DistanceSample, Shape, Vec2};
use motion::{plan_step, MotionState};

pub const DEFAULT_DT: f64 = 0.1;
const INPUT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub min: Vec2,
    pub max: Vec2,
}

impl Arena {
    pub fn contains(&self, p: Vec2) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec2 {
        Vec2::new(
            rng.random_range(self.min.x..=self.max.x),
            rng.random_range(self.min.y..=self.max.y),
        )
    }
}

/// How the per-step disturbance is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceModel {
    /// Uniform over the disk of radius `d_max`.
    #[default]
    Uniform,
    /// Full magnitude `d_max`, pointing against the applied control.
    Opposing,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub u_max: f64,
    pub d_max: f64,
    #[serde(default)]
    pub disturbance: DisturbanceModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    pub name: String,
    pub shape: Shape,
    pub motion: Motion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalConfig {
    pub shape: Shape,
    pub center: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub arena: Arena,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub agent: AgentConfig,
    pub goal: GoalConfig,
    #[serde(default)]
    pub regions: Vec<RegionConfig>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.arena;
        if !(a.min.is_finite() && a.max.is_finite() && a.min.x < a.max.x && a.min.y < a.max.y) {
            return Err(Error::config("world.arena", "min must be strictly below max"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("world.dt", "must be positive"));
        }
        let ag = &self.agent;
        if !(ag.u_max > 0.0 && ag.u_max.is_finite()) {
            return Err(Error::config("world.agent.u_max", "must be positive"));
        }
        if ag.d_max.is_nan() || ag.d_max < 0.0 {
            return Err(Error::config("world.agent.d_max", "must be non-negative"));
        }
        if ag.d_max >= ag.u_max {
            return Err(Error::BoundOrdering {
                u_max: ag.u_max,
                d_max: ag.d_max,
            });
        }
        self.goal
            .shape
            .validate()
            .map_err(|m| Error::config("world.goal.shape", m))?;
        for (i, r) in self.regions.iter().enumerate() {
            let path = |f: &str| format!("world.regions[{i}].{f}");
            if r.name.is_empty() || !r.name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(Error::config(path("name"), "must be a non-empty identifier"));
            }
            if self.regions[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::config(path("name"), format!("duplicate region `{}`", r.name)));
            }
            r.shape.validate().map_err(|m| Error::config(path("shape"), m))?;
            r.motion.validate().map_err(|m| Error::config(path("motion"), m))?;
        }
        Ok(())
    }

    pub fn region_names(&self) -> Vec<&str> {
        self.regions.iter().map(|r| r.name.as_str()).collect()
    }
}

/// A region's current placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub shape: Shape,
    pub center: Vec2,
    /// Center velocity over the upcoming step (exact: motion is linear
    /// within a step).
    pub velocity: Vec2,
    pub speed_bound: f64,
    motion: Motion,
    state: MotionState,
}

impl Region {
    pub fn new(cfg: &RegionConfig) -> Self {
        Region {
            name: cfg.name.clone(),
            shape: cfg.shape,
            center: cfg.motion.initial_center(),
            velocity: Vec2::ZERO,
            speed_bound: cfg.motion.speed_bound(),
            motion: cfg.motion,
            state: MotionState::initial(&cfg.motion),
        }
    }

    /// Static region, handy for tests and analysis.
    pub fn fixed(name: &str, shape: Shape, center: Vec2) -> Self {
        Self::new(&RegionConfig {
            name: name.into(),
            shape,
            motion: Motion::Static { center },
        })
    }

    /// A region placed at `center` whose speed bound is `speed`, without a
    /// script of its own.
    pub fn snapshot(name: &str, shape: Shape, center: Vec2, speed: f64) -> Self {
        let mut r = Self::fixed(name, shape, center);
        r.speed_bound = speed;
        r
    }

    pub fn signed_distance(&self, x: Vec2) -> f64 {
        self.shape.signed_distance(x - self.center)
    }

    pub fn distance_sample(&self, x: Vec2) -> DistanceSample {
        self.shape.distance_sample(x - self.center)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.signed_distance(x) <= 0.0
    }

    fn plan(&mut self, dt: f64, rng: &mut ChaCha8Rng) {
        let disp = plan_step(&self.motion, &mut self.state, self.center, dt, rng);
        self.velocity = disp / dt;
    }

    fn advance(&mut self, dt: f64) {
        self.center += self.velocity * dt;
    }
}

/// Worst-case distance from `x` to a region that may move for `tau` more
/// time units.
pub fn dist_wc_agent(x: Vec2, r: &Region, tau: f64) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::NegativeTime(tau));
    }
    Ok(r.signed_distance(x) + r.speed_bound * tau)
}

/// Worst-case distance from any point of `ri` to `rj`, both moving for their
/// remaining times.
pub fn dist_wc_pair(ri: &Region, rj: &Region, tau_i: f64, tau_j: f64) -> Result<f64> {
    for tau in [tau_i, tau_j] {
        if tau < 0.0 {
            return Err(Error::NegativeTime(tau));
        }
    }
    let si = sup_inf_distance(&ri.shape, ri.center, &rj.shape, rj.center).value;
    Ok(si + ri.speed_bound * tau_i + rj.speed_bound * tau_j)
}

/// Result of one simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub disturbance: Vec2,
    pub reward: f64,
}

/// Full simulation state. Cloning forks the random stream as well.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub t: f64,
    pub x: Vec2,
    pub regions: Vec<Region>,
    pub step_index: usize,
    cfg: WorldConfig,
    goal: Region,
    rng: ChaCha8Rng,
}

impl WorldState {
    pub fn new(cfg: &WorldConfig, x0: Vec2, seed: u64) -> Self {
        let mut w = WorldState {
            t: 0.0,
            x: x0,
            regions: cfg.regions.iter().map(Region::new).collect(),
            step_index: 0,
            goal: Region::fixed("goal", cfg.goal.shape, cfg.goal.center),
            cfg: cfg.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        w.plan_regions();
        w
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn goal(&self) -> &Region {
        &self.goal
    }

    pub fn u_max(&self) -> f64 {
        self.cfg.agent.u_max
    }

    pub fn d_max(&self) -> f64 {
        self.cfg.agent.d_max
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    pub fn region(&self, name: &str) -> Result<&Region> {
        self.regions
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegion(name.into()))
    }

    pub fn region_index(&self, name: &str) -> Result<usize> {
        self.regions
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegion(name.into()))
    }

    pub fn reward(&self) -> f64 {
        if self.goal.contains(self.x) {
            1.0
        } else {
            0.0
        }
    }

    fn plan_regions(&mut self) {
        let dt = self.cfg.dt;
        for r in &mut self.regions {
            r.plan(dt, &mut self.rng);
        }
    }

    fn disturbance(&mut self, u: Vec2) -> Vec2 {
        let d_max = self.cfg.agent.d_max;
        match self.cfg.agent.disturbance {
            DisturbanceModel::None => Vec2::ZERO,
            DisturbanceModel::Uniform => {
                let r = d_max * self.rng.random::<f64>().sqrt();
                Vec2::from_polar(r, self.rng.random_range(0.0..std::f64::consts::TAU))
            }
            DisturbanceModel::Opposing => {
                let n = u.norm();
                if n > 0.0 {
                    u * (-d_max / n)
                } else {
                    Vec2::from_polar(d_max, self.rng.random_range(0.0..std::f64::consts::TAU))
                }
            }
        }
    }

    /// Applies control `u` for one step; the reward is that of the new state.
    pub fn step(&mut self, u: Vec2) -> Result<StepOutcome> {
        let bound = self.cfg.agent.u_max;
        let norm = u.norm();
        if norm.is_nan() || norm > bound + INPUT_TOL {
            return Err(Error::InputBound { norm, bound });
        }
        let d = self.disturbance(u);
        let dt = self.cfg.dt;
        self.x += (u + d) * dt;
        for r in &mut self.regions {
            r.advance(dt);
        }
        self.step_index += 1;
        self.t = self.step_index as f64 * dt;
        self.plan_regions();
        Ok(StepOutcome {
            disturbance: d,
            reward: self.reward(),
        })
    }
}
