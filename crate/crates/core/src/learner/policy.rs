use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sac::Sac;
use crate::geometry::Vec2;
use crate::world::WorldState;

/// What a policy sees at each step.
pub struct PolicyInput<'a> {
    pub world: &'a WorldState,
    pub obs: &'a [f64],
    /// Standard normal exploration draw, temporally correlated as the
    /// policy's `exploration` asks (zero if it asks for none).
    pub noise: Vec2,
}

/// Source of the unshielded action; outputs lie in the `u_max` ball.
pub trait Policy: Sync {
    fn act(&self, input: &PolicyInput<'_>, rng: &mut ChaCha8Rng) -> Vec2;

    /// Step-to-step correlation of the exploration noise stream, or `None`
    /// if the policy does not use one.
    fn exploration(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Random,
    Greedy,
    Trained,
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(PolicyKind::Random),
            "greedy" => Ok(PolicyKind::Greedy),
            "trained" => Ok(PolicyKind::Trained),
            other => Err(format!("unknown policy `{other}` (expected random, greedy or trained)")),
        }
    }
}

/// Uniform over the input ball.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn act(&self, input: &PolicyInput<'_>, rng: &mut ChaCha8Rng) -> Vec2 {
        let u_max = input.world.u_max();
        let r = u_max * rng.random::<f64>().sqrt();
        Vec2::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
    }
}

/// Straight to the goal center at unit speed (or `u_max` if smaller),
/// slowing down so as not to overshoot it.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyPolicy;

impl Policy for GreedyPolicy {
    fn act(&self, input: &PolicyInput<'_>, _rng: &mut ChaCha8Rng) -> Vec2 {
        let w = input.world;
        let gap = w.goal().center - w.x;
        let dist = gap.norm();
        if dist == 0.0 {
            return Vec2::ZERO;
        }
        let speed = w.u_max().min(1.0).min(dist / w.dt());
        gap * (speed / dist)
    }
}

/// Learned actor: evaluated at its mean, or sampled with exploration
/// noise of the given step-to-step correlation.
#[derive(Debug, Clone, Copy)]
pub struct ActorCritic<'a> {
    pub sac: &'a Sac,
    pub exploration: Option<f64>,
}

impl<'a> ActorCritic<'a> {
    pub fn deterministic(sac: &'a Sac) -> Self {
        ActorCritic { sac, exploration: None }
    }

    pub fn exploring(sac: &'a Sac, correlation: f64) -> Self {
        ActorCritic {
            sac,
            exploration: Some(correlation),
        }
    }
}

impl Policy for ActorCritic<'_> {
    fn act(&self, input: &PolicyInput<'_>, _rng: &mut ChaCha8Rng) -> Vec2 {
        self.sac.act(input.obs, self.exploration.map(|_| input.noise))
    }

    fn exploration(&self) -> Option<f64> {
        self.exploration
    }
}
