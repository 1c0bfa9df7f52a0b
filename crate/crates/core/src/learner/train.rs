use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::ReplayBuffer;
use super::episode::{derive_seed, run_episode, EpisodeLog, EpisodeSetup, Mode};
use super::observe::OBS_DIM;
use super::policy::ActorCritic;
use super::sac::Sac;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Number of training episodes `N`.
    pub episodes: usize,
    /// Discount factor of the return.
    pub gamma_rl: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub alpha_lr: f64,
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient steps per environment step, applied after each episode.
    pub updates_per_step: f64,
    /// Polyak rate of the target critics.
    pub tau: f64,
    pub init_alpha: f64,
    /// Defaults to minus the action dimension.
    pub target_entropy: Option<f64>,
    /// Initial standard deviation of the policy pre-activation.
    pub init_std: f64,
    /// Step-to-step correlation of the exploration noise (AR(1) with a
    /// standard normal marginal; 0 gives white noise).
    pub noise_correlation: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 40,
            gamma_rl: 0.99,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            alpha_lr: 1e-3,
            hidden: vec![64, 64],
            batch_size: 64,
            buffer_capacity: 200_000,
            updates_per_step: 0.1,
            tau: 0.005,
            init_alpha: 0.2,
            target_entropy: None,
            init_std: 0.6,
            noise_correlation: 0.98,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("train.{field}"), msg))
            }
        };
        check(self.gamma_rl > 0.0 && self.gamma_rl <= 1.0, "gamma_rl", "must lie in (0, 1]")?;
        for (v, f) in [
            (self.actor_lr, "actor_lr"),
            (self.critic_lr, "critic_lr"),
            (self.alpha_lr, "alpha_lr"),
            (self.init_alpha, "init_alpha"),
            (self.init_std, "init_std"),
        ] {
            check(v > 0.0 && v.is_finite(), f, "must be positive")?;
        }
        check(self.tau > 0.0 && self.tau <= 1.0, "tau", "must lie in (0, 1]")?;
        check(
            (0.0..1.0).contains(&self.noise_correlation),
            "noise_correlation",
            "must lie in [0, 1)",
        )?;
        check(!self.hidden.is_empty() && self.hidden.iter().all(|&h| h > 0), "hidden", "needs positive layer widths")?;
        check(self.batch_size > 0, "batch_size", "must be positive")?;
        check(self.buffer_capacity >= self.batch_size, "buffer_capacity", "must hold at least one batch")?;
        check(self.updates_per_step >= 0.0 && self.updates_per_step.is_finite(), "updates_per_step", "must be non-negative")?;
        Ok(())
    }
}

/// Per-episode entry of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub stl_satisfied: bool,
    pub eps_max: f64,
}

pub struct TrainOutcome {
    pub agent: Sac,
    pub curve: Vec<CurvePoint>,
}

/// Trains a soft actor-critic agent for `cfg.episodes` episodes, updating
/// the networks from the replay buffer after each one. `on_episode` sees
/// every episode log as it completes.
pub fn train(
    cfg: &TrainConfig,
    setup: &EpisodeSetup,
    mode: Mode,
    on_episode: &mut dyn FnMut(&EpisodeLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut agent = Sac::new(OBS_DIM, setup.world.agent.u_max, cfg, &mut rng);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, OBS_DIM);
    let mut curve = Vec::with_capacity(cfg.episodes);
    for ep in 0..cfg.episodes {
        let policy = ActorCritic::exploring(&agent, cfg.noise_correlation);
        let mut steps = 0usize;
        let log = run_episode(
            &policy,
            setup,
            mode,
            ep,
            derive_seed(cfg.seed, ep as u64),
            false,
            &mut |t| {
                buffer.push(&t);
                steps += 1;
            },
        )?;
        if !log.ret.is_finite() {
            return Err(Error::Diverged(format!("episode {ep} return is not finite")));
        }
        if buffer.len() >= cfg.batch_size {
            let updates = (steps as f64 * cfg.updates_per_step).round() as usize;
            for _ in 0..updates {
                let batch = buffer.sample(cfg.batch_size, &mut rng);
                agent.update(&batch, &mut rng)?;
            }
        }
        on_episode(&log);
        curve.push(CurvePoint {
            episode: ep,
            ret: log.ret,
            stl_satisfied: log.satisfied,
            eps_max: log.eps_max,
        });
    }
    Ok(TrainOutcome { agent, curve })
}
