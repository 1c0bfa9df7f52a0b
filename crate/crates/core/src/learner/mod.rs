//! Policies, a compact soft actor-critic and the shielded training loop.

mod buffer;
mod episode;
pub mod nn;
mod observe;
mod policy;
mod sac;
mod train;

pub use buffer::{Batch, ReplayBuffer, Transition};
pub use episode::{derive_seed, run_episode, EpisodeLog, EpisodeSetup, Mode, StepRecord};
pub use observe::{observe, OBS_DIM, REGION_SLOTS};
pub use policy::{ActorCritic, GreedyPolicy, Policy, PolicyInput, PolicyKind, RandomPolicy};
pub use sac::{ActorGrad, Sac, Squash, UpdateStats};
pub use train::{train, CurvePoint, TrainConfig, TrainOutcome};
