//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stl_shield::experiment::ExperimentConfig;
use stl_shield::learner::{run_episode, EpisodeSetup, Mode, RandomPolicy, ReplayBuffer, OBS_DIM};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

pub fn case(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_path(name), &[]).expect("shipped config loads")
}

pub fn setup(name: &str) -> EpisodeSetup {
    case(name).setup().expect("shipped config is valid")
}

/// Replay buffer filled with one random shielded episode.
pub fn filled_buffer(setup: &EpisodeSetup) -> ReplayBuffer {
    let mut buf = ReplayBuffer::new(100_000, OBS_DIM);
    run_episode(&RandomPolicy, setup, Mode::Shielded, 0, 7, false, &mut |t| buf.push(&t)).expect("episode runs");
    buf
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
