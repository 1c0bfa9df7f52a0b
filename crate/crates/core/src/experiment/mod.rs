//! Experiment orchestration: config loading, training, parallel evaluation
//! and artifact output.

mod config;
pub mod io;
mod report;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

pub use config::{apply_override, EvalConfig, ExperimentConfig, OutputConfig};
pub use report::{hard_link_ok, relaxation_ok, RunReport, TrainSummary, EPS_ZERO};

use crate::error::Result;
use crate::learner::{
    derive_seed, run_episode, train, ActorCritic, CurvePoint, EpisodeLog, EpisodeSetup, GreedyPolicy, Mode,
    Policy, PolicyKind, RandomPolicy, Sac,
};

/// Seed stream reserved for evaluation episodes.
const EVAL_STREAM: u64 = 0x5eed_e7a1;

/// Runs `episodes` episodes in parallel. Episode `i` is seeded from
/// `(seed, i)` alone, so the result does not depend on scheduling. The first
/// `record` episodes keep their per-step rows.
pub fn evaluate(
    policy: &dyn Policy,
    setup: &EpisodeSetup,
    mode: Mode,
    episodes: usize,
    seed: u64,
    record: usize,
) -> Result<Vec<EpisodeLog>> {
    let stream = derive_seed(seed, EVAL_STREAM);
    (0..episodes)
        .into_par_iter()
        .map(|i| run_episode(policy, setup, mode, i, derive_seed(stream, i as u64), i < record, &mut |_| {}))
        .collect()
}

pub struct RunOutput {
    pub report: RunReport,
    pub logs: Vec<EpisodeLog>,
    pub curve: Vec<CurvePoint>,
    pub agent: Option<Sac>,
}

/// Trains (for the `trained` policy) and evaluates as configured.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let setup = cfg.setup()?;
    let ev = &cfg.eval;
    let (logs, curve, agent) = match ev.policy {
        PolicyKind::Random => (evaluate(&RandomPolicy, &setup, ev.mode, ev.episodes, cfg.seed, ev.record_episodes)?, vec![], None),
        PolicyKind::Greedy => (evaluate(&GreedyPolicy, &setup, ev.mode, ev.episodes, cfg.seed, ev.record_episodes)?, vec![], None),
        PolicyKind::Trained => {
            let out = train(&cfg.train, &setup, ev.mode, &mut |_| {})?;
            let policy = ActorCritic::deterministic(&out.agent);
            let logs = evaluate(&policy, &setup, ev.mode, ev.episodes, cfg.seed, ev.record_episodes)?;
            (logs, out.curve, Some(out.agent))
        }
    };
    let mut report = RunReport::from_logs(&logs, ev.policy, ev.mode, cfg.seed);
    if !curve.is_empty() {
        report.train = Some(TrainSummary::from_curve(&curve));
    }
    Ok(RunOutput {
        report,
        logs,
        curve,
        agent,
    })
}

/// Writes the resolved config, report, learning curve, checkpoint and
/// recorded episode logs under `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("config.json"))?), cfg)?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("report.json"))?), &out.report)?;
    if !out.curve.is_empty() {
        io::write_curve(BufWriter::new(File::create(dir.join("curve.csv"))?), &out.curve)?;
    }
    if let Some(agent) = &out.agent {
        agent.save(&dir.join("agent.ckpt"))?;
    }
    for log in out.logs.iter().filter(|l| !l.steps.is_empty()) {
        let path = dir.join(format!("episode_{}.csv", log.episode));
        io::write_episode_log(BufWriter::new(File::create(path)?), log)?;
    }
    Ok(())
}
