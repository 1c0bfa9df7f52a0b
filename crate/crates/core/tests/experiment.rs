mod common;

use std::fs::File;

use stl_shield::experiment::{io, run, write_outputs, ExperimentConfig};
use stl_shield::learner::{Mode, PolicyKind};
use stl_shield::stl::parse;
use stl_shield::Error;

#[test]
fn shipped_configs_validate() {
    for name in ["case1.json", "case2.json", "stress.json"] {
        let cfg = common::load_config(name, &[]);
        cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn overrides_reach_nested_fields() {
    let cfg = common::load_config(
        "case1.json",
        &[
            ("eval.episodes", "7"),
            ("eval.policy", "greedy"),
            ("world.regions.1.shape.radius", "3"),
            ("shield.gamma", "2.5"),
            ("train.hidden", "[16]"),
        ],
    );
    assert_eq!(cfg.eval.episodes, 7);
    assert_eq!(cfg.eval.policy, PolicyKind::Greedy);
    assert_eq!(cfg.world.regions[1].shape, stl_shield::Shape::Disk { radius: 3.0 });
    assert_eq!(cfg.shield.gamma, 2.5);
    assert_eq!(cfg.train.hidden, vec![16]);
}

#[test]
fn bad_configs_name_the_field() {
    let path = common::config_path("case1.json");
    let load = |k: &str, v: &str| ExperimentConfig::load(&path, &[(k.to_string(), v.to_string())]);
    let msg = |r: Result<ExperimentConfig, Error>| r.unwrap_err().to_string();
    assert!(msg(load("world.agent.d_max", "1.5")).contains("d_max"));
    assert!(msg(load("spec", "F[0,10] in(nowhere)")).contains("nowhere"));
    assert!(msg(load("horizon", "50")).contains("horizon"));
    assert!(msg(load("train.tau", "0")).contains("train.tau"));
    assert!(msg(load("bogus_key", "1")).contains("bogus_key"));
    assert!(load("spec", "F[0,10] (in(charger1)").is_err());
}

/// The report's satisfaction rate is exactly the fraction of written
/// episode logs the monitor accepts.
#[test]
fn report_agrees_with_the_monitor_on_written_logs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::load_config("stress.json", &[("eval.episodes", "40"), ("eval.record_episodes", "40")]);
    cfg.eval.mode = Mode::Shielded;
    let out = run(&cfg).unwrap();
    write_outputs(dir.path(), &cfg, &out).unwrap();
    let spec = parse(&cfg.spec).unwrap();
    let mut accepted = 0;
    for log in &out.logs {
        let f = File::open(dir.path().join(format!("episode_{}.csv", log.episode))).unwrap();
        let traj = io::read_trajectory(f, Some(&cfg.world)).unwrap();
        let verdict = traj.satisfies(&spec, 0.0).unwrap();
        assert_eq!(verdict, log.satisfied, "episode {}", log.episode);
        accepted += verdict as usize;
    }
    assert_eq!(out.report.satisfaction_rate, accepted as f64 / out.logs.len() as f64);
    assert!(accepted < out.logs.len(), "stress runs should include violations");
    let back: ExperimentConfig = serde_json::from_reader(File::open(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn evaluation_is_independent_of_thread_count() {
    let cfg = common::load_config("case2.json", &[("eval.episodes", "12"), ("eval.record_episodes", "0")]);
    let a = run(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run(&cfg).unwrap());
    assert_eq!(a.logs, b.logs);
}
