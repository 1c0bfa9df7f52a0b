mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stl_shield::world::{DisturbanceModel, WorldConfig, WorldState};
use stl_shield::{Error, Vec2};

fn case(name: &str, model: DisturbanceModel) -> WorldConfig {
    let mut w = common::load_config(name, &[]).world;
    w.agent.disturbance = model;
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steps_follow_the_disturbed_integrator(seed in any::<u64>(), opposing in any::<bool>(), second in any::<bool>()) {
        let model = if opposing { DisturbanceModel::Opposing } else { DisturbanceModel::Uniform };
        let cfg = case(if second { "case2.json" } else { "case1.json" }, model);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = WorldState::new(&cfg, Vec2::new(20.0, 20.0), seed);
        for _ in 0..300 {
            let u = Vec2::from_polar(cfg.agent.u_max * rng.random::<f64>(), rng.random_range(0.0..6.3));
            let x = w.x;
            let centers: Vec<Vec2> = w.regions.iter().map(|r| r.center).collect();
            let out = w.step(u).unwrap();
            prop_assert!(out.disturbance.norm() <= cfg.agent.d_max + 1e-12);
            let expect = x + (u + out.disturbance) * cfg.dt;
            prop_assert!((w.x - expect).norm() <= 1e-12);
            for (r, c) in w.regions.iter().zip(centers) {
                prop_assert!((r.center - c).norm() <= r.speed_bound * cfg.dt + 1e-9, "{} moved too fast", r.name);
            }
        }
    }
}

#[test]
fn opposing_disturbance_points_against_the_input() {
    let cfg = case("case1.json", DisturbanceModel::Opposing);
    let mut w = WorldState::new(&cfg, Vec2::new(20.0, 20.0), 1);
    let out = w.step(Vec2::new(0.5, 0.0)).unwrap();
    assert!((out.disturbance - Vec2::new(-0.2, 0.0)).norm() < 1e-12);
    assert!((w.x - Vec2::new(20.03, 20.0)).norm() < 1e-12);
}

#[test]
fn oversized_input_is_rejected() {
    let cfg = case("case1.json", DisturbanceModel::None);
    let mut w = WorldState::new(&cfg, Vec2::ZERO, 1);
    assert!(matches!(w.step(Vec2::new(1.0, 0.5)), Err(Error::InputBound { .. })));
}

#[test]
fn random_walks_stay_in_their_boxes_and_replay_by_seed() {
    let cfg = case("case2.json", DisturbanceModel::Uniform);
    let run = |seed| {
        let mut w = WorldState::new(&cfg, Vec2::new(20.0, 20.0), seed);
        let mut path = Vec::new();
        for _ in 0..2000 {
            w.step(Vec2::ZERO).unwrap();
            path.push(w.regions.iter().map(|r| r.center).collect::<Vec<_>>());
        }
        path
    };
    let a = run(9);
    assert_eq!(a, run(9));
    assert_ne!(a, run(10));
    let boxes = [(Vec2::new(6.0, 18.0), Vec2::new(20.0, 34.0)), (Vec2::new(18.0, 6.0), Vec2::new(34.0, 20.0))];
    for centers in &a {
        for (c, (lo, hi)) in centers.iter().zip(boxes) {
            assert!(c.x >= lo.x - 1e-9 && c.x <= hi.x + 1e-9 && c.y >= lo.y - 1e-9 && c.y <= hi.y + 1e-9, "{c:?}");
        }
    }
}

#[test]
fn reward_marks_the_goal() {
    let cfg = case("case1.json", DisturbanceModel::None);
    let mut w = WorldState::new(&cfg, Vec2::new(30.0, 25.9), 1);
    assert_eq!(w.reward(), 0.0);
    assert_eq!(w.step(Vec2::new(0.0, 1.0)).unwrap().reward, 1.0);
}
