mod common;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stl_shield::learner::{
    run_episode, train, Batch, GreedyPolicy, Mode, Policy, PolicyInput, RandomPolicy, Sac, TrainConfig, Transition,
    OBS_DIM,
};
use stl_shield::world::DisturbanceModel;
use stl_shield::Vec2;

fn small(cfg: TrainConfig) -> TrainConfig {
    TrainConfig {
        hidden: vec![32, 32],
        batch_size: 32,
        ..cfg
    }
}

#[test]
fn actor_and_critic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..5 {
        let cfg = small(TrainConfig::default());
        let sac = Sac::new(OBS_DIM, 1.0 + 0.2 * k as f64, &cfg, &mut rng);
        let batch = common::random_batch(&mut rng, OBS_DIM, 16, sac.u_max);
        let xi = common::noise(&mut rng, 16);
        let a = common::actor_fd_error(&sac, &batch, &xi, 200, &mut rng);
        let c = common::critic_fd_error(&sac, &batch, &xi, 200, &mut rng);
        assert!(a <= 1e-3, "actor relative error {a}");
        assert!(c <= 1e-3, "critic relative error {c}");
    }
}

fn fixed_buffer(rng: &mut ChaCha8Rng, n: usize, reward: f64, same_next: bool) -> Batch {
    let mut b = common::random_batch(rng, OBS_DIM, n, 1.0);
    b.rew = Array1::from_elem(n, reward);
    if same_next {
        b.next = b.obs.clone();
    }
    b
}

fn minibatch(all: &Batch, rng: &mut ChaCha8Rng, n: usize) -> Batch {
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..all.len())).collect();
    let pick = |m: &Array2<f64>| Array2::from_shape_fn((n, m.ncols()), |(i, j)| m[[idx[i], j]]);
    Batch {
        obs: pick(&all.obs),
        act: pick(&all.act),
        rew: Array1::from_shape_fn(n, |i| all.rew[idx[i]]),
        next: pick(&all.next),
    }
}

#[test]
fn critic_settles_on_zero_reward() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = small(TrainConfig::default());
    let mut sac = Sac::new(OBS_DIM, 1.0, &cfg, &mut rng);
    let data = fixed_buffer(&mut rng, 256, 0.0, false);
    let mut last = f64::INFINITY;
    for _ in 0..1000 {
        last = sac.update(&minibatch(&data, &mut rng, 32), &mut rng).unwrap().critic_loss;
    }
    assert!(last < 0.1, "critic loss {last}");
}

#[test]
fn bandit_critic_learns_the_discounted_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // vanishing temperature so the target is the plain discounted return
    let cfg = small(TrainConfig {
        gamma_rl: 0.9,
        critic_lr: 3e-3,
        tau: 0.05,
        init_alpha: 1e-9,
        alpha_lr: 1e-12,
        ..TrainConfig::default()
    });
    let mut sac = Sac::new(OBS_DIM, 1.0, &cfg, &mut rng);
    let data = fixed_buffer(&mut rng, 64, 1.0, true);
    for _ in 0..4000 {
        sac.update(&minibatch(&data, &mut rng, 32), &mut rng).unwrap();
    }
    let acts: Vec<Vec2> = data.act.rows().into_iter().map(|r| Vec2::new(r[0], r[1])).collect();
    let q = sac.q_value(data.obs.view(), &acts);
    let want = 1.0 / (1.0 - 0.9);
    let mean = q.mean().unwrap();
    assert!((mean - want).abs() <= 0.05 * want, "Q {mean}, want {want}");
}

#[test]
fn actions_stay_in_the_input_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let sac = Sac::new(OBS_DIM, 0.7, &TrainConfig::default(), &mut rng);
    for _ in 0..500 {
        let obs: Vec<f64> = (0..OBS_DIM).map(|_| rng.random_range(-1e3..1e3)).collect();
        let xi = Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        assert!(sac.act(&obs, Some(xi)).norm() <= 0.7 + 1e-12);
        assert!(sac.act(&obs, None).norm() <= 0.7 + 1e-12);
    }
}

fn collect(setup: &stl_shield::learner::EpisodeSetup, policy: &dyn Policy, mode: Mode, seed: u64) -> (stl_shield::learner::EpisodeLog, Vec<Transition>) {
    let mut trs = Vec::new();
    let log = run_episode(policy, setup, mode, 0, seed, true, &mut |t| trs.push(t)).unwrap();
    (log, trs)
}

#[test]
fn stored_transitions_carry_the_executed_action() {
    let setup = common::load_config("case1.json", &[]).setup().unwrap();
    let (log, trs) = collect(&setup, &RandomPolicy, Mode::Shielded, 21);
    assert_eq!(trs.len(), setup.steps());
    let d_step = setup.world.agent.d_max * setup.world.dt;
    let mut corrected = 0;
    for (tr, row) in trs.iter().zip(&log.steps) {
        assert_eq!(tr.x, row.x);
        assert!((tr.u - (row.u_rl + row.u_cbf)).norm() <= 1e-12);
        assert!(tr.u.norm() <= setup.world.agent.u_max + 1e-9);
        let drift = tr.x_next - tr.x - tr.u * setup.world.dt;
        assert!(drift.norm() <= d_step + 1e-12);
        if row.u_cbf.norm() > 0.0 {
            corrected += 1;
        }
    }
    assert!(corrected > 0, "the filter never acted");
}

#[test]
fn empty_specification_passes_the_policy_through() {
    let setup = common::load_config("case1.json", &[("spec", "")]).setup().unwrap();
    let (log, trs) = collect(&setup, &RandomPolicy, Mode::Shielded, 22);
    assert!(log.satisfied);
    assert_eq!(log.qp_steps, 0);
    for (tr, row) in trs.iter().zip(&log.steps) {
        assert_eq!(row.u_cbf, Vec2::ZERO);
        assert_eq!(tr.u, row.u_rl);
    }
}

#[test]
fn undisturbed_shielded_episodes_all_satisfy() {
    let mut cfg = common::load_config("case1.json", &[]);
    cfg.world.agent.disturbance = DisturbanceModel::None;
    let setup = cfg.setup().unwrap();
    let logs = stl_shield::experiment::evaluate(&GreedyPolicy, &setup, Mode::Shielded, 100, 8, 0).unwrap();
    let ok = logs.iter().filter(|l| l.satisfied).count();
    assert_eq!(ok, 100);
}

#[test]
fn episodes_and_training_replay_by_seed() {
    let setup = common::load_config("case1.json", &[("horizon", "40"), ("spec", "F[0,30] in(charger1)")])
        .setup()
        .unwrap();
    let (a, ta) = collect(&setup, &RandomPolicy, Mode::Shielded, 5);
    let (b, tb) = collect(&setup, &RandomPolicy, Mode::Shielded, 5);
    assert_eq!(a, b);
    assert_eq!(ta.len(), tb.len());
    let cfg = small(TrainConfig {
        episodes: 3,
        updates_per_step: 0.05,
        seed: 9,
        ..TrainConfig::default()
    });
    let x = train(&cfg, &setup, Mode::Shielded, &mut |_| {}).unwrap();
    let y = train(&cfg, &setup, Mode::Shielded, &mut |_| {}).unwrap();
    assert_eq!(x.curve, y.curve);
    assert_eq!(x.agent.actor.params, y.agent.actor.params);
}

struct Fixed(Vec2);

impl Policy for Fixed {
    fn act(&self, _input: &PolicyInput<'_>, _rng: &mut ChaCha8Rng) -> Vec2 {
        self.0
    }
}

#[test]
fn unshielded_mode_never_filters() {
    let setup = common::load_config("case1.json", &[]).setup().unwrap();
    let (log, trs) = collect(&setup, &Fixed(Vec2::new(0.3, 0.3)), Mode::Unshielded, 1);
    assert_eq!(log.qp_steps, 0);
    assert!(trs.iter().all(|t| t.u == Vec2::new(0.3, 0.3)));
}
