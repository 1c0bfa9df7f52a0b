use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use stl_shield::learner::{Sac, TrainConfig, OBS_DIM};
use stl_shield::Vec2;
use stl_shield_bench::{filled_buffer, rng, setup};

fn sac(c: &mut Criterion) {
    let s = setup("case1");
    let buf = filled_buffer(&s);
    let cfg = TrainConfig::default();
    let mut r = rng(1);
    let mut agent = Sac::new(OBS_DIM, 1.0, &cfg, &mut r);
    let batch = buf.sample(cfg.batch_size, &mut r);
    c.bench_function("sac_update", |b| {
        b.iter(|| agent.update(black_box(&batch), &mut r).unwrap())
    });
    let obs = batch.obs.row(0).to_vec();
    let xi = Vec2::new(0.3, -1.1);
    c.bench_function("sac_act", |b| b.iter(|| agent.act(black_box(&obs), Some(xi))));
}

criterion_group!(benches, sac);
criterion_main!(benches);
