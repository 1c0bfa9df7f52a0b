use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use stl_shield::cbf::{evaluate, CbfParams};
use stl_shield::filter::{solve_qp, BarrierConstraint};
use stl_shield::learner::{run_episode, Mode, RandomPolicy};
use stl_shield::sequencer::PlannedVisit;
use stl_shield::stl::{parse, Trajectory};
use stl_shield::world::Region;
use stl_shield::{Shape, Vec2};
use stl_shield_bench::setup;

fn qp(c: &mut Criterion) {
    let cases = [
        (BarrierConstraint { g: Vec2::new(1.0, 0.0), c: 1.0 }, Vec2::new(-0.5, 0.2)),
        (BarrierConstraint { g: Vec2::new(0.6, -0.8), c: -0.3 }, Vec2::new(0.1, 0.9)),
        (BarrierConstraint { g: Vec2::new(1.0, 0.0), c: -5.0 }, Vec2::ZERO),
    ];
    c.bench_function("solve_qp", |b| {
        b.iter(|| {
            for (con, u) in &cases {
                black_box(solve_qp(black_box(con), *u, 1.0, 1e4));
            }
        })
    });
}

fn cbf(c: &mut Criterion) {
    let disk = Shape::Disk { radius: 1.5 };
    let regions: Vec<Region> = (0..4)
        .map(|i| Region::snapshot(&format!("r{i}"), disk, Vec2::new(5.0 * i as f64, 10.0), 0.1))
        .collect();
    let items: Vec<PlannedVisit> = (0..4).map(|i| PlannedVisit::single(i, 30.0 + 20.0 * i as f64)).collect();
    let p = CbfParams::new(1.0, 0.2).with_margin(0.8);
    c.bench_function("cbf_evaluate_4_visits", |b| {
        b.iter(|| evaluate(black_box(Vec2::new(1.0, 2.0)), &items, &regions, 3.0, &p).unwrap())
    });
}

fn monitor(c: &mut Criterion) {
    let f = parse("G[0,210] F[0,90] (x1 - 0.5 >= 0 | x2 - 0.5 >= 0)").unwrap();
    let states: Vec<Vec2> = (0..3001)
        .map(|k| {
            let t = k as f64 * 0.1;
            Vec2::new((t / 7.0).sin(), (t / 11.0).cos())
        })
        .collect();
    let traj = Trajectory::new(0.1, states).unwrap();
    c.bench_function("monitor_3000_samples", |b| b.iter(|| traj.satisfies(black_box(&f), 0.0).unwrap()));
}

fn episode(c: &mut Criterion) {
    let mut g = c.benchmark_group("episode");
    g.sample_size(10);
    for name in ["case1", "case2"] {
        let s = setup(name);
        g.bench_function(name, |b| {
            b.iter(|| run_episode(&RandomPolicy, &s, Mode::Shielded, 0, 11, false, &mut |_| {}).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, qp, cbf, monitor, episode);
criterion_main!(benches);
