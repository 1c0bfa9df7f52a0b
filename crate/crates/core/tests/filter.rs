mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stl_shield::filter::{compose, solve_qp, ActiveSet, BarrierConstraint, BoundTracker};
use stl_shield::Vec2;

const K_EPS: f64 = 1e4;

fn eps_cap(con: &BarrierConstraint, u_rl: Vec2, u_max: f64) -> f64 {
    // slack never needs to exceed the deficit at the zero correction plus
    // what the whole ball can add
    (-(con.g.dot(u_rl) + con.c)).max(0.0) + con.g.norm() * 2.0 * u_max + 1.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn qp_matches_grid_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (con, u_rl, u_max) = common::random_qp(&mut rng);
        let k_eps = 10f64.powf(rand::Rng::random_range(&mut rng, 0.0..4.0));
        let s = solve_qp(&con, u_rl, u_max, k_eps);
        let w = compose(u_rl, &s);
        prop_assert!(s.eps >= 0.0);
        prop_assert!(w.norm() <= u_max + 1e-8);
        prop_assert!(con.residual(w) >= -s.eps - 1e-8);
        let grid = common::qp_grid_oracle(&con, u_rl, u_max, k_eps, 2e-3, eps_cap(&con, u_rl, u_max));
        // the solver may beat the grid but never lose to it by more than
        // the grid's own discretization
        prop_assert!(s.objective <= grid + 1e-3, "solver {} grid {}", s.objective, grid);
    }

    /// No feasible correction exists with less slack than the solver uses,
    /// up to the objective trade-off.
    #[test]
    fn slack_is_used_only_when_needed(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (con, u_rl, u_max) = common::random_qp(&mut rng);
        let s = solve_qp(&con, u_rl, u_max, K_EPS);
        // best the ball can do along the gradient
        let reach = con.g.norm() * u_max + con.c;
        if reach >= 1e-6 {
            // the full-authority point is feasible without slack; slack is
            // only worth it if the quadratic cost of reaching dominates
            let deficit = -(con.g.dot(u_rl) + con.c);
            prop_assert!(s.eps <= deficit.max(0.0) + 1e-9);
            // well inside the ball the quadratic cost of reaching is far
            // below the slack price
            if -con.c <= 0.9 * u_max * con.g.norm() {
                prop_assert!(s.eps <= 1e-9, "eps {} with reach {}", s.eps, reach);
            }
        } else {
            prop_assert!((s.eps - (-reach)).abs() <= 1e-6 * (1.0 + reach.abs()), "eps {} reach {}", s.eps, reach);
        }
    }

    #[test]
    fn inactive_filter_leaves_action_alone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut con, u_rl, u_max) = common::random_qp(&mut rng);
        con.c = con.c.abs() + con.g.norm() * u_max;
        let s = solve_qp(&con, u_rl, u_max, K_EPS);
        prop_assert_eq!(s.active, ActiveSet::Inactive);
        prop_assert_eq!(compose(u_rl, &s), u_rl);
    }
}

#[test]
fn saturating_example() {
    // b needs 5 units of growth per unit time but the input can deliver 1
    let con = BarrierConstraint {
        g: Vec2::new(1.0, 0.0),
        c: -5.0,
    };
    let s = solve_qp(&con, Vec2::ZERO, 1.0, K_EPS);
    assert!((s.u - Vec2::new(1.0, 0.0)).norm() < 1e-12);
    assert!((s.eps - 4.0).abs() < 1e-12);
}

#[test]
fn thousand_instances_satisfy_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let (con, u_rl, u_max) = common::random_qp(&mut rng);
        let s = solve_qp(&con, u_rl, u_max, K_EPS);
        let w = compose(u_rl, &s);
        assert!(w.norm() <= u_max + 1e-8);
        assert!(con.residual(w) + s.eps >= -1e-8);
    }
}

#[test]
fn tracker_flags_values_below_the_floor() {
    let mut t = BoundTracker::new(1.0, 1.0, 0.0, 0.1);
    t.start_phase(0.5);
    assert!(t.check(0.1, 0.0));
    assert!(t.check(-t.tol_disc * 0.5, 0.0));
    assert!(!t.check(-1.0, 0.0));
    assert_eq!(t.failures, 1);
    // a slack of 2 moves the floor to -2
    assert!(t.check(-1.5, 2.0));
}
