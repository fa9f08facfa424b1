//! Safety index, design rules and the safe control set in the second-order model.

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::Rng;

use issa_core::config::RunConfig;
use issa_core::harness::oracle::any_safe;
use issa_core::harness::{safe_control_fraction, sample_unsafe_states};
use issa_core::issa::{project, Phase};
use issa_core::rng::{SeedStreams, Stream};
use issa_core::safety_index::{
    discrete_k_min, eta_online, phi, phi0, synthesize_k, toy_phi, validate_continuous_rule,
    validate_discrete_assumptions, validate_discrete_rule, Clause,
};
use issa_core::{Execution, Obstacle, RobotState, SafetyIndexParams, SafetyStatus, SystemLimits};

fn limits(v_max: f64, a_min: f64, a_max: f64, w_m: f64, dt: f64) -> SystemLimits {
    SystemLimits::new(v_max, a_min, a_max, -w_m, w_m, dt)
}

#[test]
fn index_values_match_hand_evaluation() {
    let params = SafetyIndexParams::new(0.0, 1, 0.375, 0.0, 0.05);
    assert_relative_eq!(params.phi_i(0.1, -0.2), 0.025, max_relative = 1e-12);

    let d_min = 0.4;
    let near = Obstacle::fixed(0.8 * d_min, 0.0, 0.1);
    let far = Obstacle::fixed(0.0, 3.0 * d_min, 0.1);
    let x = RobotState::new(0.0, 0.0, 0.0, 0.0);
    assert_relative_eq!(phi0(&x, &[near, far], d_min), 0.2 * d_min, max_relative = 1e-12);

    // heading straight at a static obstacle: d_dot = -v
    let p = SafetyIndexParams::new(0.1, 1, 0.5, 0.0, 0.5);
    let x = RobotState::new(0.0, 0.0, 0.0, 0.8);
    let o = Obstacle::fixed(2.0, 0.0, 0.2);
    assert_relative_eq!(phi(&x, &[o], &p).unwrap(), 0.1 + 0.5 - 2.0 + 0.5 * 0.8, max_relative = 1e-12);

    let toy = RobotState::pose(0.0, 0.0, 0.0);
    assert_relative_eq!(toy_phi(&toy, &Obstacle::fixed(1.0, 0.0, 0.25), 0.25, 0.25), 0.25, max_relative = 1e-12);
    assert_relative_eq!(toy_phi(&toy, &Obstacle::fixed(0.0, 1.0, 0.25), 0.25, 0.25), -0.75, max_relative = 1e-12);
    assert_relative_eq!(eta_online(0.2, std::f64::consts::FRAC_PI_3), 0.1, max_relative = 1e-12);
}

#[test]
fn design_rule_examples() {
    let l = limits(2.0, -1.0, 1.0, 1.0, 0.1);
    assert!(validate_continuous_rule(&SafetyIndexParams::new(0.3, 1, 2.0, 0.0, 0.5), &l).holds);
    assert!(!validate_continuous_rule(&SafetyIndexParams::new(0.3, 1, 1.0, 0.0, 0.5), &l).holds);

    let l2 = limits(1.0, -2.0, 2.0, 1.0, 0.1);
    let r = validate_continuous_rule(&SafetyIndexParams::new(0.1, 2, 5.0, 0.0, 1.0), &l2);
    assert_relative_eq!(r.lhs, 2.0 * 6.1f64.sqrt() / 5.0, max_relative = 1e-12);
    assert!(r.holds);

    let no_brake = limits(1.0, 0.0, 2.0, 1.0, 0.1);
    assert!(!validate_continuous_rule(&SafetyIndexParams::new(0.1, 1, 5.0, 0.0, 1.0), &no_brake).holds);

    let l3 = limits(1.0, -2.0, 2.0, 1.0, 0.1);
    assert_relative_eq!(discrete_k_min(0.01, &l3), 0.55, max_relative = 1e-12);
    let rep = validate_discrete_rule(&SafetyIndexParams::new(0.1, 1, 0.55, 0.01, 0.5), &l3, -1.0).unwrap();
    assert!(rep.clause(Clause::DiscreteGain).unwrap().holds);
    assert!(!rep.clause(Clause::DiscreteMargin).unwrap().holds, "sigma must exceed 0.1 strictly");
    let rep = validate_discrete_rule(&SafetyIndexParams::new(0.1 + 1e-9, 1, 0.55, 0.01, 0.5), &l3, -1.0).unwrap();
    assert!(rep.holds());
    assert!(validate_discrete_rule(&SafetyIndexParams::new(0.1, 2, 1.0, 0.01, 0.5), &l3, -1.0).is_err());

    let a = validate_discrete_assumptions(&limits(1.0, -1.0, 1.0, 1.0, 0.1));
    assert_relative_eq!(a.lhs, 2.0, max_relative = 1e-12);
    assert_relative_eq!(a.rhs, 0.4, max_relative = 1e-12);
    assert!(a.holds);
    let a = validate_discrete_assumptions(&limits(1.0, -1.0, 1.0, 1.0, 2.0));
    assert_relative_eq!(a.lhs, -0.375, max_relative = 1e-12);
    assert_relative_eq!(a.rhs, 8.0, max_relative = 1e-12);
    assert!(!a.holds);
}

#[test]
fn synthesized_gain_sits_on_the_rule_boundary() {
    let l = limits(1.5, -3.0, 3.0, 1.0, 0.1);
    assert_relative_eq!(synthesize_k(&l, 1, 0.2, 0.5).unwrap(), 0.5, max_relative = 1e-12);

    let l = limits(1.0, -2.0, 2.0, 1.0, 0.1);
    let k = synthesize_k(&l, 2, 0.1, 1.0).unwrap();
    // 2·sqrt(1.1 + k)/k = 2  ⇔  k² − k − 1.1 = 0
    let exact = (1.0 + (1.0f64 + 4.4).sqrt()) / 2.0;
    assert_relative_eq!(k, exact, max_relative = 1e-9);
    assert!(validate_continuous_rule(&SafetyIndexParams::new(0.1, 2, k * (1.0 + 1e-8), 0.0, 1.0), &l).holds);
    assert!(!validate_continuous_rule(&SafetyIndexParams::new(0.1, 2, k * (1.0 - 1e-6), 0.0, 1.0), &l).holds);

    assert!(synthesize_k(&limits(1.0, 0.0, 2.0, 1.0, 0.1), 1, 0.1, 1.0).is_err());
}

proptest! {
    #[test]
    fn index_decreases_in_distance_and_range_rate(
        d in 0.01f64..10.0, dd in 0.001f64..5.0, rate in -5.0f64..5.0, dr in 0.001f64..5.0,
        n in 1u32..4, k in 0.01f64..5.0,
    ) {
        let p = SafetyIndexParams::new(0.1, n, k, 0.0, 0.5);
        prop_assert!(p.phi_i(d + dd, rate) < p.phi_i(d, rate));
        prop_assert!(p.phi_i(d, rate + dr) < p.phi_i(d, rate));
    }

    #[test]
    fn online_decay_stays_in_range(eta0 in 0.0f64..2.0, alpha in -10.0f64..10.0) {
        let e = eta_online(eta0, alpha);
        prop_assert!((0.0..=eta0).contains(&e));
    }
}

fn single_obstacle_config() -> RunConfig {
    let mut c = RunConfig::second_order_default();
    c.obstacles = vec![Obstacle::fixed(0.0, 0.0, 0.3)];
    c
}

#[test]
fn unsafe_states_always_admit_a_safe_control() {
    let c = single_obstacle_config();
    assert!(c.rule_report().unwrap().holds());
    let rt = c.runtime().unwrap();
    let p = c.index.params();
    let mut rng = SeedStreams::new(21).rng(Stream::Scenario, 0);
    let mut checked = 0;
    while checked < 300 {
        let d = rng.random_range(0.5 * p.d_min..=p.d_min + p.sigma + p.k * c.limits.v_max);
        let bearing = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let x = RobotState::new(
            -d * bearing.cos(),
            -d * bearing.sin(),
            rng.random_range(-3.0..3.0),
            rng.random_range(-c.limits.v_max..=c.limits.v_max),
        );
        let q = rt.env.query(&rt.env.obstacles, &x).unwrap();
        if q.phi() < 0.0 {
            continue;
        }
        checked += 1;
        assert!(any_safe(&q, 41).unwrap(), "no safe control at {x}");
    }
}

#[test]
fn distance_only_index_has_an_empty_safe_set() {
    let mut c = single_obstacle_config();
    c.index.k = 0.0;
    let rt = c.runtime().unwrap();
    let x = RobotState::new(-0.6, 0.0, 0.0, 0.2);
    let q = rt.env.query(&rt.env.obstacles, &x).unwrap();
    assert!(q.phi() > 0.0);
    let scan = safe_control_fraction(&q, 41, Execution::Parallel).unwrap();
    assert_eq!(scan.fraction, 0.0);
    assert!(scan.cells.iter().all(|cell| cell.status == SafetyStatus::Unsafe));
}

#[test]
fn safe_set_grows_with_the_gain() {
    let mut last = 0.0;
    for k in [0.25, 0.5, 1.0, 2.0] {
        let mut c = single_obstacle_config();
        c.index.k = k;
        let rt = c.runtime().unwrap();
        let q = rt.env.query(&rt.env.obstacles, &RobotState::new(-0.6, 0.0, 0.0, 0.2)).unwrap();
        let f = safe_control_fraction(&q, 41, Execution::Parallel).unwrap().fraction;
        assert!(f >= last, "k = {k}: {f} < {last}");
        last = f;
    }
    assert!(last > 0.3);
}

#[test]
fn projection_succeeds_on_sampled_unsafe_states() {
    let c = RunConfig::second_order_default();
    let rt = c.runtime().unwrap();
    let p = c.index.params();
    let samples =
        sample_unsafe_states(&rt.env, 200, (p.d_min, p.d_min + p.sigma + p.k * c.limits.v_max), c.limits.v_max, 17)
            .unwrap();
    for (i, s) in samples.iter().enumerate() {
        let q = rt.env.query(&rt.env.obstacles, &s.state).unwrap();
        let r = project(&q, &s.nominal, &c.issa, i as u64).unwrap();
        assert_ne!(r.phase, Phase::PassThrough);
        assert_eq!(q.status(&r.control).unwrap(), SafetyStatus::Safe, "state {}", s.state);
    }
}
