//! Parallel and sequential execution must agree bit for bit.

use issa_core::adamba::{adamba, sample_directions, AdambaConfig};
use issa_core::config::RunConfig;
use issa_core::ctrigger::estimate_props;
use issa_core::harness::{bench_phase1, brute_force_project, safe_control_fraction, sample_unsafe_states};
use issa_core::issa::{grid_anchor, project};
use issa_core::{Dynamics, Execution, RobotState, SafetyStatus};

const BOTH: [Execution; 2] = [Execution::Parallel, Execution::Sequential];

fn both<T: PartialEq + std::fmt::Debug>(f: impl Fn(Execution) -> T) {
    let [a, b] = BOTH.map(f);
    assert_eq!(a, b);
}

#[test]
fn boundary_search_fan_out() {
    let c = RunConfig::second_order_default();
    let rt = c.runtime().unwrap();
    let p = c.index.params();
    let samples = sample_unsafe_states(&rt.env, 30, (p.d_min, p.d_min + p.sigma + p.k), c.limits.v_max, 2).unwrap();
    let bx = rt.env.model.control_box();
    both(|execution| {
        let cfg = AdambaConfig { execution, n_dirs: 16, ..AdambaConfig::default() };
        let dirs = sample_directions(&cfg, 2).unwrap();
        samples
            .iter()
            .map(|s| {
                let q = rt.env.query(&rt.env.obstacles, &s.state).unwrap();
                adamba(&cfg, bx, &s.nominal, &dirs, SafetyStatus::Unsafe, SafetyStatus::Safe, |u| q.status(u)).unwrap()
            })
            .collect::<Vec<_>>()
    });
    both(|execution| {
        let cfg = c.issa.clone().with_execution(execution);
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let q = rt.env.query(&rt.env.obstacles, &s.state).unwrap();
                let r = project(&q, &s.nominal, &cfg, i as u64).unwrap();
                (r.control, r.phase, r.queries)
            })
            .collect::<Vec<_>>()
    });
}

#[test]
fn grid_scans() {
    let mut c = RunConfig::second_order_default();
    c.obstacles = vec![issa_core::Obstacle::fixed(0.0, 0.0, 0.3)];
    let rt = c.runtime().unwrap();
    let q = rt.env.query(&rt.env.obstacles, &RobotState::new(-0.6, 0.0, 0.0, 0.4)).unwrap();
    let u_r = [2.0, 0.0].into();
    both(|e| safe_control_fraction(&q, 31, e).unwrap());
    both(|e| brute_force_project(&q, &u_r, 31, e).unwrap());
    both(|e| {
        let a = grid_anchor(q.dynamics().control_box(), &c.issa.clone().with_execution(e), |u| q.status(u)).unwrap();
        (a.control, a.queries, a.refinement)
    });
}

#[test]
fn trigger_estimators() {
    let c = RunConfig::second_order_default();
    let model = c.build_model().unwrap();
    both(|e| estimate_props(&model, &c.limits, &c.index.family, &c.index.params(), 4, e).unwrap());
}

#[test]
fn phase1_benchmark_without_timing() {
    let c = RunConfig::second_order_default();
    let rt = c.runtime().unwrap();
    let p = c.index.params();
    let samples = sample_unsafe_states(&rt.env, 100, (p.d_min, p.d_min + p.sigma + p.k), c.limits.v_max, 9).unwrap();
    both(|e| bench_phase1(&rt.env, &samples, &c.issa, &[3, 10], 9, e, false).unwrap());
}
