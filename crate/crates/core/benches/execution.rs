//! Parallel against sequential execution for each data-parallel workload.
//!
//! `cargo bench -p issa-core` runs both variants side by side. Building with
//! `--no-default-features` turns the parallel variant into a second
//! sequential run, which is a quick way to measure dispatch overhead.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use issa_core::adamba::{adamba, sample_directions, AdambaConfig};
use issa_core::config::RunConfig;
use issa_core::ctrigger::estimate_props;
use issa_core::harness::scenario::{obstacle_course, CourseSpec};
use issa_core::harness::{
    bench_phase1, run_batch, safe_control_fraction, sample_unsafe_states, Env, EpisodeJob, PolicySpec, UnsafeSample,
};
use issa_core::{Dynamics, Execution, Obstacle, RobotState, SafetyStatus};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn unsafe_samples(count: usize) -> (RunConfig, Env, Vec<UnsafeSample>) {
    let c = RunConfig::second_order_default();
    let env = c.runtime().unwrap().env;
    let p = c.index.params();
    let samples =
        sample_unsafe_states(&env, count, (p.d_min, p.d_min + p.sigma + p.k * c.limits.v_max), c.limits.v_max, 1)
            .unwrap();
    (c, env, samples)
}

fn boundary_search(c: &mut Criterion) {
    let (_, env, samples) = unsafe_samples(100);
    let s = &samples[0];
    let q = env.query(&env.obstacles, &s.state).unwrap();
    let bx = env.model.control_box();
    let mut group = c.benchmark_group("adamba_fan_out");
    for n_dirs in [10, 64] {
        for (name, execution) in MODES {
            let cfg = AdambaConfig { n_dirs, execution, ..AdambaConfig::default() };
            let dirs = sample_directions(&cfg, 2).unwrap();
            group.bench_with_input(BenchmarkId::new(name, n_dirs), &dirs, |b, dirs| {
                b.iter(|| {
                    adamba(&cfg, bx, &s.nominal, dirs, SafetyStatus::Unsafe, SafetyStatus::Safe, |u| q.status(u))
                        .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn grid_scan(c: &mut Criterion) {
    let mut cfg = RunConfig::second_order_default();
    cfg.obstacles = vec![Obstacle::fixed(0.0, 0.0, 0.3)];
    let env = cfg.runtime().unwrap().env;
    let q = env.query(&env.obstacles, &RobotState::new(-0.6, 0.0, 0.0, 0.2)).unwrap();
    let mut group = c.benchmark_group("safe_control_fraction");
    for resolution in [41, 101] {
        for (name, execution) in MODES {
            group.bench_with_input(BenchmarkId::new(name, resolution), &resolution, |b, &r| {
                b.iter(|| safe_control_fraction(&q, r, execution).unwrap())
            });
        }
    }
    group.finish();
}

fn trigger_estimation(c: &mut Criterion) {
    let cfg = RunConfig::second_order_default();
    let model = cfg.build_model().unwrap();
    let params = cfg.index.params();
    let mut group = c.benchmark_group("estimate_props");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| estimate_props(&model, &cfg.limits, &cfg.index.family, &params, 0, execution).unwrap())
        });
    }
    group.finish();
}

fn phase1(c: &mut Criterion) {
    let (cfg, env, samples) = unsafe_samples(200);
    let mut group = c.benchmark_group("bench_phase1");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| bench_phase1(&env, black_box(&samples), &cfg.issa, &[10], 0, execution, false).unwrap())
        });
    }
    group.finish();
}

fn episode_batch(c: &mut Criterion) {
    let base = RunConfig::second_order_default();
    let props = base.runtime().unwrap().trigger_props;
    let jobs: Vec<EpisodeJob> = (0..16)
        .map(|seed| {
            let course = obstacle_course(&CourseSpec::default(), 1 + seed as usize % 4, seed);
            let mut cfg = base.clone();
            cfg.obstacles = course.obstacles;
            cfg.sim.initial_state = course.start;
            cfg.sim.steps = 200;
            cfg.policy = PolicySpec::goal_seek(course.goal);
            let rt = cfg.runtime_with(props.clone()).unwrap();
            EpisodeJob { env: rt.env, policy: rt.policy, stack: rt.stack, x0: rt.x0, steps: rt.steps, seed }
        })
        .collect();
    let mut group = c.benchmark_group("run_batch");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(name, |b| b.iter(|| run_batch(black_box(&jobs), execution)));
    }
    group.finish();
}

criterion_group!(benches, boundary_search, grid_scan, trigger_estimation, phase1, episode_batch);
criterion_main!(benches);
