//! Closed-loop episodes: invariance, convergence, failure handling and traces.

use issa_core::config::{RunConfig, Sidecar};
use issa_core::harness::scenario::{obstacle_course, unsafe_approach, CourseSpec};
use issa_core::harness::{
    check_finite_time_convergence, check_forward_invariance, run_batch, run_episode, EpisodeJob, EpisodeTrace,
    PolicySpec, SafeguardStack,
};
use issa_core::safety_index::Mode;
use issa_core::{Execution, Obstacle, RobotState};

fn phis(trace: &EpisodeTrace) -> Vec<f64> {
    trace.records.iter().map(|r| r.phi).collect()
}

fn rises_while_positive(trace: &EpisodeTrace) -> usize {
    phis(trace).windows(2).filter(|w| w[0] > 0.0 && w[1] > w[0]).count()
}

fn run(config: &RunConfig) -> EpisodeTrace {
    let rt = config.runtime().unwrap();
    run_episode(&rt.env, &rt.policy, &rt.stack, rt.x0, rt.steps, rt.seed)
}

#[test]
fn toy_discrete_check_reaches_and_keeps_the_safe_set() {
    let trace = run(&RunConfig::toy(Mode::Discrete));
    assert!(trace.failure.is_none());
    assert_eq!(trace.len(), 100);
    assert!(trace.records[0].phi > 0.0, "the toy starts inside the unsafe band");
    assert_eq!(rises_while_positive(&trace), 0);
    let entry = phis(&trace).iter().position(|p| *p <= 0.0).expect("converges");
    assert!(phis(&trace)[entry..].iter().all(|p| *p <= 0.0));
    assert!(check_forward_invariance(&trace).forward_invariant);
}

#[test]
fn toy_continuous_check_lets_the_index_rise() {
    let trace = run(&RunConfig::toy(Mode::ContinuousApprox));
    assert!(rises_while_positive(&trace) >= 1);
}

fn course_config(seed: u64) -> RunConfig {
    let course = obstacle_course(&CourseSpec::default(), 1 + (seed as usize) % 4, seed);
    let mut c = RunConfig::second_order_default();
    c.obstacles = course.obstacles;
    c.sim.initial_state = course.start;
    c.sim.steps = 400;
    c.policy = PolicySpec::goal_seek(course.goal);
    c.seed = seed;
    c
}

#[test]
fn safeguarded_courses_stay_invariant() {
    let base = course_config(0);
    let props = base.runtime().unwrap().trigger_props;
    let jobs: Vec<EpisodeJob> = (0..24)
        .map(|seed| {
            let rt = course_config(seed).runtime_with(props.clone()).unwrap();
            EpisodeJob { env: rt.env, policy: rt.policy, stack: rt.stack, x0: rt.x0, steps: rt.steps, seed }
        })
        .collect();
    for (seed, trace) in run_batch(&jobs, Execution::Parallel).iter().enumerate() {
        assert!(trace.failure.is_none(), "seed {seed}: {:?}", trace.failure);
        let report = check_forward_invariance(trace);
        assert!(report.forward_invariant, "seed {seed} left the safe set at {:?}", report.first_violation_step);
        assert!(!report.assumption_flags.iter().any(|f| f == "never-entered"), "seed {seed}");
    }
}

#[test]
fn unguarded_head_on_approach_collides() {
    let mut c = RunConfig::second_order_default();
    c.obstacles = vec![Obstacle::fixed(3.0, 0.0, 0.3)];
    c.sim.safeguard = false;
    let trace = run(&c);
    assert_eq!(trace.interventions(), 0);
    assert!(trace.max_phi0().unwrap() > 0.0);
    assert!(!check_forward_invariance(&trace).forward_invariant);
}

#[test]
fn unsafe_starts_converge_within_the_bound() {
    let base = RunConfig::second_order_default();
    let props = base.runtime().unwrap().trigger_props.expect("trigger enabled");
    for seed in 0..8 {
        let course = unsafe_approach(seed, base.index.d_min, base.limits.v_max);
        let mut c = base.clone();
        c.obstacles = course.obstacles;
        c.sim.initial_state = course.start;
        c.sim.steps = 200;
        c.policy = PolicySpec::goal_seek(course.goal);
        c.seed = seed;
        let rt = c.runtime_with(Some(props.clone())).unwrap();
        let trace = run_episode(&rt.env, &rt.policy, &rt.stack, rt.x0, rt.steps, rt.seed);
        assert!(trace.records[0].phi > 0.0, "seed {seed} must start unsafe");
        let r = check_finite_time_convergence(&trace, &rt.env.params, &props, &c.ctrigger.constants);
        assert!(r.converged, "seed {seed}: {r:?}");
        assert!(r.convergence_step.is_some());
    }
}

#[test]
fn episodes_are_reproducible_and_execution_independent() {
    let mut c = course_config(3);
    c.issa = c.issa.clone().with_execution(Execution::Parallel);
    let a = run(&c);
    c.issa = c.issa.clone().with_execution(Execution::Sequential);
    let b = run(&c);
    assert_eq!(a, b);
    assert_eq!(run(&course_config(3)), run(&course_config(3)));
}

#[test]
fn zero_steps_yields_an_empty_trace() {
    let mut c = RunConfig::second_order_default();
    c.sim.steps = 0;
    let trace = run(&c);
    assert!(trace.is_empty());
    assert_eq!(trace.final_state, Some(c.sim.initial_state));
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
}

#[test]
fn trace_and_sidecar_round_trip() {
    let c = course_config(5);
    let trace = run(&c);
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let back = EpisodeTrace::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.records, trace.records);

    let side = Sidecar {
        config: c.clone(),
        trigger_props: c.runtime().unwrap().trigger_props,
        failure: trace.failure.clone(),
        flags: trace.flags.clone(),
    };
    assert_eq!(Sidecar::from_json(&side.to_json()).unwrap(), side);
}

#[test]
fn malformed_traces_are_rejected() {
    assert!(EpisodeTrace::read_csv("t,px\n0,1\n".as_bytes()).is_err());
    let trace = run(&RunConfig::toy(Mode::Discrete));
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap().replacen("SAFE", "MAYBE", 1);
    assert!(EpisodeTrace::read_csv(text.as_bytes()).is_err());
}

#[test]
fn disabled_stack_passes_nominal_controls_through() {
    let mut c = RunConfig::second_order_default();
    c.sim.steps = 20;
    let rt = c.runtime().unwrap();
    let trace =
        run_episode(&rt.env, &rt.policy, &SafeguardStack::disabled(), RobotState::new(0.0, 0.0, 0.0, 0.0), 20, 0);
    assert!(trace.records.iter().all(|r| r.u_applied == r.u_nominal));
}
