//! Closed-loop episodes: nominal policy, safeguard stack, dynamics.

use crate::ctrigger::{ctrigger, TriggerConstants, TriggerProps};
use crate::issa::{safeguard, IssaConfig, Phase};
use crate::model::{relative_kinematics, wrap_alpha, Dynamics, Model, Obstacle, RobotState};
use crate::par::{self, Execution};
use crate::rng::{SeedStreams, Stream};
use crate::safety_index::{phi0, IndexKind, Mode, SafeSetQuery, SafetyIndexParams, SafetyStatus, StatusRule};
use crate::{Error, Result};

use super::policy::NominalPolicy;
use super::trace::{AssumptionFlag, EpisodeFailure, EpisodeTrace, StepRecord};

/// Robot, obstacles and the safety index it is judged by.
#[derive(Debug, Clone)]
pub struct Env {
    pub model: Model,
    pub kind: IndexKind,
    pub params: SafetyIndexParams,
    /// Obstacles at t = 0.
    pub obstacles: Vec<Obstacle>,
    pub rule: StatusRule,
}

impl Env {
    pub fn world_dt(&self) -> f64 {
        self.rule.world_dt
    }

    pub fn obstacles_at(&self, t: usize) -> Vec<Obstacle> {
        let elapsed = t as f64 * self.world_dt();
        self.obstacles.iter().map(|o| o.advanced(elapsed)).collect()
    }

    pub fn query<'a>(&'a self, obstacles: &[Obstacle], x: &RobotState) -> Result<SafeSetQuery<'a, Model>> {
        SafeSetQuery::new(&self.model, &self.kind, &self.params, obstacles, x, self.rule)
    }

    pub fn phi(&self, x: &RobotState, obstacles: &[Obstacle]) -> Result<f64> {
        Ok(self.kind.evaluate(x, obstacles, &self.params)?.phi)
    }

    pub fn phi0(&self, x: &RobotState, obstacles: &[Obstacle]) -> f64 {
        phi0(x, obstacles, self.params.d_min)
    }
}

/// Trigger properties and thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerSetup {
    pub props: TriggerProps,
    pub constants: TriggerConstants,
}

/// What sits between the nominal policy and the plant.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeguardStack {
    /// `None` applies nominal controls unchanged.
    pub issa: Option<IssaConfig>,
    /// Only consulted in discrete mode.
    pub trigger: Option<TriggerSetup>,
}

impl SafeguardStack {
    pub fn issa(config: IssaConfig) -> Self {
        Self { issa: Some(config), trigger: None }
    }

    pub fn with_trigger(mut self, props: TriggerProps, constants: TriggerConstants) -> Self {
        self.trigger = Some(TriggerSetup { props, constants });
        self
    }

    pub fn disabled() -> Self {
        Self { issa: None, trigger: None }
    }
}

pub const FLAG_SPARSE_OBSTACLES: &str = "sparse-obstacles";
pub const FLAG_TURN_RATE: &str = "turn-rate";
pub const FLAG_TRIGGER_FAILURE: &str = "trigger-failure";

/// Runs `steps` steps from `x0`.
///
/// An ISSA error ends the episode; the trace keeps every completed step and
/// records the failing one. Trigger sampling failures keep the projected
/// control and are flagged.
pub fn run_episode(
    env: &Env,
    policy: &NominalPolicy,
    stack: &SafeguardStack,
    x0: RobotState,
    steps: usize,
    seed: u64,
) -> EpisodeTrace {
    let streams = SeedStreams::new(seed);
    let mut trace = EpisodeTrace::default();
    let mut x = x0;
    let mut last_alpha: Option<(usize, f64)> = None;
    let w_m = match &env.model {
        Model::SecondOrder(m) => Some(m.limits().w_m()),
        Model::Toy(_) => None,
    };

    for t in 0..steps {
        let obstacles = env.obstacles_at(t);
        match step(env, policy, stack, &streams, &obstacles, &x, t) {
            Ok((rec, next, flags)) => {
                trace.flags.extend(flags);
                monitor_turn_rate(env, &obstacles, &x, t, w_m, &mut last_alpha, &mut trace.flags);
                trace.records.push(rec);
                x = next;
            }
            Err(e) => {
                trace.failure = Some(EpisodeFailure { step: t, message: e.to_string() });
                break;
            }
        }
    }
    trace.final_state = Some(x);
    trace
}

fn monitor_turn_rate(
    env: &Env,
    obstacles: &[Obstacle],
    x: &RobotState,
    t: usize,
    w_m: Option<f64>,
    last: &mut Option<(usize, f64)>,
    flags: &mut Vec<AssumptionFlag>,
) {
    let (Some(w_m), Ok(v)) = (w_m, env.kind.evaluate(x, obstacles, &env.params)) else {
        return;
    };
    let Some(i) = v.critical else {
        *last = None;
        return;
    };
    let alpha = match relative_kinematics(x, &obstacles[i]) {
        Ok(rk) => rk.alpha,
        Err(_) => return,
    };
    if let Some((j, prev)) = *last {
        if j == i && v.phi > 0.0 && (wrap_alpha(alpha - prev) / env.world_dt()).abs() > w_m {
            flags.push(AssumptionFlag { step: t, kind: FLAG_TURN_RATE.into() });
        }
    }
    *last = Some((i, alpha));
}

type StepOutput = (StepRecord, RobotState, Vec<AssumptionFlag>);

fn step(
    env: &Env,
    policy: &NominalPolicy,
    stack: &SafeguardStack,
    streams: &SeedStreams,
    obstacles: &[Obstacle],
    x: &RobotState,
    t: usize,
) -> Result<StepOutput> {
    let q = env.query(obstacles, x)?;
    let u_nom = policy.control(x);
    let mut flags = Vec::new();

    let (mut u_app, phase, mut queries, nominal_status) = match &stack.issa {
        Some(cfg) => {
            let r = safeguard(&q, &u_nom, cfg, streams.seed(Stream::Directions, t as u64))?;
            let status = if r.phase == Phase::PassThrough { SafetyStatus::Safe } else { SafetyStatus::Unsafe };
            (r.control, r.phase, r.queries, status)
        }
        None => {
            let status = if q.has_obstacles() { q.status(&u_nom)? } else { SafetyStatus::Safe };
            (u_nom.clone(), Phase::PassThrough, 0, status)
        }
    };

    let mut trigger_fired = false;
    if let (Some(tr), Mode::Discrete, Some(_)) = (&stack.trigger, env.rule.mode, &stack.issa) {
        if q.critical().is_some() {
            let band = -tr.props.delta_phi_max;
            let critical_count = env.kind.components(x, obstacles, &env.params)?.iter().filter(|p| **p >= band).count();
            if critical_count > 1 {
                flags.push(AssumptionFlag { step: t, kind: FLAG_SPARSE_OBSTACLES.into() });
            }
        }
        let mut rng = streams.rng(Stream::Trigger, t as u64);
        match ctrigger(&q, obstacles, &u_app, &tr.props, &tr.constants, &mut rng) {
            Ok(out) => {
                queries += out.draws;
                if out.fired() {
                    trigger_fired = true;
                    u_app = out.control;
                }
            }
            Err(Error::TriggerFailure { draws }) => {
                queries += draws;
                flags.push(AssumptionFlag { step: t, kind: FLAG_TRIGGER_FAILURE.into() });
            }
            Err(e) => return Err(e),
        }
    }

    let next = env.model.eval(x, &u_app, env.world_dt())?;
    let rec = StepRecord {
        t,
        state: *x,
        u_nominal: u_nom,
        u_applied: u_app,
        phi: q.phi(),
        phi0: env.phi0(x, obstacles),
        nominal_status,
        phase,
        trigger_fired,
        queries,
    };
    Ok((rec, next, flags))
}

/// One independent episode in a batch.
#[derive(Debug, Clone)]
pub struct EpisodeJob {
    pub env: Env,
    pub policy: NominalPolicy,
    pub stack: SafeguardStack,
    pub x0: RobotState,
    pub steps: usize,
    pub seed: u64,
}

/// Runs jobs, possibly concurrently. Output order follows input order.
pub fn run_batch(jobs: &[EpisodeJob], execution: Execution) -> Vec<EpisodeTrace> {
    par::map_slice(execution, jobs, |_, j| run_episode(&j.env, &j.policy, &j.stack, j.x0, j.steps, j.seed))
}
