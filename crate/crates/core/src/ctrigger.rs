//! Convergence trigger and the offline estimates it relies on.
//!
//! When the robot is unsafe but moving almost tangentially to the critical
//! obstacle, the decay `η₀|cos α|` nearly vanishes and φ can stall. The
//! trigger replaces the projected control by a SAFE control that either
//! changes speed (when slow) or turns fast enough to rotate `α` away from
//! the tangent.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{relative_kinematics, wrap_alpha, ControlVector, Dynamics, Obstacle, RobotState, SystemLimits};
use crate::par::{self, Execution};
use crate::safety_index::{sample_control, EstimationSpec, IndexKind, SafeSetQuery, SafetyIndexParams, SafetyStatus};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerProps {
    pub w_trigger: f64,
    pub delta_min: f64,
    pub delta_phi_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub v_max: f64,
}

impl TriggerProps {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_trigger > 0.0 && self.w_trigger.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "w_trigger must be positive, got {}; the convergence trigger needs turning authority",
                self.w_trigger
            )));
        }
        if !(self.delta_min > 0.0 && self.delta_min.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta_min must be positive, got {}", self.delta_min)));
        }
        if !(self.delta_phi_max >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "delta_phi_max must be non-negative, got {}",
                self.delta_phi_max
            )));
        }
        if !(self.a_min < 0.0 && self.a_max > 0.0 && self.v_max > 0.0) {
            return Err(Error::InvalidConfig("trigger needs a_min < 0 < a_max and v_max > 0".into()));
        }
        Ok(())
    }

    /// `min{−a_min, a_max}`.
    pub fn a_sym(&self) -> f64 {
        (-self.a_min).min(self.a_max)
    }

    /// Upper bound on the steps needed to return to the safe set from `phi0 > 0`.
    pub fn convergence_bound(&self, phi0: f64, eta0: f64, constants: &TriggerConstants) -> f64 {
        if phi0 <= 0.0 {
            return 0.0;
        }
        let decay = eta0 * constants.cos_guard.min(self.delta_min / constants.delta_divisor);
        phi0 / decay * (self.v_max / self.a_sym() + 1.0)
    }
}

/// Branch thresholds. The defaults follow the usual choice of halving
/// every bound; they are exposed for experimentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerConstants {
    pub cos_guard: f64,
    pub delta_divisor: f64,
    pub speed_divisor: f64,
    pub accel_divisor: f64,
    pub turn_divisor: f64,
    pub budget: usize,
}

impl Default for TriggerConstants {
    fn default() -> Self {
        Self {
            cos_guard: 3f64.sqrt() / 2.0,
            delta_divisor: 2.0,
            speed_divisor: 2.0,
            accel_divisor: 2.0,
            turn_divisor: 2.0,
            budget: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerBranch {
    /// Guard not met; control returned unchanged.
    Idle,
    /// Slow robot: change speed away from the obstacle.
    Accelerate,
    /// Fast robot: turn so that `α` moves away from the tangent.
    Turn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerOutcome {
    pub control: ControlVector,
    pub branch: TriggerBranch,
    pub draws: usize,
}

impl TriggerOutcome {
    pub fn fired(&self) -> bool {
        self.branch != TriggerBranch::Idle
    }
}

/// Whether the trigger applies at the query's state.
pub fn guard_active<D: Dynamics + ?Sized>(
    query: &SafeSetQuery<'_, D>,
    props: &TriggerProps,
    constants: &TriggerConstants,
) -> bool {
    query.critical().is_some()
        && query.phi() > 0.0
        && query.alpha().cos().abs() < constants.cos_guard.min(props.delta_min / constants.delta_divisor)
}

/// Measured obstacle-frame rate of `α` over one status step.
fn alpha_rate(state: &RobotState, next: &RobotState, obs: &Obstacle, next_obs: &Obstacle, dt: f64) -> Result<f64> {
    let a0 = relative_kinematics(state, obs)?.alpha;
    let a1 = relative_kinematics(next, next_obs)?.alpha;
    Ok(wrap_alpha(a1 - a0) / dt)
}

/// Filters the projected control `u`.
///
/// `obstacles` must be the obstacle list the query was built with. Each draw
/// costs one dynamics evaluation.
pub fn ctrigger<D: Dynamics + ?Sized>(
    query: &SafeSetQuery<'_, D>,
    obstacles: &[Obstacle],
    u: &ControlVector,
    props: &TriggerProps,
    constants: &TriggerConstants,
    rng: &mut impl Rng,
) -> Result<TriggerOutcome> {
    if !guard_active(query, props, constants) {
        return Ok(TriggerOutcome { control: u.clone(), branch: TriggerBranch::Idle, draws: 0 });
    }
    let crit = query.critical().expect("guard implies a critical obstacle");
    let x = query.state();
    let bx = query.dynamics().control_box();
    let (mut lo, mut hi) = (bx.lo().to_vec(), bx.hi().to_vec());
    let cos_a = query.alpha().cos();

    let branch = if x.v.abs() < props.v_max / constants.speed_divisor {
        let a_req = props.a_sym() / constants.accel_divisor;
        if cos_a < 0.0 {
            lo[0] = lo[0].max(a_req);
        } else {
            hi[0] = hi[0].min(-a_req);
        }
        if lo[0] > hi[0] {
            return Err(Error::TriggerFailure { draws: 0 });
        }
        TriggerBranch::Accelerate
    } else {
        TriggerBranch::Turn
    };

    let w_req = props.w_trigger / constants.turn_divisor;
    let obs = &obstacles[crit];
    let next_obs = &query.next_obstacles()[crit];
    for draw in 1..=constants.budget {
        let cand = sample_control(rng, &lo, &hi);
        let eval = query.evaluate(&cand)?;
        if eval.status != SafetyStatus::Safe {
            continue;
        }
        if branch == TriggerBranch::Turn
            && alpha_rate(x, &eval.next_state, obs, next_obs, query.status_dt())?.abs() < w_req
        {
            continue;
        }
        return Ok(TriggerOutcome { control: cand, branch, draws: draw });
    }
    Err(Error::TriggerFailure { draws: constants.budget })
}

/// Deterministic state and control grid for the trigger estimators.
///
/// States place a single static obstacle at `range` from the robot at
/// `angles` evenly spaced bearings; speeds are `speed_slices` values per
/// sign; controls form a `controls_per_dim`-per-dimension lattice that
/// includes the box corners.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerGrid {
    pub range: f64,
    pub speed_slices: usize,
    pub angles: usize,
    pub controls_per_dim: usize,
    pub execution: Execution,
}

impl TriggerGrid {
    pub fn new(range: f64) -> Self {
        Self { range, speed_slices: 6, angles: 72, controls_per_dim: 21, execution: Execution::default() }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn controls(&self, lo: &[f64], hi: &[f64]) -> Vec<ControlVector> {
        let m = self.controls_per_dim.max(2);
        let dim = lo.len();
        let total = m.pow(dim as u32);
        (0..total)
            .map(|flat| {
                let mut rest = flat;
                let mut u = vec![0.0; dim];
                for d in (0..dim).rev() {
                    let j = rest % m;
                    rest /= m;
                    u[d] = lo[d] + (hi[d] - lo[d]) * j as f64 / (m - 1) as f64;
                }
                ControlVector(u)
            })
            .collect()
    }

    fn speeds(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = self.speed_slices.max(1);
        let mags: Vec<f64> =
            (0..n).map(|i| if n == 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect();
        mags.iter().flat_map(|m| [*m, -*m]).collect()
    }

    fn alphas(&self) -> Vec<f64> {
        (0..self.angles).map(|j| -PI + 2.0 * PI * j as f64 / self.angles as f64).collect()
    }

    fn state_for(&self, alpha: f64, v: f64) -> (RobotState, Obstacle) {
        let obs = Obstacle::fixed(self.range * alpha.cos(), self.range * alpha.sin(), 0.1);
        (RobotState::new(0.0, 0.0, 0.0, v), obs)
    }
}

/// Per-state sup over controls of the measured `|α̇|`, collected for every
/// state on the grid.
fn sup_alpha_rates<D: Dynamics + ?Sized>(
    dynamics: &D,
    dt: f64,
    grid: &TriggerGrid,
    speeds: &[f64],
) -> Result<Vec<f64>> {
    let bx = dynamics.control_box();
    let controls = grid.controls(bx.lo(), bx.hi());
    let states: Vec<(f64, f64)> = speeds.iter().flat_map(|v| grid.alphas().into_iter().map(move |a| (a, *v))).collect();
    par::map_slice(grid.execution, &states, |_, &(alpha, v)| {
        let (x, obs) = grid.state_for(alpha, v);
        let mut sup = 0.0_f64;
        for u in &controls {
            let y = dynamics.eval(&x, u, dt)?;
            sup = sup.max(alpha_rate(&x, &y, &obs, &obs, dt)?.abs());
        }
        Ok(sup)
    })
    .into_iter()
    .collect()
}

/// `inf` over states with `|v| ≥ v_max/2` of `sup_u |α̇|`.
pub fn estimate_w_trigger<D: Dynamics + ?Sized>(
    dynamics: &D,
    limits: &SystemLimits,
    grid: &TriggerGrid,
) -> Result<f64> {
    let speeds = grid.speeds(limits.v_max / 2.0, limits.v_max);
    let sups = sup_alpha_rates(dynamics, limits.dt, grid, &speeds)?;
    Ok(sups.into_iter().fold(f64::INFINITY, f64::min))
}

pub const DELTA_MIN_SAFETY_FACTOR: f64 = 0.9;

/// Smallest one-step `|Δcos α|` over states with `|cos α| ≤ √3/2` and
/// controls whose measured `|α̇|` is at least `w_trigger/2`, shrunk by
/// [`DELTA_MIN_SAFETY_FACTOR`].
pub fn estimate_delta_min<D: Dynamics + ?Sized>(
    dynamics: &D,
    limits: &SystemLimits,
    w_trigger: f64,
    grid: &TriggerGrid,
) -> Result<f64> {
    let constants = TriggerConstants::default();
    let dt = limits.dt;
    let bx = dynamics.control_box();
    let controls = grid.controls(bx.lo(), bx.hi());
    let speeds = grid.speeds(0.0, limits.v_max);
    let states: Vec<(f64, f64)> = speeds
        .iter()
        .flat_map(|v| grid.alphas().into_iter().map(move |a| (a, *v)))
        .filter(|(a, _)| a.cos().abs() <= constants.cos_guard)
        .collect();
    let mins: Vec<Option<f64>> = par::map_slice(grid.execution, &states, |_, &(alpha, v)| {
        let (x, obs) = grid.state_for(alpha, v);
        let c0 = relative_kinematics(&x, &obs)?.alpha.cos();
        let mut best: Option<f64> = None;
        for u in &controls {
            let y = dynamics.eval(&x, u, dt)?;
            let a1 = relative_kinematics(&y, &obs)?.alpha;
            if (wrap_alpha(a1 - alpha) / dt).abs() >= w_trigger / constants.turn_divisor {
                let delta = (a1.cos() - c0).abs();
                best = Some(best.map_or(delta, |b: f64| b.min(delta)));
            }
        }
        Ok(best)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let min = mins.into_iter().flatten().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::Estimation("no grid state reaches the required turning rate".into()));
    }
    Ok(min * DELTA_MIN_SAFETY_FACTOR)
}

pub const DELTA_PHI_SAFETY_FACTOR: f64 = 1.1;

/// Largest one-step `|Δφ|` over sampled state and control pairs, enlarged
/// by [`DELTA_PHI_SAFETY_FACTOR`].
pub fn estimate_delta_phi_max<D: Dynamics + ?Sized>(
    dynamics: &D,
    dt: f64,
    kind: &IndexKind,
    params: &SafetyIndexParams,
    spec: &EstimationSpec,
) -> Result<f64> {
    spec.validate()?;
    let obs = [Obstacle::fixed(0.0, 0.0, 0.1)];
    let bx = dynamics.control_box();
    let deltas = spec.sample_map(dynamics.has_speed_state(), |rng, x| {
        let u = sample_control(rng, bx.lo(), bx.hi());
        let y = dynamics.eval(&x, &u, dt).ok()?;
        let p0 = kind.evaluate(&x, &obs, params).ok()?.phi;
        let p1 = kind.evaluate(&y, &obs, params).ok()?.phi;
        Some((p1 - p0).abs())
    });
    Ok(deltas.into_iter().fold(0.0, f64::max) * DELTA_PHI_SAFETY_FACTOR)
}

/// Estimates every trigger property for a model.
pub fn estimate_props<D: Dynamics + ?Sized>(
    dynamics: &D,
    limits: &SystemLimits,
    kind: &IndexKind,
    params: &SafetyIndexParams,
    seed: u64,
    execution: Execution,
) -> Result<TriggerProps> {
    let grid = TriggerGrid::new(2.0 * params.d_min).with_execution(execution);
    let w_trigger = estimate_w_trigger(dynamics, limits, &grid)?;
    let delta_min = estimate_delta_min(dynamics, limits, w_trigger, &grid)?;
    let spec = EstimationSpec::new((params.d_min, 4.0 * params.d_min), limits.v_max, seed).with_execution(execution);
    let delta_phi_max = estimate_delta_phi_max(dynamics, limits.dt, kind, params, &spec)?;
    Ok(TriggerProps {
        w_trigger,
        delta_min,
        delta_phi_max,
        a_min: limits.a_min,
        a_max: limits.a_max,
        v_max: limits.v_max,
    })
}
