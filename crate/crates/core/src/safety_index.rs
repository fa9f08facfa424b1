//! Safety specification, the energy-function safety index, design-rule
//! validators and the one-step safety status test.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{relative_kinematics, ControlVector, Dynamics, Obstacle, RobotState};
use crate::par::{self, Execution};
use crate::rng::{SeedStreams, Stream};
use crate::{Error, Result, SystemLimits};

/// Value of φ and φ₀ when there are no obstacles. Finite so that traces
/// never contain infinities.
pub const EMPTY_SENTINEL: f64 = -1e18;

/// Parameters of `φ_i = σ + d_minⁿ − d_iⁿ − k·ḋ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyIndexParams {
    pub sigma: f64,
    pub n: u32,
    pub k: f64,
    pub eta0: f64,
    pub d_min: f64,
    #[serde(default)]
    pub sigma_star: f64,
}

impl SafetyIndexParams {
    pub fn new(sigma: f64, n: u32, k: f64, eta0: f64, d_min: f64) -> Self {
        Self { sigma, n, k, eta0, d_min, sigma_star: 0.0 }
    }

    pub fn with_sigma_star(mut self, sigma_star: f64) -> Self {
        self.sigma_star = sigma_star;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    /// Range checks. `k = 0` is allowed so that the distance-only index can
    /// be expressed; the design rules reject it.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n == 0 {
            return bad("safety index exponent n must be a positive integer".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return bad(format!("k must be non-negative, got {}", self.k));
        }
        if !(self.eta0 >= 0.0 && self.eta0.is_finite()) {
            return bad(format!("eta0 must be non-negative, got {}", self.eta0));
        }
        if !(self.d_min > 0.0 && self.d_min.is_finite()) {
            return bad(format!("d_min must be positive, got {}", self.d_min));
        }
        if !(self.sigma_star >= 0.0 && self.sigma_star.is_finite()) {
            return bad(format!("sigma_star must be non-negative, got {}", self.sigma_star));
        }
        if self.sigma_star > 0.0 {
            let n = self.n as f64;
            let reach = (self.sigma + self.d_min.powf(n)).powf(1.0 / n);
            if reach <= self.d_min + self.sigma_star {
                return bad(format!(
                    "sigma_star = {} is too large: (sigma + d_min^n)^(1/n) = {reach} must exceed d_min + sigma_star",
                    self.sigma_star
                ));
            }
        }
        Ok(())
    }

    /// Index of a single obstacle from its distance and range rate.
    pub fn phi_i(&self, d: f64, d_dot: f64) -> f64 {
        let n = self.n as i32;
        self.sigma + self.d_min.powi(n) - d.powi(n) - self.k * d_dot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SafetyStatus {
    Safe,
    Unsafe,
}

impl SafetyStatus {
    pub fn is_safe(self) -> bool {
        self == SafetyStatus::Safe
    }

    pub fn flipped(self) -> Self {
        match self {
            SafetyStatus::Safe => SafetyStatus::Unsafe,
            SafetyStatus::Unsafe => SafetyStatus::Safe,
        }
    }
}

impl fmt::Display for SafetyStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SafetyStatus::Safe => "SAFE",
            SafetyStatus::Unsafe => "UNSAFE",
        })
    }
}

/// `max_i (d_min − d_i)`, or [`EMPTY_SENTINEL`] with no obstacles.
pub fn phi0(state: &RobotState, obstacles: &[Obstacle], d_min: f64) -> f64 {
    obstacles.iter().map(|o| d_min - (o.cx - state.px).hypot(o.cy - state.py)).fold(EMPTY_SENTINEL, f64::max)
}

/// `max_i φ_i`, or [`EMPTY_SENTINEL`] with no obstacles.
pub fn phi(state: &RobotState, obstacles: &[Obstacle], params: &SafetyIndexParams) -> Result<f64> {
    Ok(IndexKind::Energy.evaluate(state, obstacles, params)?.phi)
}

/// Perpendicular-line index of the toy problem:
/// `(r+R)² − ((x₀−x)·sinθ − (y₀−y)·cosθ)²`.
pub fn toy_phi(state: &RobotState, obs: &Obstacle, r: f64, big_r: f64) -> f64 {
    let (s, c) = state.theta.sin_cos();
    let lateral = (obs.cx - state.px) * s - (obs.cy - state.py) * c;
    (r + big_r).powi(2) - lateral * lateral
}

/// `η₀·|cos α|`.
pub fn eta_online(eta0: f64, alpha: f64) -> f64 {
    eta0 * alpha.cos().abs()
}

/// Which index family is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IndexKind {
    /// `σ + d_minⁿ − dⁿ − k·ḋ`, maximized over obstacles.
    #[default]
    Energy,
    /// Perpendicular-line index with robot radius `r` and obstacle radius `big_r`.
    Toy { r: f64, big_r: f64 },
}

/// φ at a state together with the obstacle that attains the maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexValue {
    pub phi: f64,
    pub critical: Option<usize>,
    /// `alpha` of the critical obstacle; 0 when there is none.
    pub alpha: f64,
}

impl IndexKind {
    pub fn components(
        &self,
        state: &RobotState,
        obstacles: &[Obstacle],
        params: &SafetyIndexParams,
    ) -> Result<Vec<f64>> {
        obstacles
            .iter()
            .map(|o| match self {
                IndexKind::Energy => {
                    let rk = relative_kinematics(state, o)?;
                    Ok(params.phi_i(rk.d, rk.d_dot))
                }
                IndexKind::Toy { r, big_r } => Ok(toy_phi(state, o, *r, *big_r)),
            })
            .collect()
    }

    pub fn evaluate(
        &self,
        state: &RobotState,
        obstacles: &[Obstacle],
        params: &SafetyIndexParams,
    ) -> Result<IndexValue> {
        let mut best = IndexValue { phi: EMPTY_SENTINEL, critical: None, alpha: 0.0 };
        for (i, p) in self.components(state, obstacles, params)?.into_iter().enumerate() {
            if best.critical.is_none() || p > best.phi {
                best.phi = p;
                best.critical = Some(i);
            }
        }
        if let Some(i) = best.critical {
            best.alpha = relative_kinematics(state, &obstacles[i])?.alpha;
        }
        Ok(best)
    }
}

/// How the decay η, the margin and the status time step are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// η = 0, no margin.
    Continuous,
    /// η = η₀|cos α| and margin σ*.
    #[default]
    Discrete,
    /// Status evaluated over one short micro-step; η = η₀|cos α| scaled by
    /// the ratio of micro-step to world step, no margin.
    ContinuousApprox,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Continuous => "continuous",
            Mode::Discrete => "discrete",
            Mode::ContinuousApprox => "continuous_approx",
        })
    }
}

/// Mode plus the two time steps it may refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatusRule {
    pub mode: Mode,
    pub world_dt: f64,
    pub micro_dt: f64,
}

pub const DEFAULT_MICRO_DT: f64 = 1e-5;

impl StatusRule {
    pub fn new(mode: Mode, world_dt: f64) -> Self {
        Self { mode, world_dt, micro_dt: DEFAULT_MICRO_DT }
    }

    pub fn discrete(world_dt: f64) -> Self {
        Self::new(Mode::Discrete, world_dt)
    }

    pub fn with_micro_dt(mut self, micro_dt: f64) -> Self {
        self.micro_dt = micro_dt;
        self
    }

    /// Time step of the single dynamics query behind a status test.
    pub fn status_dt(&self) -> f64 {
        match self.mode {
            Mode::ContinuousApprox => self.micro_dt,
            _ => self.world_dt,
        }
    }

    pub fn eta(&self, eta0: f64, alpha: f64) -> f64 {
        match self.mode {
            Mode::Continuous => 0.0,
            Mode::Discrete => eta_online(eta0, alpha),
            Mode::ContinuousApprox => eta_online(eta0, alpha) * self.micro_dt / self.world_dt,
        }
    }

    pub fn margin(&self, params: &SafetyIndexParams) -> f64 {
        match self.mode {
            Mode::Discrete => params.sigma_star,
            _ => 0.0,
        }
    }
}

/// Result of one status test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatusEval {
    pub status: SafetyStatus,
    pub next_phi: f64,
    pub next_state: RobotState,
}

/// Safety status tests at a fixed state.
///
/// Everything that depends only on the state (φ(x), η, the threshold, the
/// propagated obstacles) is computed once, so each [`SafeSetQuery::status`]
/// costs exactly one dynamics evaluation.
pub struct SafeSetQuery<'a, D: Dynamics + ?Sized> {
    dynamics: &'a D,
    kind: &'a IndexKind,
    params: &'a SafetyIndexParams,
    state: RobotState,
    next_obstacles: Vec<Obstacle>,
    status_dt: f64,
    current: IndexValue,
    eta: f64,
    threshold: f64,
}

impl<'a, D: Dynamics + ?Sized> SafeSetQuery<'a, D> {
    pub fn new(
        dynamics: &'a D,
        kind: &'a IndexKind,
        params: &'a SafetyIndexParams,
        obstacles: &[Obstacle],
        state: &RobotState,
        rule: StatusRule,
    ) -> Result<Self> {
        let current = kind.evaluate(state, obstacles, params)?;
        let eta = if current.critical.is_some() { rule.eta(params.eta0, current.alpha) } else { 0.0 };
        let threshold = (current.phi - eta).max(0.0) - rule.margin(params);
        let status_dt = rule.status_dt();
        Ok(Self {
            dynamics,
            kind,
            params,
            state: *state,
            next_obstacles: obstacles.iter().map(|o| o.advanced(status_dt)).collect(),
            status_dt,
            current,
            eta,
            threshold,
        })
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn dynamics(&self) -> &'a D {
        self.dynamics
    }

    pub fn phi(&self) -> f64 {
        self.current.phi
    }

    pub fn alpha(&self) -> f64 {
        self.current.alpha
    }

    pub fn critical(&self) -> Option<usize> {
        self.current.critical
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Largest admissible next-step φ.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Obstacles propagated over one status step.
    pub fn next_obstacles(&self) -> &[Obstacle] {
        &self.next_obstacles
    }

    pub fn status_dt(&self) -> f64 {
        self.status_dt
    }

    pub fn has_obstacles(&self) -> bool {
        !self.next_obstacles.is_empty()
    }

    pub fn evaluate(&self, u: &ControlVector) -> Result<StatusEval> {
        let next_state = self.dynamics.eval(&self.state, u, self.status_dt)?;
        let next_phi = self.kind.evaluate(&next_state, &self.next_obstacles, self.params)?.phi;
        let status = if next_phi <= self.threshold { SafetyStatus::Safe } else { SafetyStatus::Unsafe };
        Ok(StatusEval { status, next_phi, next_state })
    }

    pub fn status(&self, u: &ControlVector) -> Result<SafetyStatus> {
        Ok(self.evaluate(u)?.status)
    }
}

/// One-off status test. Prefer [`SafeSetQuery`] when testing many controls
/// at the same state.
pub fn safety_status<D: Dynamics + ?Sized>(
    x: &RobotState,
    u: &ControlVector,
    dynamics: &D,
    kind: &IndexKind,
    params: &SafetyIndexParams,
    obstacles: &[Obstacle],
    rule: StatusRule,
) -> Result<SafetyStatus> {
    SafeSetQuery::new(dynamics, kind, params, obstacles, x, rule)?.status(u)
}

/// Named clauses of the design rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// `n(σ + d_minⁿ + k·v_max)^((n−1)/n)/k ≤ −a_min/v_max`.
    ContinuousGain,
    /// `σ > −ḋ*_min·dt`.
    DiscreteMargin,
    /// `(η₀/dt + v_max)/k ≤ min{−a_min, a_max}`.
    DiscreteGain,
    /// `a_min/2 + v_max/(4dt) > (a_m + v_max·w_m)(−a_min/v_max + w_m)·dt`.
    DiscreteTimestep,
}

impl Clause {
    pub fn name(self) -> &'static str {
        match self {
            Clause::ContinuousGain => "continuous-gain",
            Clause::DiscreteMargin => "discrete-margin",
            Clause::DiscreteGain => "discrete-gain",
            Clause::DiscreteTimestep => "discrete-timestep",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Clause::ContinuousGain => "n*(sigma + d_min^n + k*v_max)^((n-1)/n)/k <= -a_min/v_max",
            Clause::DiscreteMargin => "sigma > -d_dot*_min*dt",
            Clause::DiscreteGain => "(eta0/dt + v_max)/k <= min(-a_min, a_max)",
            Clause::DiscreteTimestep => "a_min/2 + v_max/(4*dt) > (a_m + v_max*w_m)*(-a_min/v_max + w_m)*dt",
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one clause. `slack` is positive when the clause holds with room.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseReport {
    pub clause: Clause,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleReport {
    pub clauses: Vec<ClauseReport>,
}

impl RuleReport {
    pub fn holds(&self) -> bool {
        self.clauses.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ClauseReport> {
        self.clauses.iter().filter(|c| !c.holds)
    }

    pub fn clause(&self, which: Clause) -> Option<&ClauseReport> {
        self.clauses.iter().find(|c| c.clause == which)
    }
}

fn continuous_lhs(n: u32, sigma: f64, d_min: f64, k: f64, v_max: f64) -> f64 {
    let nf = n as f64;
    nf * (sigma + d_min.powi(n as i32) + k * v_max).powf((nf - 1.0) / nf) / k
}

pub fn validate_continuous_rule(params: &SafetyIndexParams, limits: &SystemLimits) -> ClauseReport {
    let lhs = continuous_lhs(params.n, params.sigma, params.d_min, params.k, limits.v_max);
    let rhs = -limits.a_min / limits.v_max;
    let note = (limits.a_min >= 0.0).then(|| "no braking authority: a_min = 0".to_string());
    ClauseReport {
        clause: Clause::ContinuousGain,
        lhs,
        rhs,
        slack: rhs - lhs,
        holds: note.is_none() && lhs <= rhs,
        note,
    }
}

pub fn validate_discrete_rule(
    params: &SafetyIndexParams,
    limits: &SystemLimits,
    d_dot_star_min: f64,
) -> Result<RuleReport> {
    if params.n != 1 {
        return Err(Error::UnsupportedExponent(params.n));
    }
    let margin_rhs = -d_dot_star_min * limits.dt;
    let gain_lhs = (params.eta0 / limits.dt + limits.v_max) / params.k;
    let gain_rhs = limits.a_sym();
    Ok(RuleReport {
        clauses: vec![
            ClauseReport {
                clause: Clause::DiscreteMargin,
                lhs: params.sigma,
                rhs: margin_rhs,
                slack: params.sigma - margin_rhs,
                holds: params.sigma > margin_rhs,
                note: None,
            },
            ClauseReport {
                clause: Clause::DiscreteGain,
                lhs: gain_lhs,
                rhs: gain_rhs,
                slack: gain_rhs - gain_lhs,
                holds: gain_lhs <= gain_rhs,
                note: (params.k == 0.0).then(|| "k = 0 leaves the gain clause unbounded".to_string()),
            },
        ],
    })
}

/// Smallest `k` passing the discrete gain clause.
pub fn discrete_k_min(eta0: f64, limits: &SystemLimits) -> f64 {
    (eta0 / limits.dt + limits.v_max) / limits.a_sym()
}

pub fn validate_discrete_assumptions(limits: &SystemLimits) -> ClauseReport {
    let lhs = limits.a_min / 2.0 + limits.v_max / (4.0 * limits.dt);
    let rhs = (limits.a_m() + limits.v_max * limits.w_m()) * (-limits.a_min / limits.v_max + limits.w_m()) * limits.dt;
    ClauseReport { clause: Clause::DiscreteTimestep, lhs, rhs, slack: lhs - rhs, holds: lhs > rhs, note: None }
}

pub const DEFAULT_K_CAP: f64 = 1e6;
const K_REL_TOL: f64 = 1e-9;

/// Smallest `k` satisfying the continuous gain clause.
pub fn synthesize_k(limits: &SystemLimits, n: u32, sigma: f64, d_min: f64) -> Result<f64> {
    synthesize_k_capped(limits, n, sigma, d_min, DEFAULT_K_CAP)
}

pub fn synthesize_k_capped(limits: &SystemLimits, n: u32, sigma: f64, d_min: f64, cap: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be positive".into()));
    }
    if limits.a_min >= 0.0 || !(limits.v_max > 0.0) {
        return Err(Error::InfeasibleGain { cap });
    }
    let v_max = limits.v_max;
    let rhs = -limits.a_min / v_max;
    if n == 1 {
        let k = v_max / -limits.a_min;
        return if k <= cap { Ok(k) } else { Err(Error::InfeasibleGain { cap }) };
    }
    let excess = |k: f64| continuous_lhs(n, sigma, d_min, k, v_max) - rhs;

    let mut hi = 1.0_f64.min(cap);
    while excess(hi) > 0.0 {
        if hi >= cap {
            return Err(Error::InfeasibleGain { cap });
        }
        hi = (hi * 2.0).min(cap);
    }
    let mut lo = 0.0;
    while hi - lo > K_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The bracket is only meaningful if the clause is monotone around the root.
    let probe = [0.5 * hi, 0.9 * hi, hi, 1.1 * hi, 2.0 * hi];
    if probe.windows(2).any(|w| excess(w[1]) >= excess(w[0])) {
        return Err(Error::Estimation(format!("continuous gain clause is not decreasing in k near k = {hi}")));
    }
    Ok(hi)
}

/// Region and budget for Monte Carlo estimators.
///
/// Robot states are drawn around a single static obstacle at the origin at
/// distances in `d_range`, with uniform bearing, heading and (when the model
/// has a speed state) signed speed in `speed_range`. Controls are uniform in
/// the control box.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationSpec {
    pub samples: usize,
    pub d_range: (f64, f64),
    pub speed_range: (f64, f64),
    pub seed: u64,
    pub execution: Execution,
}

pub const ESTIMATION_SAMPLES: usize = 100_000;
const ESTIMATION_CHUNK: usize = 4096;

impl EstimationSpec {
    pub fn new(d_range: (f64, f64), v_max: f64, seed: u64) -> Self {
        Self {
            samples: ESTIMATION_SAMPLES,
            d_range,
            speed_range: (-v_max, v_max),
            seed,
            execution: Execution::default(),
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_speed_range(mut self, lo: f64, hi: f64) -> Self {
        self.speed_range = (lo, hi);
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Runs `f` on every sample in fixed-size chunks, each with its own
    /// substream, so results do not depend on the execution policy.
    pub(crate) fn sample_map<T, F>(&self, dynamics_has_speed: bool, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut rand_chacha::ChaCha8Rng, RobotState) -> Option<T> + Sync,
    {
        let streams = SeedStreams::new(self.seed);
        let chunks = self.samples.div_ceil(ESTIMATION_CHUNK);
        par::map_range(self.execution, chunks, |c| {
            let mut rng = streams.rng(Stream::Estimation, c as u64);
            let count = ESTIMATION_CHUNK.min(self.samples - c * ESTIMATION_CHUNK);
            (0..count)
                .filter_map(|_| {
                    let x = self.draw_state(&mut rng, dynamics_has_speed);
                    f(&mut rng, x)
                })
                .collect::<Vec<T>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    fn draw_state(&self, rng: &mut impl Rng, has_speed: bool) -> RobotState {
        use std::f64::consts::PI;
        let (lo, hi) = self.d_range;
        let d = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let bearing = rng.random_range(-PI..PI);
        let theta = rng.random_range(-PI..PI);
        let v = if has_speed {
            let (a, b) = self.speed_range;
            if b > a {
                rng.random_range(a..=b)
            } else {
                a
            }
        } else {
            0.0
        };
        // robot placed so that the obstacle at the origin lies at `bearing` from it
        RobotState::new(-d * bearing.cos(), -d * bearing.sin(), theta, v)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Estimation("estimation needs at least one sample".into()));
        }
        if !(self.d_range.0 > 0.0 && self.d_range.1 >= self.d_range.0) {
            return Err(Error::Estimation(format!("invalid distance range {:?}", self.d_range)));
        }
        Ok(())
    }
}

/// Uniform draw from the control box.
pub fn sample_control(rng: &mut impl Rng, lo: &[f64], hi: &[f64]) -> ControlVector {
    ControlVector(lo.iter().zip(hi).map(|(l, h)| if h > l { rng.random_range(*l..=*h) } else { *l }).collect())
}

pub const D_DOT_SAFETY_FACTOR: f64 = 1.1;

/// Most negative one-step finite-difference range rate `(d' − d)/dt`,
/// enlarged by [`D_DOT_SAFETY_FACTOR`].
pub fn estimate_d_dot_star_min<D: Dynamics + ?Sized>(dynamics: &D, dt: f64, spec: &EstimationSpec) -> Result<f64> {
    spec.validate()?;
    let bx = dynamics.control_box();
    let rates = spec.sample_map(dynamics.has_speed_state(), |rng, x| {
        let u = sample_control(rng, bx.lo(), bx.hi());
        let y = dynamics.eval(&x, &u, dt).ok()?;
        let d0 = x.px.hypot(x.py);
        let d1 = y.px.hypot(y.py);
        Some((d1 - d0) / dt)
    });
    let min = rates.into_iter().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::Estimation("no finite range-rate sample".into()));
    }
    Ok(if min < 0.0 { min * D_DOT_SAFETY_FACTOR } else { min / D_DOT_SAFETY_FACTOR })
}
