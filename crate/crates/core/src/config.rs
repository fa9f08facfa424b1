//! Declarative run configuration (JSON) and its resolution into runnable parts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ctrigger::{estimate_props, TriggerConstants, TriggerProps};
use crate::harness::episode::{Env, SafeguardStack};
use crate::harness::policy::{NominalPolicy, PolicySpec};
use crate::issa::IssaConfig;
use crate::model::{ControlBox, Model, ModelKind, Obstacle, RobotState, SecondOrderRobot, SystemLimits, ToyUnicycle};
use crate::par::Execution;
use crate::rng::{SeedStreams, Stream};
use crate::safety_index::{
    estimate_d_dot_star_min, validate_continuous_rule, validate_discrete_assumptions, validate_discrete_rule,
    EstimationSpec, IndexKind, Mode, RuleReport, SafetyIndexParams, StatusRule, DEFAULT_MICRO_DT,
};
use crate::{Error, Result};

fn default_micro_dt() -> f64 {
    DEFAULT_MICRO_DT
}

fn is_default_micro_dt(x: &f64) -> bool {
    *x == DEFAULT_MICRO_DT
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexConfig {
    pub sigma: f64,
    pub n: u32,
    pub k: f64,
    pub eta0: f64,
    pub d_min: f64,
    #[serde(default)]
    pub sigma_star: f64,
    #[serde(default)]
    pub family: IndexKind,
    #[serde(default)]
    pub mode: Mode,
    /// Most negative one-step range rate; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_dot_star_min: Option<f64>,
    /// Status step of the continuous-approximation mode.
    #[serde(default = "default_micro_dt", skip_serializing_if = "is_default_micro_dt")]
    pub micro_dt: f64,
}

impl IndexConfig {
    pub fn params(&self) -> SafetyIndexParams {
        SafetyIndexParams {
            sigma: self.sigma,
            n: self.n,
            k: self.k,
            eta0: self.eta0,
            d_min: self.d_min,
            sigma_star: self.sigma_star,
        }
    }
}

/// Optional replacements for estimated trigger properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TriggerOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_trigger: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_phi_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TriggerConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub overrides: TriggerOverrides,
    #[serde(default)]
    pub constants: TriggerConstants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// World step; must equal `limits.dt` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub steps: usize,
    pub initial_state: RobotState,
    /// `false` applies nominal controls without any safeguard.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub safeguard: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub limits: SystemLimits,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub index: IndexConfig,
    #[serde(default)]
    pub issa: IssaConfig,
    #[serde(default)]
    pub ctrigger: TriggerConfig,
    pub sim: SimConfig,
    pub policy: PolicySpec,
    #[serde(default)]
    pub seed: u64,
}

/// Everything needed to run episodes, resolved from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Runtime {
    pub env: Env,
    pub policy: NominalPolicy,
    pub stack: SafeguardStack,
    pub x0: RobotState,
    pub steps: usize,
    pub seed: u64,
    pub trigger_props: Option<TriggerProps>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn world_dt(&self) -> f64 {
        self.sim.dt.unwrap_or(self.limits.dt)
    }

    pub fn execution(&self) -> Execution {
        self.issa.execution()
    }

    /// Field-level checks that do not involve the design rules.
    pub fn validate(&self) -> Result<()> {
        self.limits.validate()?;
        self.index.params().validate()?;
        self.issa.validate()?;
        for o in &self.obstacles {
            o.validate()?;
        }
        if let Some(dt) = self.sim.dt {
            if dt != self.limits.dt {
                return Err(Error::InvalidConfig(format!("sim.dt = {dt} differs from limits.dt = {}", self.limits.dt)));
            }
        }
        if self.index.mode == Mode::ContinuousApprox
            && !(self.index.micro_dt > 0.0 && self.index.micro_dt < self.limits.dt)
        {
            return Err(Error::InvalidConfig("micro_dt must lie in (0, dt)".into()));
        }
        match (self.model, &self.index.family) {
            (ModelKind::Toy, IndexKind::Toy { .. }) | (ModelKind::SecondOrder, IndexKind::Energy) => {}
            (m, f) => {
                return Err(Error::InvalidConfig(format!("index family {f:?} does not match model {m}")));
            }
        }
        if self.ctrigger.enabled {
            if self.model == ModelKind::Toy {
                return Err(Error::InvalidConfig("the convergence trigger needs a model with speed state".into()));
            }
            if self.index.mode != Mode::Discrete {
                return Err(Error::InvalidConfig("the convergence trigger applies to discrete mode only".into()));
            }
        }
        if self.model == ModelKind::Toy && self.limits.control_box.is_none() {
            return Err(Error::InvalidConfig("the toy model needs an explicit limits.control_box".into()));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<Model> {
        Ok(match self.model {
            ModelKind::Toy => Model::Toy(ToyUnicycle::new(self.limits.control_box())?),
            ModelKind::SecondOrder => Model::SecondOrder(SecondOrderRobot::new(self.limits.clone())?),
        })
    }

    /// Most negative one-step range rate, from the config or estimated.
    pub fn d_dot_star_min(&self, model: &Model) -> Result<f64> {
        if let Some(v) = self.index.d_dot_star_min {
            return Ok(v);
        }
        let d = self.index.d_min;
        let seed = SeedStreams::new(self.seed).seed(Stream::Estimation, 0);
        let spec = EstimationSpec::new((d, 4.0 * d), self.limits.v_max, seed).with_execution(self.execution());
        estimate_d_dot_star_min(model, self.world_dt(), &spec)
    }

    /// Design-rule clauses for the configured mode. Empty for the toy index,
    /// which has no design rule.
    pub fn rule_report(&self) -> Result<RuleReport> {
        if matches!(self.index.family, IndexKind::Toy { .. }) {
            return Ok(RuleReport { clauses: vec![] });
        }
        let params = self.index.params();
        Ok(match self.index.mode {
            Mode::Continuous | Mode::ContinuousApprox => {
                RuleReport { clauses: vec![validate_continuous_rule(&params, &self.limits)] }
            }
            Mode::Discrete => {
                let model = self.build_model()?;
                let mut r = validate_discrete_rule(&params, &self.limits, self.d_dot_star_min(&model)?)?;
                r.clauses.push(validate_discrete_assumptions(&self.limits));
                r
            }
        })
    }

    pub fn trigger_props(&self, model: &Model) -> Result<Option<TriggerProps>> {
        if !self.ctrigger.enabled {
            return Ok(None);
        }
        let o = &self.ctrigger.overrides;
        let mut props = if let (Some(w_trigger), Some(delta_min), Some(delta_phi_max)) =
            (o.w_trigger, o.delta_min, o.delta_phi_max)
        {
            TriggerProps {
                w_trigger,
                delta_min,
                delta_phi_max,
                a_min: self.limits.a_min,
                a_max: self.limits.a_max,
                v_max: self.limits.v_max,
            }
        } else {
            let seed = SeedStreams::new(self.seed).seed(Stream::Estimation, 1);
            estimate_props(model, &self.limits, &self.index.family, &self.index.params(), seed, self.execution())?
        };
        if let Some(w) = o.w_trigger {
            props.w_trigger = w;
        }
        if let Some(d) = o.delta_min {
            props.delta_min = d;
        }
        if let Some(p) = o.delta_phi_max {
            props.delta_phi_max = p;
        }
        props.validate()?;
        Ok(Some(props))
    }

    /// Resolves into runnable parts, reusing `props` when already known.
    pub fn runtime_with(&self, props: Option<TriggerProps>) -> Result<Runtime> {
        self.validate()?;
        let model = self.build_model()?;
        let trigger_props = match props {
            Some(p) if self.ctrigger.enabled => Some(p),
            _ => self.trigger_props(&model)?,
        };
        let bx: ControlBox = self.limits.control_box();
        let policy = NominalPolicy::new(self.policy.clone(), self.model, bx, self.limits.v_max);
        let rule = StatusRule { mode: self.index.mode, world_dt: self.world_dt(), micro_dt: self.index.micro_dt };
        let env = Env {
            model,
            kind: self.index.family.clone(),
            params: self.index.params(),
            obstacles: self.obstacles.clone(),
            rule,
        };
        let stack = if !self.sim.safeguard {
            SafeguardStack::disabled()
        } else {
            let mut s = SafeguardStack::issa(self.issa.clone());
            if let Some(p) = &trigger_props {
                s = s.with_trigger(p.clone(), self.ctrigger.constants.clone());
            }
            s
        };
        Ok(Runtime {
            env,
            policy,
            stack,
            x0: self.sim.initial_state,
            steps: self.sim.steps,
            seed: self.seed,
            trigger_props,
        })
    }

    pub fn runtime(&self) -> Result<Runtime> {
        self.runtime_with(None)
    }

    /// The built-in toy comparison: unicycle driving straight at an
    /// obstacle slightly off its path.
    pub fn toy(mode: Mode) -> Self {
        RunConfig {
            model: ModelKind::Toy,
            limits: SystemLimits::new(2.0, -1.0, 1.0, -30.0, 30.0, 0.01)
                .with_control_box(ControlBox::new(&[[0.0, 2.0], [-30.0, 30.0]]).expect("valid box")),
            obstacles: vec![Obstacle::fixed(1.0, 0.2, 0.25)],
            index: IndexConfig {
                sigma: 0.0,
                n: 1,
                k: 0.0,
                eta0: 0.005,
                d_min: 0.5,
                sigma_star: 0.0,
                family: IndexKind::Toy { r: 0.25, big_r: 0.25 },
                mode,
                d_dot_star_min: None,
                micro_dt: DEFAULT_MICRO_DT,
            },
            issa: IssaConfig::default(),
            ctrigger: TriggerConfig::default(),
            sim: SimConfig { dt: None, steps: 100, initial_state: RobotState::pose(0.0, 0.0, 0.0), safeguard: true },
            policy: PolicySpec::constant_forward(1.5),
            seed: 0,
        }
    }

    /// Second-order robot with rule-passing discrete-mode parameters and a
    /// goal-seeking policy through one obstacle.
    pub fn second_order_default() -> Self {
        RunConfig {
            model: ModelKind::SecondOrder,
            limits: SystemLimits::new(1.0, -2.0, 2.0, -3.0, 3.0, 0.05),
            obstacles: vec![Obstacle::fixed(3.0, 0.45, 0.3)],
            index: IndexConfig {
                sigma: 0.15,
                n: 1,
                k: 2.0,
                eta0: 0.02,
                d_min: 0.5,
                sigma_star: 0.01,
                family: IndexKind::Energy,
                mode: Mode::Discrete,
                d_dot_star_min: None,
                micro_dt: DEFAULT_MICRO_DT,
            },
            issa: IssaConfig::default(),
            ctrigger: TriggerConfig { enabled: true, ..TriggerConfig::default() },
            sim: SimConfig {
                dt: None,
                steps: 300,
                initial_state: RobotState::new(0.0, 0.0, 0.0, 0.0),
                safeguard: true,
            },
            policy: PolicySpec::goal_seek([6.0, 0.0]),
            seed: 0,
        }
    }
}

/// Metadata written next to a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_props: Option<TriggerProps>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<crate::harness::EpisodeFailure>,
    #[serde(default)]
    pub flags: Vec<crate::harness::AssumptionFlag>,
}

impl Sidecar {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}
