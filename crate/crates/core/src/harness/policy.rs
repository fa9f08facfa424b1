//! Nominal (safety-unaware) policies.

use serde::{Deserialize, Serialize};

use crate::model::{wrap_angle, ControlBox, ControlVector, ModelKind, RobotState};

fn default_gain() -> f64 {
    2.0
}

fn default_k_heading() -> f64 {
    2.0
}

fn default_k_speed() -> f64 {
    1.0
}

fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Drive straight ahead at `speed`. On a model with speed state the
    /// command is a proportional acceleration toward `speed`.
    ConstantForward {
        speed: f64,
        #[serde(default = "default_gain")]
        gain: f64,
    },
    /// Proportional control on heading error and distance to `goal`.
    GoalSeek {
        goal: [f64; 2],
        #[serde(default = "default_k_heading")]
        k_heading: f64,
        #[serde(default = "default_k_speed")]
        k_speed: f64,
        /// Cap on the desired speed; defaults to the upper speed bound of the box.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cruise: Option<f64>,
        #[serde(default = "default_gain")]
        gain: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
}

impl PolicySpec {
    pub fn constant_forward(speed: f64) -> Self {
        PolicySpec::ConstantForward { speed, gain: default_gain() }
    }

    pub fn goal_seek(goal: [f64; 2]) -> Self {
        PolicySpec::GoalSeek {
            goal,
            k_heading: default_k_heading(),
            k_speed: default_k_speed(),
            cruise: None,
            gain: default_gain(),
            tolerance: default_tolerance(),
        }
    }
}

/// A policy bound to a model family and control box.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalPolicy {
    spec: PolicySpec,
    model: ModelKind,
    bx: ControlBox,
    v_max: f64,
}

impl NominalPolicy {
    /// `v_max` caps goal-seek cruise speed on the second-order model.
    pub fn new(spec: PolicySpec, model: ModelKind, bx: ControlBox, v_max: f64) -> Self {
        Self { spec, model, bx, v_max }
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    pub fn control(&self, x: &RobotState) -> ControlVector {
        let raw = match &self.spec {
            PolicySpec::ConstantForward { speed, gain } => match self.model {
                ModelKind::Toy => [*speed, 0.0],
                ModelKind::SecondOrder => [gain * (speed - x.v), 0.0],
            },
            PolicySpec::GoalSeek { goal, k_heading, k_speed, cruise, gain, tolerance } => {
                let (dx, dy) = (goal[0] - x.px, goal[1] - x.py);
                let rho = dx.hypot(dy);
                if rho <= *tolerance {
                    [0.0, 0.0]
                } else {
                    let err = wrap_angle(dy.atan2(dx) - x.theta);
                    let w = k_heading * err;
                    match self.model {
                        ModelKind::Toy => {
                            let cap = cruise.unwrap_or(self.bx.hi()[0]);
                            [(k_speed * rho).min(cap) * err.cos().max(0.0), w]
                        }
                        ModelKind::SecondOrder => {
                            let cap = cruise.unwrap_or(self.v_max);
                            let v_des = (k_speed * rho).min(cap) * err.cos().max(0.0);
                            [gain * (v_des - x.v), w]
                        }
                    }
                }
            }
        };
        self.bx.clip(&raw)
    }
}
