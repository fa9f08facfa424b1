//! Model-free safe control for planar mobile robots.
//!
//! The crate synthesizes energy-function safety indices, projects nominal
//! controls onto the set of safe controls using only pointwise queries of a
//! black-box dynamics model, and checks forward invariance and finite-time
//! convergence on recorded episodes.
//!
//! Layout:
//! - [`model`]: robot state, controls, obstacles, the black-box dynamics
//!   contract and the two built-in simulators.
//! - [`safety_index`]: safety specification, safety index, design-rule
//!   validators and the one-step safety status test.
//! - [`adamba`]: boundary search by exponential outreach and bisection.
//! - [`issa`]: two-phase projection of unsafe controls and the safeguard.
//! - [`ctrigger`]: the convergence trigger and its offline estimators.
//! - [`harness`]: episodes, nominal policies, brute-force oracles and
//!   trace-level verification.
//! - [`config`]: declarative run configuration.
//!
//! Data-parallel work goes through [`par`]; with the `parallel` feature
//! disabled every [`Execution`] mode runs sequentially.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adamba;
pub mod config;
pub mod ctrigger;
mod error;
pub mod harness;
pub mod issa;
pub mod model;
pub mod par;
pub mod rng;
pub mod safety_index;

pub use error::{Error, Result};
pub use model::{
    relative_kinematics, ControlBox, ControlVector, Dynamics, Model, Obstacle, RelativeKinematics, RobotState,
    SecondOrderRobot, SystemLimits, ToyUnicycle,
};
pub use par::Execution;
pub use safety_index::{SafetyIndexParams, SafetyStatus};
