//! Trace-level checks of forward invariance and finite-time convergence.

use serde::Serialize;

use crate::ctrigger::{TriggerConstants, TriggerProps};
use crate::safety_index::SafetyIndexParams;

use super::trace::EpisodeTrace;

pub const FLAG_NEVER_ENTERED: &str = "never-entered";
pub const FLAG_ALREADY_SAFE: &str = "already-safe";
pub const FLAG_EPISODE_ABORTED: &str = "episode-aborted";

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct VerificationReport {
    pub forward_invariant: bool,
    pub first_violation_step: Option<usize>,
    pub converged: bool,
    pub convergence_step: Option<usize>,
    pub bound_steps: Option<f64>,
    pub assumption_flags: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.forward_invariant && self.converged
    }
}

/// Once a step has `φ ≤ 0` and `φ₀ ≤ 0`, both must stay non-positive.
pub fn check_forward_invariance(trace: &EpisodeTrace) -> VerificationReport {
    let mut report = VerificationReport { forward_invariant: true, converged: true, ..Default::default() };
    if trace.failure.is_some() {
        report.assumption_flags.push(FLAG_EPISODE_ABORTED.into());
    }
    let Some(entry) = trace.records.iter().position(|r| r.phi <= 0.0 && r.phi0 <= 0.0) else {
        report.assumption_flags.push(FLAG_NEVER_ENTERED.into());
        return report;
    };
    if let Some(bad) = trace.records[entry..].iter().find(|r| r.phi > 0.0 || r.phi0 > 0.0) {
        report.forward_invariant = false;
        report.first_violation_step = Some(bad.t);
    }
    report
}

/// The first step with `φ ≤ 0` must come no later than the step bound
/// computed from the initial φ.
pub fn check_finite_time_convergence(
    trace: &EpisodeTrace,
    params: &SafetyIndexParams,
    props: &TriggerProps,
    constants: &TriggerConstants,
) -> VerificationReport {
    let mut report = VerificationReport { forward_invariant: true, ..Default::default() };
    let Some(first) = trace.records.first() else {
        report.converged = true;
        report.assumption_flags.push(FLAG_NEVER_ENTERED.into());
        return report;
    };
    if first.phi <= 0.0 {
        report.converged = true;
        report.convergence_step = Some(first.t);
        report.bound_steps = Some(0.0);
        report.assumption_flags.push(FLAG_ALREADY_SAFE.into());
        return report;
    }
    let bound = props.convergence_bound(first.phi, params.eta0, constants);
    report.bound_steps = Some(bound);
    report.convergence_step = trace.records.iter().find(|r| r.phi <= 0.0).map(|r| r.t - first.t);
    report.converged = match report.convergence_step {
        Some(s) => s as f64 <= bound,
        // not reached yet: only a failure if the trace already ran past the bound
        None => (trace.records.len() as f64) <= bound && trace.failure.is_none(),
    };
    report
}
