//! Phase-1 success-rate benchmark over sampled unsafe states.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::adamba::{adamba, sample_directions_with};
use crate::issa::IssaConfig;
use crate::model::{Dynamics, RobotState};
use crate::par::{self, Execution};
use crate::rng::{SeedStreams, Stream};
use crate::safety_index::{sample_control, SafetyStatus};
use crate::{ControlVector, Error, Result};

use super::episode::Env;

pub const MAX_REJECTIONS: usize = 100_000;
pub const MIN_TRIALS: usize = 100;

/// A state with `φ > 0` and an UNSAFE nominal control.
#[derive(Debug, Clone, PartialEq)]
pub struct UnsafeSample {
    pub state: RobotState,
    pub nominal: ControlVector,
}

/// Rejection-samples `count` unsafe states near the obstacles.
///
/// Candidates sit at a distance in `d_range` from a randomly chosen
/// obstacle, with uniform bearing and heading and uniform signed speed up
/// to `v_max`. Nominal controls are uniform in the control box.
pub fn sample_unsafe_states(
    env: &Env,
    count: usize,
    d_range: (f64, f64),
    v_max: f64,
    seed: u64,
) -> Result<Vec<UnsafeSample>> {
    use std::f64::consts::PI;
    if env.obstacles.is_empty() {
        return Err(Error::InvalidConfig("unsafe-state sampling needs at least one obstacle".into()));
    }
    let mut rng = SeedStreams::new(seed).rng(Stream::Scenario, 0);
    let bx = env.model.control_box().clone();
    let mut out = Vec::with_capacity(count);
    let mut rejections = 0;
    while out.len() < count {
        let o = &env.obstacles[rng.random_range(0..env.obstacles.len())];
        let d = rng.random_range(d_range.0..=d_range.1);
        let bearing = rng.random_range(-PI..PI);
        let theta = rng.random_range(-PI..PI);
        let v = if env.model.has_speed_state() { rng.random_range(-v_max..=v_max) } else { 0.0 };
        let state = RobotState::new(o.cx - d * bearing.cos(), o.cy - d * bearing.sin(), theta, v);
        let nominal = sample_control(&mut rng, bx.lo(), bx.hi());
        let q = env.query(&env.obstacles, &state)?;
        if q.phi() > 0.0 && q.status(&nominal)? == SafetyStatus::Unsafe {
            out.push(UnsafeSample { state, nominal });
        } else {
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(Error::SamplingExhausted(rejections));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_dirs: usize,
    pub success_rate: f64,
    pub mean_candidates: f64,
    pub mean_queries: f64,
    pub wall_ms: f64,
}

struct TrialOutcome {
    success: bool,
    candidates: usize,
    queries: usize,
}

/// Runs phase 1 alone for every `n_dirs` value on the same states.
///
/// Each state uses its own direction seed, shared across `n_dirs` values,
/// so a smaller direction set is always a prefix of a larger one. With
/// `timing == false` the wall time column is zero and the output is fully
/// deterministic.
pub fn bench_phase1(
    env: &Env,
    samples: &[UnsafeSample],
    base: &IssaConfig,
    n_dirs_list: &[usize],
    seed: u64,
    execution: Execution,
    timing: bool,
) -> Result<Vec<BenchRow>> {
    if samples.len() < MIN_TRIALS {
        return Err(Error::InvalidConfig(format!(
            "benchmark needs at least {MIN_TRIALS} trials, got {}",
            samples.len()
        )));
    }
    let streams = SeedStreams::new(seed);
    let bx = env.model.control_box();
    n_dirs_list
        .iter()
        .map(|&n_dirs| {
            let mut cfg = base.adamba.clone();
            cfg.n_dirs = n_dirs;
            cfg.validate()?;
            let start = Instant::now();
            let outcomes: Vec<TrialOutcome> = par::map_slice(execution, samples, |i, s| {
                let q = env.query(&env.obstacles, &s.state)?;
                let mut rng = SeedStreams::new(streams.seed(Stream::Benchmark, i as u64)).rng(Stream::Directions, 0);
                let dirs = sample_directions_with(&mut rng, n_dirs, s.nominal.dim(), cfg.cov_scale)?;
                let out =
                    adamba(&cfg, bx, &s.nominal, &dirs, SafetyStatus::Unsafe, SafetyStatus::Safe, |u| q.status(u))?;
                Ok(TrialOutcome {
                    success: !out.points.is_empty(),
                    candidates: out.points.len(),
                    queries: out.queries(),
                })
            })
            .into_iter()
            .collect::<Result<_>>()?;
            let wall_ms = if timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            let n = outcomes.len() as f64;
            Ok(BenchRow {
                n_dirs,
                success_rate: outcomes.iter().filter(|o| o.success).count() as f64 / n,
                mean_candidates: outcomes.iter().map(|o| o.candidates as f64).sum::<f64>() / n,
                mean_queries: outcomes.iter().map(|o| o.queries as f64).sum::<f64>() / n,
                wall_ms,
            })
        })
        .collect()
}
