//! Boundary search over the control box using only status queries.
//!
//! From a reference control, each search direction is explored by
//! exponential outreach (the step doubles after every point that keeps the
//! reference status) until the status flips, then the bracket is bisected
//! down to the requested accuracy. A step that would leave the box is
//! replaced by a single probe on the face the ray exits through. Directions
//! are independent and may be searched concurrently.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{ControlBox, ControlVector};
use crate::par::{self, Execution};
use crate::rng::{SeedStreams, Stream};
use crate::safety_index::SafetyStatus;
use crate::{Error, Result};

const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdambaConfig {
    /// Bisection stops once the bracket is shorter than this.
    pub epsilon: f64,
    /// First outreach step length.
    pub beta0: f64,
    /// Number of Gaussian search directions.
    pub n_dirs: usize,
    /// Isotropic variance of the direction sampler.
    pub cov_scale: f64,
    pub max_outreach_doublings: u32,
    pub seed: u64,
    /// Per-dimension weights for the bracket-length norm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_weights: Option<Vec<f64>>,
    pub execution: Execution,
}

impl Default for AdambaConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            beta0: 0.05,
            n_dirs: 10,
            cov_scale: 1.0,
            max_outreach_doublings: 60,
            seed: 0,
            scale_weights: None,
            execution: Execution::default(),
        }
    }
}

impl AdambaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return bad(format!("beta0 must be positive, got {}", self.beta0));
        }
        if self.n_dirs == 0 {
            return bad("n_dirs must be at least 1".into());
        }
        if !(self.cov_scale > 0.0 && self.cov_scale.is_finite()) {
            return bad(format!("cov_scale must be positive, got {}", self.cov_scale));
        }
        if let Some(w) = &self.scale_weights {
            if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return bad("scale_weights must be positive".into());
            }
        }
        Ok(())
    }

    fn norm(&self, a: &[f64], b: &[f64]) -> f64 {
        match &self.scale_weights {
            None => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Some(w) => a.iter().zip(b).zip(w).map(|((x, y), w)| (w * (x - y)).powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// Per-direction query ceiling: outreach cap, one flip query, and the
    /// bisection steps needed to shrink a bracket of length `reach` below ε.
    pub fn query_budget(&self, reach: f64) -> usize {
        let bisect = (reach / self.epsilon).log2().ceil().max(0.0) as usize;
        self.max_outreach_doublings as usize + bisect + 2
    }
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-300 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

/// Unit vector along `v`.
pub fn reference_direction(v: &[f64]) -> Result<Vec<f64>> {
    normalized(v).ok_or_else(|| Error::InvalidConfig("reference direction has zero length".into()))
}

/// `n_dirs` unit directions drawn from the configured seed.
pub fn sample_directions(config: &AdambaConfig, n_u: usize) -> Result<Vec<Vec<f64>>> {
    let mut rng = SeedStreams::new(config.seed).rng(Stream::Directions, 0);
    sample_directions_with(&mut rng, config.n_dirs, n_u, config.cov_scale)
}

/// Directions are drawn one after another, so a shorter list is always a
/// prefix of a longer one drawn from the same generator state.
pub fn sample_directions_with(rng: &mut impl Rng, n_dirs: usize, n_u: usize, cov_scale: f64) -> Result<Vec<Vec<f64>>> {
    if n_dirs == 0 {
        return Err(Error::InvalidConfig("n_dirs must be at least 1".into()));
    }
    if n_u == 0 {
        return Err(Error::InvalidConfig("control dimension must be at least 1".into()));
    }
    let sd = cov_scale.sqrt();
    (0..n_dirs)
        .map(|_| {
            for _ in 0..MAX_REDRAWS {
                let raw: Vec<f64> = (0..n_u).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
                if let Some(v) = normalized(&raw) {
                    return Ok(v);
                }
            }
            Err(Error::SamplingExhausted(MAX_REDRAWS))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub control: ControlVector,
    pub status: SafetyStatus,
    pub queries_used: usize,
    /// Index of the search direction that produced this point.
    pub direction: usize,
}

/// What happened along one direction.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionOutcome {
    Found(BoundaryPoint),
    /// The ray reached the box face without a status flip.
    LeftBox {
        queries: usize,
    },
    /// The outreach hit `max_outreach_doublings` without a flip.
    OutreachCap {
        queries: usize,
    },
}

impl DirectionOutcome {
    pub fn queries(&self) -> usize {
        match self {
            DirectionOutcome::Found(p) => p.queries_used,
            DirectionOutcome::LeftBox { queries } | DirectionOutcome::OutreachCap { queries } => *queries,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdambaOutput {
    /// Emitted points, in direction order.
    pub points: Vec<BoundaryPoint>,
    /// One entry per input direction.
    pub outcomes: Vec<DirectionOutcome>,
}

impl AdambaOutput {
    pub fn queries(&self) -> usize {
        self.outcomes.iter().map(DirectionOutcome::queries).sum()
    }
}

/// Searches every direction from `u_r` for the status boundary.
///
/// `s` must be the status of `u_r`. Each emitted point carries status
/// `s_goal`: the last same-status point when `s_goal == s`, the first flipped
/// point otherwise.
pub fn adamba<F>(
    config: &AdambaConfig,
    bx: &ControlBox,
    u_r: &ControlVector,
    directions: &[Vec<f64>],
    s: SafetyStatus,
    s_goal: SafetyStatus,
    oracle: F,
) -> Result<AdambaOutput>
where
    F: Fn(&ControlVector) -> Result<SafetyStatus> + Sync,
{
    config.validate()?;
    bx.check(u_r)?;
    if let Some(d) = directions.iter().find(|d| d.len() != u_r.dim()) {
        return Err(Error::DimensionMismatch { expected: u_r.dim(), got: d.len() });
    }
    if cfg!(debug_assertions) {
        // not counted, so query totals agree across build profiles
        debug_assert_eq!(oracle(u_r)?, s, "reference control does not have the stated status");
    }

    let outcomes: Vec<DirectionOutcome> = par::map_slice(config.execution, directions, |i, v| {
        search_direction(config, bx, u_r, v, i, s, s_goal, &oracle)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let points = outcomes
        .iter()
        .filter_map(|o| match o {
            DirectionOutcome::Found(p) => Some(p.clone()),
            _ => None,
        })
        .collect();
    Ok(AdambaOutput { points, outcomes })
}

#[allow(clippy::too_many_arguments)]
fn search_direction<F>(
    config: &AdambaConfig,
    bx: &ControlBox,
    u_r: &ControlVector,
    v: &[f64],
    index: usize,
    s: SafetyStatus,
    s_goal: SafetyStatus,
    oracle: &F,
) -> Result<DirectionOutcome>
where
    F: Fn(&ControlVector) -> Result<SafetyStatus>,
{
    let mut queries = 0;
    let mut beta = config.beta0;
    let mut doublings = 0;
    let mut p_s = u_r.clone();

    let mut p_ns = loop {
        let p = p_s.offset(v, beta);
        if !bx.contains(&p) {
            // One probe where the ray meets the face. It stays on the ray, so
            // a flip there still brackets the boundary along this direction.
            let t = bx.ray_exit(&p_s, v);
            if t <= 0.0 {
                return Ok(DirectionOutcome::LeftBox { queries });
            }
            let face = bx.clip(&p_s.offset(v, t));
            queries += 1;
            if oracle(&face)? != s {
                break face;
            }
            return Ok(DirectionOutcome::LeftBox { queries });
        }
        queries += 1;
        if oracle(&p)? != s {
            break p;
        }
        p_s = p;
        doublings += 1;
        if doublings >= config.max_outreach_doublings {
            return Ok(DirectionOutcome::OutreachCap { queries });
        }
        beta *= 2.0;
    };

    while config.norm(&p_ns, &p_s) >= config.epsilon {
        let mid = p_s.midpoint(&p_ns);
        queries += 1;
        if oracle(&mid)? == s {
            p_s = mid;
        } else {
            p_ns = mid;
        }
    }

    let control = if s_goal == s { p_s } else { p_ns };
    Ok(DirectionOutcome::Found(BoundaryPoint { control, status: s_goal, queries_used: queries, direction: index }))
}
