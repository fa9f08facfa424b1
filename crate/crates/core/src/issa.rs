//! Two-phase projection of an unsafe control onto the safe-control boundary.
//!
//! Phase 1 runs the boundary search from the reference control along random
//! directions and keeps the closest SAFE boundary point. If every direction
//! misses, phase 2 finds a SAFE anchor on a refining grid and searches the
//! segment between the reference control and the anchor.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adamba::{adamba, reference_direction, sample_directions_with, AdambaConfig};
use crate::model::{ControlBox, ControlVector, Dynamics};
use crate::par::{self, Execution};
use crate::rng::{SeedStreams, Stream};
use crate::safety_index::{SafeSetQuery, SafetyStatus};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IssaConfig {
    pub adamba: AdambaConfig,
    pub grid_initial_divisions: usize,
    pub grid_growth: usize,
    pub grid_max_refinements: usize,
}

impl Default for IssaConfig {
    fn default() -> Self {
        Self { adamba: AdambaConfig::default(), grid_initial_divisions: 3, grid_growth: 2, grid_max_refinements: 12 }
    }
}

impl IssaConfig {
    pub fn validate(&self) -> Result<()> {
        self.adamba.validate()?;
        if self.grid_initial_divisions < 2 {
            return Err(Error::InvalidConfig("grid_initial_divisions must be at least 2".into()));
        }
        if self.grid_growth < 2 {
            return Err(Error::InvalidConfig("grid_growth must be at least 2".into()));
        }
        Ok(())
    }

    pub fn execution(&self) -> Execution {
        self.adamba.execution
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.adamba.execution = execution;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    PassThrough,
    Phase1,
    Phase2,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::PassThrough => "PASS_THROUGH",
            Phase::Phase1 => "PHASE1",
            Phase::Phase2 => "PHASE2",
        })
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PASS_THROUGH" => Ok(Phase::PassThrough),
            "PHASE1" => Ok(Phase::Phase1),
            "PHASE2" => Ok(Phase::Phase2),
            other => Err(Error::Trace(format!("unknown phase {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    pub control: ControlVector,
    /// Euclidean distance to the reference control.
    pub deviation: f64,
    pub phase: Phase,
    /// Dynamics evaluations spent, including the initial status test.
    pub queries: usize,
    /// Boundary points found by phase 1.
    pub candidates: usize,
}

/// A SAFE grid point and what it cost to find it.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub control: ControlVector,
    /// Sequential-equivalent number of status queries.
    pub queries: usize,
    /// Refinement level at which the anchor was found, starting at 0.
    pub refinement: usize,
}

const SCAN_CHUNK: usize = 256;

/// Cell centers of an `m`-per-dimension grid, ordered by distance from the
/// box center with row-major order breaking ties.
pub fn grid_points(bx: &ControlBox, m: usize) -> Vec<ControlVector> {
    let dim = bx.dim();
    let center = bx.center();
    let widths = bx.widths();
    let total = m.checked_pow(dim as u32).expect("grid size overflows usize");
    // offsets are odd multiples of w/(2m), so mirrored cells have equal distance exactly
    let mut cells: Vec<(f64, usize, Vec<f64>)> = (0..total)
        .map(|flat| {
            let mut rest = flat;
            let mut offs = vec![0.0; dim];
            for d in (0..dim).rev() {
                let j = rest % m;
                rest /= m;
                offs[d] = (2.0 * j as f64 + 1.0 - m as f64) * widths[d] / (2.0 * m as f64);
            }
            (offs.iter().map(|o| o * o).sum(), flat, offs)
        })
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cells
        .into_iter()
        .map(|(_, _, offs)| {
            let u = ControlVector(center.iter().zip(&offs).map(|(c, o)| c + o).collect());
            // keep rounding from pushing a point off a face
            bx.clip(&u)
        })
        .collect()
}

/// First SAFE point of a refining grid scan.
pub fn grid_anchor<F>(bx: &ControlBox, config: &IssaConfig, oracle: F) -> Result<Anchor>
where
    F: Fn(&ControlVector) -> Result<SafetyStatus> + Sync,
{
    config.validate()?;
    let mut queries = 0;
    let mut m = config.grid_initial_divisions;
    for refinement in 0..=config.grid_max_refinements {
        let points = grid_points(bx, m);
        for chunk in points.chunks(SCAN_CHUNK) {
            let statuses = par::map_slice(config.execution(), chunk, |_, u| oracle(u));
            for (u, st) in chunk.iter().zip(statuses) {
                queries += 1;
                if st? == SafetyStatus::Safe {
                    return Ok(Anchor { control: u.clone(), queries, refinement });
                }
            }
        }
        m *= config.grid_growth;
    }
    Err(Error::AnchorNotFound { state: String::new(), refinements: config.grid_max_refinements, queries })
}

/// Projects an UNSAFE reference control given a status oracle.
///
/// `u_r` must be UNSAFE. The result's `queries` counts only calls made here.
pub fn project_with<F, R>(
    bx: &ControlBox,
    u_r: &ControlVector,
    config: &IssaConfig,
    rng: &mut R,
    oracle: F,
) -> Result<ProjectionResult>
where
    F: Fn(&ControlVector) -> Result<SafetyStatus> + Sync,
    R: Rng,
{
    config.validate()?;
    let ad = &config.adamba;
    let dirs = sample_directions_with(rng, ad.n_dirs, u_r.dim(), ad.cov_scale)?;
    let phase1 = adamba(ad, bx, u_r, &dirs, SafetyStatus::Unsafe, SafetyStatus::Safe, &oracle)?;
    let mut queries = phase1.queries();

    let mut best: Option<(f64, &ControlVector)> = None;
    for p in &phase1.points {
        let dev2 = p.control.distance_sq(u_r);
        if best.map_or(true, |(b, _)| dev2 < b) {
            best = Some((dev2, &p.control));
        }
    }
    if let Some((_, control)) = best {
        return Ok(ProjectionResult {
            control: control.clone(),
            deviation: control.distance(u_r),
            phase: Phase::Phase1,
            queries,
            candidates: phase1.points.len(),
        });
    }

    let anchor = grid_anchor(bx, config, &oracle)?;
    queries += anchor.queries;
    let u_a = anchor.control;
    let toward = reference_direction(&u_a.iter().zip(u_r.iter()).map(|(a, r)| a - r).collect::<Vec<_>>())?;
    let segment = AdambaConfig { beta0: u_a.distance(u_r) / 4.0, ..ad.clone() };

    let forward =
        adamba(&segment, bx, u_r, std::slice::from_ref(&toward), SafetyStatus::Unsafe, SafetyStatus::Safe, &oracle)?;
    queries += forward.queries();
    let control = match forward.points.into_iter().next() {
        Some(p) => p.control,
        None => {
            let back: Vec<f64> = toward.iter().map(|x| -x).collect();
            let backward = adamba(&segment, bx, &u_a, &[back], SafetyStatus::Safe, SafetyStatus::Safe, &oracle)?;
            queries += backward.queries();
            backward.points.into_iter().next().map_or(u_a, |p| p.control)
        }
    };
    Ok(ProjectionResult { deviation: control.distance(u_r), control, phase: Phase::Phase2, queries, candidates: 0 })
}

/// Projection at a concrete state. `seed` feeds the direction sampler.
pub fn project<D: Dynamics + ?Sized>(
    query: &SafeSetQuery<'_, D>,
    u_r: &ControlVector,
    config: &IssaConfig,
    seed: u64,
) -> Result<ProjectionResult> {
    let bx = query.dynamics().control_box();
    let mut rng = SeedStreams::new(seed).rng(Stream::Directions, 0);
    project_with(bx, u_r, config, &mut rng, |u| query.status(u)).map_err(|e| match e {
        Error::AnchorNotFound { refinements, queries, .. } => {
            Error::AnchorNotFound { state: query.state().to_string(), refinements, queries }
        }
        other => other,
    })
}

/// Returns `u_r` when it is SAFE and projects it otherwise.
pub fn safeguard<D: Dynamics + ?Sized>(
    query: &SafeSetQuery<'_, D>,
    u_r: &ControlVector,
    config: &IssaConfig,
    seed: u64,
) -> Result<ProjectionResult> {
    query.dynamics().control_box().check(u_r)?;
    let pass = |queries| ProjectionResult {
        control: u_r.clone(),
        deviation: 0.0,
        phase: Phase::PassThrough,
        queries,
        candidates: 0,
    };
    if !query.has_obstacles() {
        return Ok(pass(0));
    }
    if query.status(u_r)? == SafetyStatus::Safe {
        return Ok(pass(1));
    }
    let mut r = project(query, u_r, config, seed)?;
    r.queries += 1;
    Ok(r)
}
