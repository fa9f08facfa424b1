//! Exhaustive grid oracles over the control box.

use serde::Serialize;

use crate::model::{ControlBox, ControlVector, Dynamics};
use crate::par::{self, Execution};
use crate::safety_index::{SafeSetQuery, SafetyStatus};
use crate::{Error, Result};

pub const MIN_RESOLUTION: usize = 11;

/// Lattice with `resolution` evenly spaced values per dimension, endpoints
/// included, in row-major order.
pub fn lattice(bx: &ControlBox, resolution: usize) -> Vec<ControlVector> {
    let dim = bx.dim();
    let (lo, hi) = (bx.lo(), bx.hi());
    let total = resolution.pow(dim as u32);
    (0..total)
        .map(|flat| {
            let mut rest = flat;
            let mut u = vec![0.0; dim];
            for d in (0..dim).rev() {
                let j = rest % resolution;
                rest /= resolution;
                u[d] = if j + 1 == resolution {
                    hi[d]
                } else {
                    lo[d] + (hi[d] - lo[d]) * j as f64 / (resolution - 1) as f64
                };
            }
            ControlVector(u)
        })
        .collect()
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidConfig(format!(
            "grid resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    Ok(())
}

/// SAFE lattice point closest to `u_r`, if any. Ties go to the earlier point.
pub fn brute_force_project_with<F>(
    bx: &ControlBox,
    u_r: &ControlVector,
    resolution: usize,
    execution: Execution,
    oracle: F,
) -> Result<Option<ControlVector>>
where
    F: Fn(&ControlVector) -> Result<SafetyStatus> + Sync,
{
    check_resolution(resolution)?;
    let grid = lattice(bx, resolution);
    let statuses = par::map_slice(execution, &grid, |_, u| oracle(u));
    let mut best: Option<(f64, &ControlVector)> = None;
    for (u, st) in grid.iter().zip(statuses) {
        if st? == SafetyStatus::Safe {
            let d = u.distance_sq(u_r);
            if best.map_or(true, |(b, _)| d < b) {
                best = Some((d, u));
            }
        }
    }
    Ok(best.map(|(_, u)| u.clone()))
}

pub fn brute_force_project<D: Dynamics + ?Sized>(
    query: &SafeSetQuery<'_, D>,
    u_r: &ControlVector,
    resolution: usize,
    execution: Execution,
) -> Result<Option<ControlVector>> {
    brute_force_project_with(query.dynamics().control_box(), u_r, resolution, execution, |u| query.status(u))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCell {
    pub u1: f64,
    pub u2: f64,
    /// `φ(f(x,u)) − φ(x)`.
    pub delta_phi: f64,
    pub status: SafetyStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafeFraction {
    pub fraction: f64,
    pub cells: Vec<ScanCell>,
}

/// Fraction of SAFE controls on a 2D lattice, with the full `Δφ` grid.
pub fn safe_control_fraction<D: Dynamics + ?Sized>(
    query: &SafeSetQuery<'_, D>,
    resolution: usize,
    execution: Execution,
) -> Result<SafeFraction> {
    let bx = query.dynamics().control_box();
    if bx.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: bx.dim() });
    }
    check_resolution(resolution)?;
    let grid = lattice(bx, resolution);
    let phi = query.phi();
    let cells: Vec<ScanCell> = par::map_slice(execution, &grid, |_, u| {
        let e = query.evaluate(u)?;
        Ok(ScanCell { u1: u[0], u2: u[1], delta_phi: e.next_phi - phi, status: e.status })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let safe = cells.iter().filter(|c| c.status == SafetyStatus::Safe).count();
    Ok(SafeFraction { fraction: safe as f64 / cells.len() as f64, cells })
}

/// Whether any lattice control is SAFE; stops at the first hit.
pub fn any_safe<D: Dynamics + ?Sized>(query: &SafeSetQuery<'_, D>, resolution: usize) -> Result<bool> {
    for u in lattice(query.dynamics().control_box(), resolution) {
        if query.status(&u)? == SafetyStatus::Safe {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn safe_if(pred: impl Fn(&[f64]) -> bool + Sync) -> impl Fn(&ControlVector) -> Result<SafetyStatus> + Sync {
        move |u| Ok(if pred(u) { SafetyStatus::Safe } else { SafetyStatus::Unsafe })
    }

    #[test]
    fn brute_force_cases() {
        let bx = ControlBox::new(&[[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let u = brute_force_project_with(&bx, &[0.33, -0.71].into(), 11, Execution::Sequential, safe_if(|_| true))
            .unwrap()
            .unwrap();
        assert!((u[0] - 0.4).abs() < 1e-12 && (u[1] + 0.8).abs() < 1e-12, "{u:?}");

        let b1 = ControlBox::new(&[[-1.0, 1.0]]).unwrap();
        let u = brute_force_project_with(
            &b1,
            &[0.0].into(),
            201,
            Execution::Parallel,
            safe_if(|u| (0.5..=1.0).contains(&u[0])),
        )
        .unwrap()
        .unwrap();
        assert!((u[0] - 0.5).abs() <= 0.01);

        let none =
            brute_force_project_with(&bx, &[0.0, 0.0].into(), 11, Execution::Sequential, safe_if(|_| false)).unwrap();
        assert!(none.is_none());
        assert!(brute_force_project_with(&bx, &[0.0, 0.0].into(), 5, Execution::Sequential, safe_if(|_| true)).is_err());
    }

    #[test]
    fn lattice_hits_the_corners() {
        let bx = ControlBox::new(&[[-2.0, 2.0], [-1.0, 1.0]]).unwrap();
        let g = lattice(&bx, 41);
        assert_eq!(g.len(), 41 * 41);
        assert_eq!(g[0].as_slice(), &[-2.0, -1.0]);
        assert_eq!(g[g.len() - 1].as_slice(), &[2.0, 1.0]);
        assert!(g.iter().all(|u| bx.contains(u)));
    }
}
