//! Reset-induced sources: outgoing guard flux pushed forward by the reset map.
//!
//! A merge reset (2D to 1D) turns each guard face's outflow into a deposit at
//! the midpoint of the face centroid, split linearly between the two nearest
//! target cells. A point reset spreads the outflow over a normalized cosine
//! bump around the reset point. Both are exactly mass preserving.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fvm::FaceFluxField;
use crate::geometry::{Branch, Grid1D, Mesh};
use crate::model::{reset_point, ModeId, ModeSpec, Reset, Scenario};

/// Tolerated negative guard outflow (round-off on nearly empty cells).
pub const NEGATIVE_RATE_TOL: f64 = 1e-12;

/// Outflow through one guard face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardFluxRecord {
    pub source: ModeId,
    pub centroid: [f64; 2],
    pub branch: Branch,
    /// Probability per unit time (outward face flux times face measure).
    pub rate: f64,
}

/// One record per guard face of `mode`.
pub fn extract_guard_flux(mode: &ModeSpec, flux: &FaceFluxField) -> Result<Vec<GuardFluxRecord>> {
    let mesh = mode.mesh();
    mode.faces()
        .guard_faces()
        .map(|(axis, face, outward, branch)| {
            let centroid = mesh.face_centroid(axis, face);
            let rate = outward.sign() * flux.axes[axis][face] * mesh.face_measure(axis);
            if rate < -NEGATIVE_RATE_TOL {
                return Err(Error::NegativeGuardFlux {
                    mode: mode.id(),
                    centroid,
                    rate,
                });
            }
            Ok(GuardFluxRecord {
                source: mode.id(),
                centroid,
                branch,
                rate,
            })
        })
        .collect()
}

/// Cloud-in-cell weights for position `x` on `grid`: `(cell, weight)` pairs
/// summing to one.
fn cic_weights(grid: &Grid1D, x: f64) -> [(usize, f64); 2] {
    let n = grid.n_cells();
    let s = (x - grid.x_min()) / grid.dx() - 0.5;
    if s <= 0.0 {
        return [(0, 1.0), (0, 0.0)];
    }
    let lo = s.floor() as usize;
    if lo + 1 >= n {
        return [(n - 1, 1.0), (n - 1, 0.0)];
    }
    let w = s - lo as f64;
    [(lo, 1.0 - w), (lo + 1, w)]
}

/// Merge reset: deposit every record at `x_C = (c_A + c_B) / 2` of its face
/// centroid. Returns a source density on `target`.
pub fn pushforward_merge(records: &[GuardFluxRecord], target: &Grid1D, epsilon: f64) -> Result<Vec<f64>> {
    let tol = target.dx();
    let (lo, hi) = (0.5 * epsilon - tol, 1.0 - 0.5 * epsilon + tol);
    let mut out = vec![0.0; target.n_cells()];
    for r in records {
        let x_c = 0.5 * (r.centroid[0] + r.centroid[1]);
        if !(lo..=hi).contains(&x_c) {
            return Err(Error::MidpointOutOfRange { x_c, lo, hi });
        }
        if r.rate == 0.0 {
            continue;
        }
        for (cell, w) in cic_weights(target, x_c) {
            out[cell] += r.rate * w;
        }
    }
    let inv = 1.0 / target.dx();
    out.iter_mut().for_each(|v| *v *= inv);
    Ok(out)
}

/// Normalized cosine bump weights of radius `width` around `point`,
/// restricted to active cells. Returns `(cell, weight)` with weights summing
/// to one.
pub fn split_kernel(mesh: &Mesh, point: [f64; 2], width: f64) -> Result<Vec<(usize, f64)>> {
    let dim = mesh.dim();
    let mut lo = [0usize; 2];
    let mut hi = [0usize; 2];
    for k in 0..2 {
        if k < dim {
            let g = mesh.axis(k);
            lo[k] = g.locate(point[k] - width);
            hi[k] = g.locate(point[k] + width);
        }
    }
    let mut weights = Vec::new();
    let mut total = 0.0;
    for j in lo[1]..=hi[1] {
        for i in lo[0]..=hi[0] {
            let cell = mesh.cell_index(i, j);
            if !mesh.is_active(cell) {
                continue;
            }
            let c = mesh.cell_center(cell);
            let r = (0..dim).map(|k| (c[k] - point[k]).powi(2)).sum::<f64>().sqrt();
            if r < width {
                let w = 0.5 * (1.0 + (PI * r / width).cos());
                if w > 0.0 {
                    weights.push((cell, w));
                    total += w;
                }
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::KernelOutsideDomain { point, width });
    }
    weights.iter_mut().for_each(|(_, w)| *w /= total);
    Ok(weights)
}

/// Point reset: spread the total record rate over a smoothed delta at `point`.
pub fn pushforward_split(records: &[GuardFluxRecord], target: &Mesh, point: [f64; 2], width: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; target.n_cells()];
    let total: f64 = records.iter().map(|r| r.rate).sum();
    if total == 0.0 {
        return Ok(out);
    }
    let inv_volume = 1.0 / target.cell_volume();
    for (cell, w) in split_kernel(target, point, width)? {
        out[cell] = total * w * inv_volume;
    }
    Ok(out)
}

/// Per-mode source densities from every mode's guard records
/// (`records[k]` belongs to `scenario.modes()[k]`).
pub fn assemble_sources(scenario: &Scenario, records: &[Vec<GuardFluxRecord>]) -> Result<Vec<Vec<f64>>> {
    let modes = scenario.modes();
    if records.len() != modes.len() {
        return Err(Error::SizeMismatch {
            expected: modes.len(),
            actual: records.len(),
        });
    }
    let mut sources: Vec<Vec<f64>> = modes.iter().map(|m| vec![0.0; m.mesh().n_cells()]).collect();
    for (mode, recs) in modes.iter().zip(records) {
        let Some(reset) = mode.reset() else {
            debug_assert!(recs.is_empty());
            continue;
        };
        if recs.is_empty() {
            continue;
        }
        let t = scenario.mode_index(reset.target())?;
        let target = modes[t].mesh();
        let deposit = match reset {
            Reset::MidpointMerge { .. } => {
                let (Mesh::Plane(src), Mesh::Line { grid, .. }) = (mode.mesh(), target) else {
                    return Err(Error::Config(format!(
                        "midpoint merge from mode {} needs a 2D source and a 1D target",
                        mode.id()
                    )));
                };
                let epsilon = src.band().unwrap_or(0.0);
                pushforward_merge(recs, grid, epsilon)?
            }
            Reset::PointSplit {
                point, delta_width, ..
            } => pushforward_split(recs, target, *point, *delta_width)?,
        };
        for (s, d) in sources[t].iter_mut().zip(deposit) {
            *s += d;
        }
    }
    Ok(sources)
}

/// Where the reset sends a record's face centroid.
pub fn record_image(reset: &Reset, record: &GuardFluxRecord) -> (ModeId, [f64; 2]) {
    reset_point(reset, record.centroid)
}
