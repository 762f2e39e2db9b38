//! Discrete probability current `Y = p X - (sigma^2 / 2) grad p`.
//!
//! Advection uses MUSCL reconstruction with the minmod limiter and upwinding
//! on the reconstructed states; diffusion uses centered differences between
//! neighbouring cell values. Densities are plain per-cell slices laid out as
//! in [`crate::geometry`], zero on inactive cells.
//!
//! Ghost values at the end of an active run of cells:
//!
//! * reflecting face: even extension (ghost = interior value); the face flux
//!   itself is forced to exactly zero.
//! * guard face: ghost = 0 (zero trace), placed at the mirrored cell center,
//!   for both the advective and the diffusive piece.

use crate::error::{Error, Result};
use crate::geometry::{FaceKind, Mesh};
use crate::model::ModeSpec;

pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a > 0.0 {
        a.min(b)
    } else {
        a.max(b)
    }
}

/// Ghost rule at one end of a run of active cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ghost {
    /// Reflecting neighbour: ghost mirrors the interior cell.
    Mirror,
    /// Guard neighbour: zero trace.
    Zero,
}

impl Ghost {
    fn value(self, interior: f64) -> f64 {
        match self {
            Ghost::Mirror => interior,
            Ghost::Zero => 0.0,
        }
    }
}

/// Reconstructed values at the low (`minus`) and high (`plus`) face of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceStates {
    pub minus: f64,
    pub plus: f64,
}

/// Limited piecewise-linear reconstruction along one run of active cells.
pub fn reconstruct(values: &[f64], low: Ghost, high: Ghost) -> Vec<FaceStates> {
    let mut out = Vec::with_capacity(values.len());
    reconstruct_into(values, low, high, &mut out);
    out
}

fn reconstruct_into(values: &[f64], low: Ghost, high: Ghost, out: &mut Vec<FaceStates>) {
    out.clear();
    let n = values.len();
    for (i, &p) in values.iter().enumerate() {
        let left = if i == 0 { low.value(p) } else { values[i - 1] };
        let right = if i + 1 == n { high.value(p) } else { values[i + 1] };
        // slope * dx / 2
        let half = 0.5 * minmod(p - left, right - p);
        out.push(FaceStates {
            minus: p - half,
            plus: p + half,
        });
    }
}

/// Upwind flux from the reconstructed states on either side of a face.
pub fn advective_face_flux(u_left: f64, u_right: f64, v: f64) -> f64 {
    if v > 0.0 {
        v * u_left
    } else if v < 0.0 {
        v * u_right
    } else {
        0.0
    }
}

/// Centered diffusive flux `-(sigma^2 / 2) (p_R - p_L) / dx`.
pub fn diffusive_face_flux(p_left: f64, p_right: f64, dx: f64, sigma: f64) -> f64 {
    -0.5 * sigma * sigma * (p_right - p_left) / dx
}

/// Normal flux on every face, oriented along the positive axis direction,
/// per unit face measure. Non-faces hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFluxField {
    pub axes: [Vec<f64>; 2],
}

impl FaceFluxField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            axes: [vec![0.0; mesh.face_count(0)], vec![0.0; mesh.face_count(1)]],
        }
    }
}

fn ghost_for(kind: Option<FaceKind>) -> Result<Ghost> {
    match kind {
        Some(FaceKind::Reflecting { .. }) => Ok(Ghost::Mirror),
        Some(FaceKind::Guard { .. }) => Ok(Ghost::Zero),
        other => Err(Error::Config(format!(
            "face classification inconsistent: run of active cells ends at {other:?}"
        ))),
    }
}

/// Discrete probability current of one mode.
pub fn compute_current(mode: &ModeSpec, field: &[f64]) -> Result<FaceFluxField> {
    let mesh = mode.mesh();
    if field.len() != mesh.n_cells() {
        return Err(Error::SizeMismatch {
            expected: mesh.n_cells(),
            actual: field.len(),
        });
    }
    let faces = mode.faces();
    let sigma = mode.sigma();
    let [na, nb] = mesh.shape();
    let mut flux = FaceFluxField::zeros(mesh);

    let mut values = Vec::new();
    let mut states = Vec::new();
    for axis in 0..mesh.dim() {
        let dx = mesh.spacing(axis);
        let velocity = mode.face_velocity(axis);
        let out = &mut flux.axes[axis];
        let (n_lines, len) = if axis == 0 { (nb, na) } else { (na, nb) };
        let cell_at = |line: usize, pos: usize| {
            if axis == 0 {
                mesh.cell_index(pos, line)
            } else {
                mesh.cell_index(line, pos)
            }
        };
        // Face on the low side of position `pos` (pos == len is the far end).
        let face_at = |line: usize, pos: usize| {
            if axis == 0 {
                mesh.face_index(0, pos, line)
            } else {
                mesh.face_index(1, line, pos)
            }
        };

        for line in 0..n_lines {
            let mut pos = 0;
            while pos < len {
                if !mesh.is_active(cell_at(line, pos)) {
                    pos += 1;
                    continue;
                }
                let start = pos;
                while pos < len && mesh.is_active(cell_at(line, pos)) {
                    pos += 1;
                }
                let end = pos;

                values.clear();
                values.extend((start..end).map(|p| field[cell_at(line, p)]));
                let low_face = face_at(line, start);
                let high_face = face_at(line, end);
                let low = ghost_for(faces.kind(axis, low_face))?;
                let high = ghost_for(faces.kind(axis, high_face))?;
                reconstruct_into(&values, low, high, &mut states);

                for k in 0..values.len() - 1 {
                    let f = face_at(line, start + k + 1);
                    out[f] = advective_face_flux(states[k].plus, states[k + 1].minus, velocity[f])
                        + diffusive_face_flux(values[k], values[k + 1], dx, sigma);
                }
                out[low_face] = match low {
                    Ghost::Mirror => 0.0,
                    Ghost::Zero => {
                        advective_face_flux(0.0, states[0].minus, velocity[low_face])
                            + diffusive_face_flux(0.0, values[0], dx, sigma)
                    }
                };
                let last = values.len() - 1;
                out[high_face] = match high {
                    Ghost::Mirror => 0.0,
                    Ghost::Zero => {
                        advective_face_flux(states[last].plus, 0.0, velocity[high_face])
                            + diffusive_face_flux(values[last], 0.0, dx, sigma)
                    }
                };
            }
        }
    }

    for (axis, values) in flux.axes.iter().enumerate() {
        if let Some(face) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFlux {
                mode: mode.id(),
                axis,
                face,
            });
        }
    }
    Ok(flux)
}

/// Net outflow rate per unit volume of every active cell, so that
/// `dp/dt = -divergence + source`. Inactive cells get zero.
pub fn divergence(flux: &FaceFluxField, mode: &ModeSpec) -> Vec<f64> {
    let mesh = mode.mesh();
    let volume = mesh.cell_volume();
    let mut out = vec![0.0; mesh.n_cells()];
    for cell in mesh.active_cells() {
        let mut net = 0.0;
        for axis in 0..mesh.dim() {
            let (lo, hi) = mesh.cell_faces(cell, axis);
            net += (flux.axes[axis][hi] - flux.axes[axis][lo]) * mesh.face_measure(axis);
        }
        out[cell] = net / volume;
    }
    out
}

/// Total outward flux rate through reflecting and guard faces.
pub fn boundary_outflow(flux: &FaceFluxField, mode: &ModeSpec) -> f64 {
    let mesh = mode.mesh();
    let mut total = 0.0;
    for axis in 0..mesh.dim() {
        for (face, value) in flux.axes[axis].iter().enumerate() {
            let outward = match mode.faces().kind(axis, face) {
                Some(FaceKind::Reflecting { outward }) | Some(FaceKind::Guard { outward, .. }) => outward,
                _ => continue,
            };
            total += outward.sign() * value * mesh.face_measure(axis);
        }
    }
    total
}
