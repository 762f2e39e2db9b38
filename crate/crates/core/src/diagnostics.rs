//! Mass bookkeeping, density distances and the weak-form duality check
//! `d/dt <p, f> = <p, A f>` for reset-compatible observables.

use crate::error::{Error, Result};
use crate::geometry::{FaceKind, Mesh, Side};
use crate::integrate::{ssp_rk2_step, HybridDensity};
use crate::model::{reset_point, ModeId, ModeSpec, Scenario};

/// Integral of `field` over the active cells of `mesh`.
pub fn mass(field: &[f64], mesh: &Mesh) -> f64 {
    mesh.active_cells().map(|c| field[c]).sum::<f64>() * mesh.cell_volume()
}

/// `sum |a - b| * volume` over active cells.
pub fn l1_distance(a: &[f64], b: &[f64], mesh: &Mesh) -> Result<f64> {
    for v in [a, b] {
        if v.len() != mesh.n_cells() {
            return Err(Error::SizeMismatch {
                expected: mesh.n_cells(),
                actual: v.len(),
            });
        }
    }
    Ok(mesh.active_cells().map(|c| (a[c] - b[c]).abs()).sum::<f64>() * mesh.cell_volume())
}

/// Cell-centered observable, one field per mode in scenario order.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableField {
    pub fields: Vec<Vec<f64>>,
}

impl ObservableField {
    /// Sample `f(mode, center)` at every cell center.
    pub fn from_fn(scenario: &Scenario, f: impl Fn(ModeId, [f64; 2]) -> f64) -> Self {
        let fields = scenario
            .modes()
            .iter()
            .map(|m| {
                let mesh = m.mesh();
                (0..mesh.n_cells()).map(|c| f(m.id(), mesh.cell_center(c))).collect()
            })
            .collect();
        Self { fields }
    }

    pub fn constant(scenario: &Scenario, c: f64) -> Self {
        Self::from_fn(scenario, |_, _| c)
    }
}

/// `<p, f>` summed over modes.
pub fn pairing(p: &[Vec<f64>], f: &ObservableField, scenario: &Scenario) -> f64 {
    scenario
        .modes()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mesh = m.mesh();
            mesh.active_cells().map(|c| p[k][c] * f.fields[k][c]).sum::<f64>() * mesh.cell_volume()
        })
        .sum()
}

/// Value across one face as seen from `cell`: the neighbor for interior
/// faces, the cell itself (even extension) for reflecting faces, nothing at
/// guards.
fn across(mode: &ModeSpec, f: &[f64], cell: usize, axis: usize, side: Side) -> Option<(f64, Option<usize>)> {
    let mesh = mode.mesh();
    let (lo, hi) = mesh.cell_faces(cell, axis);
    let face = if side == Side::Low { lo } else { hi };
    match mode.faces().kind(axis, face)? {
        FaceKind::Interior => {
            let (a, b) = mesh.face_cells(axis, face);
            let n = if side == Side::Low { a } else { b }?;
            Some((f[n], Some(n)))
        }
        FaceKind::Reflecting { .. } => Some((f[cell], None)),
        FaceKind::Guard { .. } => None,
    }
}

/// First and second derivative along `axis` toward the open side, one-sided.
/// `toward` is the side that has neighbors.
fn one_sided(mode: &ModeSpec, f: &[f64], cell: usize, axis: usize, toward: Side, dx: f64) -> (f64, f64) {
    let s = toward.sign();
    let f0 = f[cell];
    let Some((f1, next)) = across(mode, f, cell, axis, toward) else {
        return (0.0, 0.0);
    };
    match next.and_then(|n| across(mode, f, n, axis, toward)) {
        Some((f2, _)) => (
            s * (4.0 * (f1 - f0) - (f2 - f0)) / (2.0 * dx),
            ((f0 - f1) + (f2 - f1)) / (dx * dx),
        ),
        None => (s * (f1 - f0) / dx, 0.0),
    }
}

/// Backward generator `X . grad f + (sigma^2 / 2) lap f` on the active cells
/// of `mode`: centered differences, even ghosts at reflecting faces and
/// one-sided differences next to guards.
pub fn apply_generator(f: &[f64], mode: &ModeSpec) -> Vec<f64> {
    let mesh = mode.mesh();
    let d = 0.5 * mode.sigma() * mode.sigma();
    let mut out = vec![0.0; mesh.n_cells()];
    for cell in mesh.active_cells() {
        let v = mode.drift().eval(mesh.cell_center(cell));
        let mut acc = 0.0;
        for (axis, va) in v.iter().enumerate().take(mesh.dim()) {
            let dx = mesh.spacing(axis);
            let lo = across(mode, f, cell, axis, Side::Low);
            let hi = across(mode, f, cell, axis, Side::High);
            let (d1, d2) = match (lo, hi) {
                (Some((a, _)), Some((b, _))) => ((b - a) / (2.0 * dx), ((a - f[cell]) + (b - f[cell])) / (dx * dx)),
                (Some(_), None) => one_sided(mode, f, cell, axis, Side::Low, dx),
                (None, Some(_)) => one_sided(mode, f, cell, axis, Side::High, dx),
                (None, None) => (0.0, 0.0),
            };
            acc += va * d1 + d * d2;
        }
        out[cell] = acc;
    }
    out
}

fn defect_of(f: &ObservableField, scenario: &Scenario, k: usize) -> Result<f64> {
    let mode = &scenario.modes()[k];
    let Some(reset) = mode.reset() else { return Ok(0.0) };
    let mesh = mode.mesh();
    let mut worst: f64 = 0.0;
    for (axis, face, outward, _) in mode.faces().guard_faces() {
        let (lo, hi) = mesh.face_cells(axis, face);
        // The active cell sits opposite to the outward normal.
        let Some(cell) = (if outward == Side::High { lo } else { hi }) else {
            continue;
        };
        let (target, image) = reset_point(reset, mesh.face_centroid(axis, face));
        let t = scenario.mode_index(target)?;
        let image_cell = scenario.modes()[t].mesh().locate(image);
        worst = worst.max((f.fields[k][cell] - f.fields[t][image_cell]).abs());
    }
    Ok(worst)
}

/// Largest mismatch `|f(guard cell) - f(image cell)|` over the guard faces of
/// one mode.
pub fn compatibility_defect_mode(f: &ObservableField, scenario: &Scenario, mode: ModeId) -> Result<f64> {
    defect_of(f, scenario, scenario.mode_index(mode)?)
}

/// Largest mismatch over the guard faces of every mode.
pub fn compatibility_defect(f: &ObservableField, scenario: &Scenario) -> Result<f64> {
    (0..scenario.modes().len()).try_fold(0.0, |acc: f64, k| Ok(acc.max(defect_of(f, scenario, k)?)))
}

/// `|(<p(t+dt), f> - <p(t), f>) / dt - sum_q <p_q, A_q f_q>|` with one
/// SSP-RK2 step as the time advance.
pub fn duality_residual(state: &HybridDensity, f: &ObservableField, scenario: &Scenario, dt_probe: f64) -> Result<f64> {
    let (next, _) = ssp_rk2_step(state, scenario, dt_probe)?;
    let rate = (pairing(&next.fields, f, scenario) - pairing(&state.fields, f, scenario)) / dt_probe;
    let generator: f64 = scenario
        .modes()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let af = apply_generator(&f.fields[k], m);
            let mesh = m.mesh();
            mesh.active_cells().map(|c| state.fields[k][c] * af[c]).sum::<f64>() * mesh.cell_volume()
        })
        .sum();
    Ok((rate - generator).abs())
}
