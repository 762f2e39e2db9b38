//! Hybrid system definition: modes, drift fields, resets and scenarios.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{classify_faces, FaceClassification, Mesh};
use crate::integrate::{cfl_dt, HybridDensity};

/// User-facing mode label (the reference scenario uses 1 and 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeId(pub u32);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Mode-1 drift: boundary-tangent clockwise rotation about (0.5, 0.5) with
/// contraction toward the center.
pub fn eval_drift_mode1(x_a: f64, x_b: f64, alpha1: f64, gamma1: f64) -> [f64; 2] {
    [
        x_a * (1.0 - x_a) * (alpha1 * (x_b - 0.5) - gamma1 * (x_a - 0.5)),
        x_b * (1.0 - x_b) * (-alpha1 * (x_a - 0.5) - gamma1 * (x_b - 0.5)),
    ]
}

/// Mode-2 drift: affine shift toward `x_C = 2`.
pub fn eval_drift_mode2(x_c: f64, gamma2: f64) -> f64 {
    -gamma2 * (x_c - 2.0)
}

/// Extension point for drift fields other than the built-ins.
pub trait DriftField: Send + Sync + fmt::Debug {
    /// Drift at `x`; unused trailing components are ignored for 1D modes.
    fn eval(&self, x: [f64; 2]) -> [f64; 2];
}

#[derive(Debug, Clone)]
pub enum Drift {
    /// [`eval_drift_mode1`] with gains `alpha` and `gamma` (2D only).
    Rotation { alpha: f64, gamma: f64 },
    /// [`eval_drift_mode2`] with gain `gamma` (1D only).
    Shift { gamma: f64 },
    Zero,
    Custom(Arc<dyn DriftField>),
}

impl Drift {
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Drift::Rotation { alpha, gamma } => eval_drift_mode1(x[0], x[1], *alpha, *gamma),
            Drift::Shift { gamma } => [eval_drift_mode2(x[0], *gamma), 0.0],
            Drift::Zero => [0.0; 2],
            Drift::Custom(f) => f.eval(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reset {
    /// Two particles merge at their midpoint: `(x_A, x_B) -> (x_A + x_B) / 2`.
    MidpointMerge { target: ModeId },
    /// Everything is sent to `point`; numerically smoothed over `delta_width`.
    PointSplit {
        target: ModeId,
        point: [f64; 2],
        delta_width: f64,
    },
}

impl Reset {
    pub fn target(&self) -> ModeId {
        match self {
            Reset::MidpointMerge { target } | Reset::PointSplit { target, .. } => *target,
        }
    }
}

/// Image of a guard position under the reset map.
pub fn reset_point(reset: &Reset, position: [f64; 2]) -> (ModeId, [f64; 2]) {
    match reset {
        Reset::MidpointMerge { target } => (*target, [0.5 * (position[0] + position[1]), 0.0]),
        Reset::PointSplit { target, point, .. } => (*target, *point),
    }
}

#[derive(Debug, Clone)]
pub struct ModeSpec {
    id: ModeId,
    mesh: Mesh,
    drift: Drift,
    sigma: f64,
    faces: FaceClassification,
    reset: Option<Reset>,
    face_velocity: [Vec<f64>; 2],
}

impl ModeSpec {
    pub fn new(id: ModeId, mesh: Mesh, drift: Drift, sigma: f64, reset: Option<Reset>) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("{sigma} must be finite and >= 0")));
        }
        match (&drift, mesh.dim()) {
            (Drift::Rotation { .. }, 1) => {
                return Err(Error::invalid("drift", "rotation drift needs a 2D mode"))
            }
            (Drift::Shift { .. }, 2) => {
                return Err(Error::invalid("drift", "shift drift needs a 1D mode"))
            }
            _ => {}
        }
        let faces = classify_faces(&mesh);
        if faces.has_guards() && reset.is_none() {
            return Err(Error::Config(format!("mode {id} has guard faces but no reset")));
        }
        let face_velocity = [0, 1].map(|axis| {
            (0..mesh.face_count(axis))
                .map(|f| drift.eval(mesh.face_centroid(axis, f))[axis])
                .collect()
        });
        Ok(Self {
            id,
            mesh,
            drift,
            sigma,
            faces,
            reset,
            face_velocity,
        })
    }

    pub fn id(&self) -> ModeId {
        self.id
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn faces(&self) -> &FaceClassification {
        &self.faces
    }

    pub fn reset(&self) -> Option<&Reset> {
        self.reset.as_ref()
    }

    /// Face-normal drift at the centroid of every face normal to `axis`.
    pub fn face_velocity(&self, axis: usize) -> &[f64] {
        &self.face_velocity[axis]
    }
}

/// Gaussian with diagonal covariance, truncated to the active cells of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    pub mode: ModeId,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub n_particles: usize,
    pub seed: u64,
}

/// What to do when the time step violates the CFL bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CflMode {
    Error,
    Warn,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    modes: Vec<ModeSpec>,
    initial: InitialSpec,
    t_final: f64,
    n_steps: usize,
    snapshot_stride: usize,
    mc: McSettings,
    cfl_mode: CflMode,
}

impl Scenario {
    pub fn new(
        modes: Vec<ModeSpec>,
        initial: InitialSpec,
        t_final: f64,
        n_steps: usize,
        snapshot_stride: usize,
        mc: McSettings,
        cfl_mode: CflMode,
    ) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Config("a scenario needs at least one mode".into()));
        }
        for (k, m) in modes.iter().enumerate() {
            if modes[..k].iter().any(|o| o.id == m.id) {
                return Err(Error::Config(format!("duplicate mode id {}", m.id)));
            }
        }
        if !(t_final.is_finite() && t_final >= 0.0) {
            return Err(Error::invalid("T", format!("{t_final} must be finite and >= 0")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        if snapshot_stride == 0 {
            return Err(Error::invalid("snapshot_stride", "must be at least 1"));
        }
        if mc.n_particles == 0 {
            return Err(Error::invalid("n_particles", "must be at least 1"));
        }
        let scenario = Self {
            modes,
            initial,
            t_final,
            n_steps,
            snapshot_stride,
            mc,
            cfl_mode,
        };
        scenario.validate_resets()?;
        scenario.validate_initial()?;
        scenario.validate_cfl()?;
        Ok(scenario)
    }

    fn validate_resets(&self) -> Result<()> {
        for mode in &self.modes {
            let Some(reset) = mode.reset() else { continue };
            let target = self.mode(reset.target())?;
            match reset {
                Reset::MidpointMerge { .. } => {
                    if mode.dim() != 2 || target.dim() != 1 {
                        return Err(Error::Config(format!(
                            "midpoint merge from mode {} to mode {} needs a 2D source and a 1D target",
                            mode.id,
                            target.id
                        )));
                    }
                }
                Reset::PointSplit {
                    point, delta_width, ..
                } => {
                    let mesh = target.mesh();
                    if !mesh.contains(*point) || !mesh.is_active(mesh.locate(*point)) {
                        return Err(Error::Config(format!(
                            "reset point ({}, {}) is not in an active cell of mode {}",
                            point[0], point[1], target.id
                        )));
                    }
                    let width = (0..mesh.dim()).map(|k| mesh.spacing(k)).fold(0.0, f64::max);
                    if !(delta_width.is_finite() && *delta_width >= width * (1.0 - 1e-12)) {
                        return Err(Error::invalid(
                            "delta_width",
                            format!("{delta_width} is below the target cell width {width}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_initial(&self) -> Result<()> {
        let mode = self.mode(self.initial.mode)?;
        let d = mode.dim();
        if self.initial.mean.len() != d || self.initial.variance.len() != d {
            return Err(Error::Config(format!(
                "initial mean/variance must have {d} component(s) for mode {}",
                mode.id
            )));
        }
        if self.initial.variance.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("variance", "entries must be positive"));
        }
        Ok(())
    }

    fn validate_cfl(&self) -> Result<()> {
        if self.t_final == 0.0 {
            return Ok(());
        }
        let dt = self.dt();
        let bound = cfl_dt(self);
        if dt > 0.9 * bound {
            match self.cfl_mode {
                CflMode::Error => return Err(Error::CflViolation { dt, bound }),
                CflMode::Warn => log::warn!("time step {dt:e} exceeds 0.9 x CFL bound {bound:e}"),
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn mode_index(&self, id: ModeId) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.id == id)
            .ok_or(Error::UnknownMode(id))
    }

    pub fn mode(&self, id: ModeId) -> Result<&ModeSpec> {
        self.mode_index(id).map(|k| &self.modes[k])
    }

    pub fn mode_ids(&self) -> Vec<ModeId> {
        self.modes.iter().map(|m| m.id).collect()
    }

    pub fn initial(&self) -> &InitialSpec {
        &self.initial
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn snapshot_stride(&self) -> usize {
        self.snapshot_stride
    }

    pub fn mc(&self) -> McSettings {
        self.mc
    }

    pub fn cfl_mode(&self) -> CflMode {
        self.cfl_mode
    }

    /// Copy with a different horizon and step count (revalidated).
    pub fn with_horizon(&self, t_final: f64, n_steps: usize) -> Result<Self> {
        Self::new(
            self.modes.clone(),
            self.initial.clone(),
            t_final,
            n_steps,
            self.snapshot_stride,
            self.mc,
            self.cfl_mode,
        )
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::invalid("snapshot_stride", "must be at least 1"));
        }
        self.snapshot_stride = stride;
        Ok(self)
    }

    pub fn with_mc(mut self, mc: McSettings) -> Result<Self> {
        if mc.n_particles == 0 {
            return Err(Error::invalid("n_particles", "must be at least 1"));
        }
        self.mc = mc;
        Ok(self)
    }
}

/// Unnormalized diagonal Gaussian.
fn gaussian(x: [f64; 2], mean: &[f64], variance: &[f64]) -> f64 {
    let q: f64 = mean
        .iter()
        .zip(variance)
        .enumerate()
        .map(|(k, (m, v))| (x[k] - m).powi(2) / v)
        .sum();
    (-0.5 * q).exp()
}

/// Initial density: the truncated Gaussian on the active cells of the initial
/// mode, rescaled to unit mass; every other mode is zero.
pub fn init_density(scenario: &Scenario) -> Result<HybridDensity> {
    let init = scenario.initial();
    let k0 = scenario.mode_index(init.mode)?;
    let mut fields: Vec<Vec<f64>> = scenario
        .modes()
        .iter()
        .map(|m| vec![0.0; m.mesh().n_cells()])
        .collect();
    let mesh = scenario.modes()[k0].mesh();
    let field = &mut fields[k0];
    for cell in mesh.active_cells() {
        field[cell] = gaussian(mesh.cell_center(cell), &init.mean, &init.variance);
    }
    let mass: f64 = field.iter().sum::<f64>() * mesh.cell_volume();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::EmptyDensity { mode: init.mode });
    }
    for v in field.iter_mut() {
        *v /= mass;
    }
    Ok(HybridDensity { fields, t: 0.0 })
}
