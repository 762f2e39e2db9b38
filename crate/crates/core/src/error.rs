use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("guard band under-resolved: epsilon {epsilon} is below two cell widths ({two_dx})")]
    UnderResolvedBand { epsilon: f64, two_dx: f64 },

    #[error("initial density vanishes on every active cell of mode {mode}")]
    EmptyDensity { mode: ModeId },

    #[error("mode {0} is not part of the scenario")]
    UnknownMode(ModeId),

    #[error("non-finite probability current in mode {mode}, axis {axis}, face {face}")]
    NonFiniteFlux { mode: ModeId, axis: usize, face: usize },

    #[error("negative guard outflow {rate:e} in mode {mode} at ({}, {})", centroid[0], centroid[1])]
    NegativeGuardFlux { mode: ModeId, centroid: [f64; 2], rate: f64 },

    #[error("merge midpoint {x_c} outside admissible range [{lo}, {hi}]")]
    MidpointOutOfRange { x_c: f64, lo: f64, hi: f64 },

    #[error("point-source kernel at ({}, {}) with width {width} covers no active cell", point[0], point[1])]
    KernelOutsideDomain { point: [f64; 2], width: f64 },

    #[error("time step {dt:e} exceeds 0.9 x CFL bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("total mass drifted by {drift:e} in a single step")]
    MassDrift { drift: f64 },

    #[error("step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("particle still outside mode {mode} after one reflection at ({}, {}); reduce dt", position[0], position[1])]
    ReflectionOverflow { mode: ModeId, position: [f64; 2] },

    #[error("rejection sampling acceptance {rate:e} is below 1e-3")]
    LowAcceptance { rate: f64 },

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the scenario or its inputs rather than by a
    /// failure while computing.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::UnderResolvedBand { .. }
                | Error::EmptyDensity { .. }
                | Error::UnknownMode(_)
                | Error::CflViolation { .. }
                | Error::LowAcceptance { .. }
                | Error::Parse { .. }
                | Error::Config(_)
        )
    }
}
