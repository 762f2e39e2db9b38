//! Conservative finite-volume solver for hybrid Fokker-Planck equations.
//!
//! A stochastic hybrid system is a finite set of modes, each with its own
//! continuous domain, drift field and diffusion coefficient. Reaching a guard
//! triggers an instantaneous reset into another mode, possibly of a different
//! dimension. The density of each mode evolves as
//!
//! ```text
//! dp/dt + div(Y) = s,    Y = p X - (sigma^2 / 2) grad p
//! ```
//!
//! where the source `s` is the pushforward of the outgoing guard flux of every
//! mode whose reset lands in this one.
//!
//! Modules, bottom up:
//!
//! * [`geometry`]: structured grids, band masks and face classification.
//! * [`model`]: modes, drifts, resets, scenarios and the initial density.
//! * [`fvm`]: MUSCL/minmod upwind advection plus centered diffusion.
//! * [`coupling`]: guard flux extraction and reset pushforward.
//! * [`integrate`]: SSP-RK2 time stepping and run records.
//! * [`montecarlo`]: Euler-Maruyama particle reference.
//! * [`diagnostics`]: masses, L1 distances and the generator duality check.
//! * [`config`], [`output`], [`cli`]: scenario files, CSV output and the
//!   command line.

pub mod cli;
pub mod config;
pub mod coupling;
pub mod diagnostics;
mod error;
pub mod fvm;
pub mod geometry;
pub mod integrate;
pub mod model;
pub mod montecarlo;
pub mod output;

pub use error::{Error, Result};
pub use integrate::{HybridDensity, RunRecord};
pub use model::{ModeId, ModeSpec, Scenario};
