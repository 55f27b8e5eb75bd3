//! gaplab: a numerical laboratory for Lavrentiev energy gaps in nonlocal
//! and mixed double-phase functionals.
//!
//! The crate builds generalized Cantor barriers and their self-similar
//! measures, explicit competitor fields with degenerate transition weights,
//! evaluates the four double-phase energy models by singular-kernel
//! quadrature, classifies parameter regimes, and runs end-to-end gap
//! demonstrations (mollification sweeps, Riesz-type inequality checks,
//! finiteness scans).

pub mod competitor;
pub mod config;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod field;
pub mod fractal;
pub mod geometry;
pub mod output;
pub mod regimes;

pub use error::{GapError, Result};

/// Artifact version stamped into every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
