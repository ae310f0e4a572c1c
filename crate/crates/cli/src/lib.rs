//! Configuration, orchestration and file formats around `polepath-core`.
//!
//! A run is described by one JSON [`config::RunConfig`]. Each command writes
//! its CSV files first and `manifest.json` last, so a directory without a
//! manifest holds an interrupted run.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
#[cfg(feature = "lapack")]
pub mod lapack;
pub mod manifest;
pub mod rows;
pub mod run;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use manifest::RunManifest;

use polepath_core::eigen::{DenseSchur, EigenSolver};

/// The fastest eigensolver compiled in, with its name for the manifest.
pub fn default_eigensolver() -> (Box<dyn EigenSolver + Sync>, &'static str) {
    #[cfg(feature = "lapack")]
    {
        (Box::new(lapack::Lapack), "lapack-zgeev")
    }
    #[cfg(not(feature = "lapack"))]
    {
        (Box::new(DenseSchur), "nalgebra-schur")
    }
}

/// The pure-Rust solver, always available.
pub fn reference_eigensolver() -> DenseSchur {
    DenseSchur
}
