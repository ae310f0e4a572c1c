//! Tracing bound, virtual and resonant states of the coupled-channel radial
//! Schrödinger equation as zero curves of a regularized S-matrix function.
//!
//! The crate is `no_std` and only needs `alloc`. It provides:
//!
//! * [`model`]: channel thresholds, angular momenta, mass and a parameterized
//!   potential matrix, plus the affine map from a continuation scalar to
//!   model parameters.
//! * [`specfun`]: Riccati-Hankel functions of complex argument.
//! * [`solver`]: renormalized (ratio) Numerov propagation of the regular
//!   matrix solution to the matching radius.
//! * [`uniform`] and [`scattering`]: the two-channel uniformization `u ↦ E`,
//!   Wronskians, the S-matrix and the regularized function `F` whose zeros are
//!   the S-matrix poles.
//! * [`continuation`]: pseudo-arclength continuation of `F(u, λ) = 0` with
//!   simple branch-point detection and branch switching.
//! * [`ecs`] and [`eigen`]: an exterior-complex-scaling comparator.
//!
//! File formats, configuration and the command line live in the `polepath`
//! crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod continuation;
pub mod ecs;
pub mod eigen;
mod error;
pub mod linalg;
pub(crate) mod math;
pub mod model;
pub mod scattering;
pub mod solver;
pub mod specfun;
pub mod uniform;

pub use error::{Error, Result};
pub use linalg::{CMatrix, RMatrix, C64};
pub use model::{Channel, ChannelModel, ParamBinding, ParamVector, Potential};
pub use uniform::{Sheet, UniformPoint, Uniformizer};
