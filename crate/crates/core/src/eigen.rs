//! Eigenvalues of complex matrices.
//!
//! The exterior-scaled Hamiltonian is complex symmetric but not Hermitian, and
//! reductions built from complex orthogonal rotations lose accuracy
//! exponentially over the scaled region. Only unitary (Schur) methods are
//! used. Faster backends, such as a system LAPACK, plug in through
//! [`EigenSolver`].

use alloc::vec::Vec;

use crate::linalg::{CMatrix, C64};
use crate::{Error, Result};

/// All eigenvalues of a general complex square matrix.
pub trait EigenSolver {
    fn eigenvalues(&self, a: &CMatrix) -> Result<Vec<C64>>;
}

/// Schur decomposition in pure Rust. Slow for `n` in the thousands.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSchur;

impl EigenSolver for DenseSchur {
    fn eigenvalues(&self, a: &CMatrix) -> Result<Vec<C64>> {
        dense_eigenvalues(a)
    }
}

pub fn dense_eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    let n = a.dim();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[(i, j)]);
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 0).ok_or(Error::EigenNoConvergence)?;
    let ev = schur.eigenvalues().ok_or(Error::EigenNoConvergence)?;
    Ok(ev.iter().copied().collect())
}

pub fn sort_by_real(v: &mut [C64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
