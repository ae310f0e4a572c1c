//! Small dense matrices.
//!
//! Channel matrices are tiny (N = 1, 2, occasionally a few more), so these
//! types are plain row-major `Vec` storage with LU-based determinant and
//! inverse. The `*_into` kernels work on caller-owned buffers and are what the
//! propagator's inner loop uses.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

pub use num_complex::Complex64 as C64;

/// Square real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Bitwise symmetry check.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)].to_bits() == self[(j, i)].to_bits()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_complex(&self) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().map(|&v| C64::new(v, 0.0)).collect() }
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for RMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Wraps row-major storage. Panics if `data.len() != n * n`.
    pub fn from_vec(n: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix storage size mismatch");
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn norm_fro(&self) -> f64 {
        crate::math::sqrt(self.data.iter().map(|v| v.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> C64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = C64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x * n + k].norm().total_cmp(&a[y * n + k].norm())).unwrap_or(k);
            if a[p * n + k] == C64::new(0.0, 0.0) {
                return C64::new(0.0, 0.0);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                for j in k + 1..n {
                    let v = a[k * n + j];
                    a[i * n + j] -= f * v;
                }
            }
        }
        det
    }

    /// Inverse, or `None` if a pivot vanishes exactly.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        let mut work = self.data.clone();
        if invert_into(n, &mut work, &mut out) {
            Some(Self { n, data: out })
        } else {
            None
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let mut out = CMatrix::zeros(self.n);
        mul_into(self.n, &self.data, &rhs.data, &mut out.data);
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// `out = a * b` for row-major `n × n` slices.
#[inline]
pub fn mul_into(n: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = acc;
        }
    }
}

/// Gauss-Jordan inversion with partial pivoting. `a` is destroyed. Returns
/// `false` when a pivot is exactly zero.
pub fn invert_into(n: usize, a: &mut [C64], out: &mut [C64]) -> bool {
    if n == 1 {
        if a[0] == C64::new(0.0, 0.0) {
            return false;
        }
        out[0] = a[0].inv();
        return true;
    }
    if n == 2 {
        let det = a[0] * a[3] - a[1] * a[2];
        if det == C64::new(0.0, 0.0) {
            return false;
        }
        let inv = det.inv();
        out[0] = a[3] * inv;
        out[1] = -a[1] * inv;
        out[2] = -a[2] * inv;
        out[3] = a[0] * inv;
        return true;
    }
    for v in out.iter_mut() {
        *v = C64::new(0.0, 0.0);
    }
    for i in 0..n {
        out[i * n + i] = C64::new(1.0, 0.0);
    }
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].norm_sqr();
        for i in k + 1..n {
            let v = a[i * n + k].norm_sqr();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return false;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
                out.swap(k * n + j, p * n + j);
            }
        }
        let inv_pivot = a[k * n + k].inv();
        for j in 0..n {
            a[k * n + j] *= inv_pivot;
            out[k * n + j] *= inv_pivot;
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = a[i * n + k];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let (akj, okj) = (a[k * n + j], out[k * n + j]);
                a[i * n + j] -= f * akj;
                out[i * n + j] -= f * okj;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inverse_round_trips_for_several_sizes() {
        for n in 1..=4 {
            let m = CMatrix::from_fn(n, |i, j| {
                c(1.0 + (i * 3 + j) as f64 * 0.37, (i as f64 - j as f64) * 0.51)
                    + if i == j { c(2.0, 0.0) } else { c(0.0, 0.0) }
            });
            let inv = m.inverse().unwrap();
            let prod = &m * &inv;
            let err = (&prod - &CMatrix::identity(n)).max_abs();
            assert!(err < 1e-13, "n = {n}, err = {err}");
        }
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = CMatrix::from_fn(3, |i, j| c((i + 2 * j) as f64 - 1.5, (i * j) as f64 * 0.25 + 0.1));
        let a = |i, j| m[(i, j)];
        let cof = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        assert!((m.det() - cof).norm() < 1e-12);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = CMatrix::from_fn(3, |i, _| c(i as f64, 0.0));
        assert!(m.inverse().is_none());
        assert_eq!(CMatrix::zeros(2).inverse(), None);
    }
}
