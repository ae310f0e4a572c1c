//! The coupled-channel problem: thresholds, angular momenta, reduced mass and a
//! parameterized potential matrix.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{RMatrix, C64};
use crate::math;
use crate::{Error, Result};

/// Absolute tail tolerance used by [`ChannelModel::tail_check`].
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

/// One scattering channel.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Channel {
    /// Threshold energy ξ.
    pub threshold: f64,
    /// Orbital angular momentum l.
    pub angular_momentum: u32,
}

impl Channel {
    pub fn new(threshold: f64, angular_momentum: u32) -> Self {
        Self { threshold, angular_momentum }
    }
}

/// Model parameters: the two channel well depths and the coupling strength.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamVector {
    pub lambda1: f64,
    pub lambda2: f64,
    pub coupling: f64,
}

impl ParamVector {
    pub const fn new(lambda1: f64, lambda2: f64, coupling: f64) -> Self {
        Self { lambda1, lambda2, coupling }
    }

    pub fn is_finite(&self) -> bool {
        self.lambda1.is_finite() && self.lambda2.is_finite() && self.coupling.is_finite()
    }

    /// `self + s * other`, componentwise.
    pub fn axpy(&self, s: f64, other: &ParamVector) -> ParamVector {
        ParamVector {
            lambda1: self.lambda1 + s * other.lambda1,
            lambda2: self.lambda2 + s * other.lambda2,
            coupling: self.coupling + s * other.coupling,
        }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.lambda1, self.lambda2, self.coupling]
    }
}

/// Affine map from the continuation scalar λ to a [`ParamVector`]:
/// `p(λ) = base + λ·direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamBinding {
    pub base: ParamVector,
    pub direction: ParamVector,
}

impl ParamBinding {
    pub fn new(base: ParamVector, direction: ParamVector) -> Result<Self> {
        if !base.is_finite() || !direction.is_finite() {
            return Err(Error::InvalidArgument("parameter binding must be finite".into()));
        }
        Ok(Self { base, direction })
    }

    /// λ ↦ (λ, λ, coupling).
    pub fn well_depths(coupling: f64) -> Self {
        Self { base: ParamVector::new(0.0, 0.0, coupling), direction: ParamVector::new(1.0, 1.0, 0.0) }
    }

    /// λ ↦ (lambda1, lambda2, λ).
    pub fn coupling(lambda1: f64, lambda2: f64) -> Self {
        Self { base: ParamVector::new(lambda1, lambda2, 0.0), direction: ParamVector::new(0.0, 0.0, 1.0) }
    }

    /// A binding that ignores λ.
    pub fn constant(p: ParamVector) -> Self {
        Self { base: p, direction: ParamVector::default() }
    }

    #[inline]
    pub fn at(&self, lambda: f64) -> ParamVector {
        self.base.axpy(lambda, &self.direction)
    }

    /// Component-wise derivative `dp/dλ`.
    pub fn derivative(&self) -> ParamVector {
        self.direction
    }
}

/// A parameterized, real, symmetric potential matrix.
///
/// `eval` writes the `n × n` row-major matrix `V(r; p)` into `out`. Only the
/// diagonal and the upper triangle are read back by [`ChannelModel`]; the
/// lower triangle is mirrored so the result is exactly symmetric.
pub trait Potential: Send + Sync {
    fn eval(&self, r: f64, p: &ParamVector, out: &mut [f64]);

    /// Analytic continuation to complex radius. Returns `false` if the
    /// potential has none, in which case callers fall back to `Re z`.
    fn eval_complex(&self, _z: C64, _p: &ParamVector, _out: &mut [C64]) -> bool {
        false
    }
}

/// Wraps a closure as a [`Potential`] (no analytic continuation).
pub struct FnPotential<F>(pub F);

impl<F> Potential for FnPotential<F>
where
    F: Fn(f64, &ParamVector, &mut [f64]) + Send + Sync,
{
    fn eval(&self, r: f64, p: &ParamVector, out: &mut [f64]) {
        (self.0)(r, p, out)
    }
}

/// `V_ii = −λ_i exp(−r²/4)`, `V_12 = V_21 = λ_c exp(−r²)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GaussianTwoChannel;

impl GaussianTwoChannel {
    /// `∂V/∂p` contracted with `dp`. The family is linear in its parameters,
    /// so this is just `V(r; dp)`.
    pub fn param_derivative(&self, r: f64, dp: &ParamVector, out: &mut [f64]) {
        self.eval(r, dp, out)
    }
}

impl Potential for GaussianTwoChannel {
    fn eval(&self, r: f64, p: &ParamVector, out: &mut [f64]) {
        let r2 = r * r;
        let wide = math::exp(-0.25 * r2);
        let narrow = math::exp(-r2);
        out[0] = -p.lambda1 * wide;
        out[1] = p.coupling * narrow;
        out[2] = out[1];
        out[3] = -p.lambda2 * wide;
    }

    fn eval_complex(&self, z: C64, p: &ParamVector, out: &mut [C64]) -> bool {
        let z2 = z * z;
        let wide = (z2 * -0.25).exp();
        let narrow = (-z2).exp();
        out[0] = wide * -p.lambda1;
        out[1] = narrow * p.coupling;
        out[2] = out[1];
        out[3] = wide * -p.lambda2;
        true
    }
}

/// A coupled-channel radial problem on a uniform grid `r_n = n·r_max/(n_grid − 1)`.
#[derive(Clone)]
pub struct ChannelModel {
    channels: Vec<Channel>,
    mass: f64,
    potential: Arc<dyn Potential>,
    r_max: f64,
    grid_points: usize,
}

impl fmt::Debug for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelModel")
            .field("channels", &self.channels)
            .field("mass", &self.mass)
            .field("r_max", &self.r_max)
            .field("grid_points", &self.grid_points)
            .finish_non_exhaustive()
    }
}

impl ChannelModel {
    pub fn new(
        channels: Vec<Channel>,
        mass: f64,
        potential: Arc<dyn Potential>,
        r_max: f64,
        grid_points: usize,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidArgument("at least one channel is required".into()));
        }
        if channels.iter().any(|c| !c.threshold.is_finite()) {
            return Err(Error::InvalidArgument("channel thresholds must be finite".into()));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("r_max must be positive, got {r_max}")));
        }
        if grid_points < 16 {
            return Err(Error::InvalidArgument(format!("need at least 16 grid points, got {grid_points}")));
        }
        Ok(Self { channels, mass, potential, r_max, grid_points })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn step(&self) -> f64 {
        self.r_max / (self.grid_points - 1) as f64
    }

    pub fn potential(&self) -> &Arc<dyn Potential> {
        &self.potential
    }

    /// Same model on a different grid.
    pub fn with_grid(&self, grid_points: usize) -> Result<Self> {
        Self::new(self.channels.clone(), self.mass, self.potential.clone(), self.r_max, grid_points)
    }

    /// Same model with a different matching radius and grid.
    pub fn with_radius(&self, r_max: f64, grid_points: usize) -> Result<Self> {
        Self::new(self.channels.clone(), self.mass, self.potential.clone(), r_max, grid_points)
    }

    /// Writes the symmetrized potential into `out` (row-major, `n × n`).
    #[inline]
    pub fn eval_potential_into(&self, r: f64, p: &ParamVector, out: &mut [f64]) {
        let n = self.channels.len();
        self.potential.eval(r, p, out);
        for i in 0..n {
            for j in 0..i {
                out[i * n + j] = out[j * n + i];
            }
        }
    }

    pub fn eval_potential(&self, r: f64, p: &ParamVector) -> RMatrix {
        let n = self.channels.len();
        let mut m = RMatrix::zeros(n);
        self.eval_potential_into(r, p, m.as_mut_slice());
        m
    }

    /// Complex-radius potential, symmetrized. Falls back to `V(Re z)` when the
    /// potential has no analytic continuation; the return value says which.
    pub fn eval_potential_complex_into(&self, z: C64, p: &ParamVector, out: &mut [C64]) -> bool {
        let n = self.channels.len();
        let analytic = self.potential.eval_complex(z, p, out);
        if !analytic {
            let mut re = vec![0.0; n * n];
            self.eval_potential_into(z.re, p, &mut re);
            for (o, v) in out.iter_mut().zip(re) {
                *o = C64::new(v, 0.0);
            }
            return false;
        }
        for i in 0..n {
            for j in 0..i {
                out[i * n + j] = out[j * n + i];
            }
        }
        true
    }

    /// Largest absolute potential entry at `r_max`.
    pub fn tail_magnitude(&self, p: &ParamVector) -> f64 {
        self.eval_potential(self.r_max, p).max_abs()
    }

    /// `Ok(())` if the potential at `r_max` is below `tol`, otherwise the
    /// offending magnitude. Advisory: callers decide whether to warn.
    pub fn tail_check(&self, p: &ParamVector, tol: f64) -> core::result::Result<(), f64> {
        let m = self.tail_magnitude(p);
        if m <= tol {
            Ok(())
        } else {
            Err(m)
        }
    }

    /// Requires two channels with ξ₁ < ξ₂, as the uniformized mode does.
    pub fn check_uniformizable(&self) -> Result<()> {
        match self.channels.as_slice() {
            [a, b] if a.threshold < b.threshold => Ok(()),
            [_, _] => Err(Error::InvalidArgument("uniformized mode requires xi1 < xi2".into())),
            _ => Err(Error::InvalidArgument("uniformized mode requires exactly two channels".into())),
        }
    }

    /// Requires all thresholds to coincide.
    pub fn check_equal_thresholds(&self) -> Result<()> {
        let xi = self.channels[0].threshold;
        if self.channels.iter().all(|c| c.threshold == xi) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("equal-threshold mode requires identical thresholds".into()))
        }
    }
}

/// The two-channel Gaussian model with `l₁ = l₂ = 0`.
pub fn gaussian_two_channel(xi1: f64, xi2: f64, mass: f64, r_max: f64, n: usize) -> Result<ChannelModel> {
    if !(xi1 < xi2) {
        return Err(Error::InvalidArgument(format!("need xi1 < xi2, got {xi1} and {xi2}")));
    }
    ChannelModel::new(vec![Channel::new(xi1, 0), Channel::new(xi2, 0)], mass, Arc::new(GaussianTwoChannel), r_max, n)
}
