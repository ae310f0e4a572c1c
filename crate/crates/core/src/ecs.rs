//! Exterior complex scaling: a finite-difference Hamiltonian on the contour
//! `r(ρ) = ρ` for `ρ ≤ R₀` and `r(ρ) = R₀ + (ρ − R₀)e^{iθ}` beyond, whose
//! complex eigenvalues expose bound states and resonances directly.
//!
//! The kinetic term uses the three-point stencil for a non-uniform (complex)
//! mesh, symmetrized with `√w` so that the matrix is complex symmetric. At the
//! turn `ρ = R₀` the left and right spacings differ by `e^{iθ}`, which is the
//! only matching needed. Dirichlet conditions at both ends.

use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::{sort_by_real, DenseSchur, EigenSolver};
use crate::linalg::{CMatrix, C64};
use crate::model::{ChannelModel, ParamBinding, ParamVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct EcsConfig {
    pub grid_spacing: f64,
    pub scaling_radius: f64,
    /// Rotation angle in radians, `0 < θ < π/4`.
    pub angle: f64,
    /// Largest `Re r` of the grid.
    pub outer_extent: f64,
}

impl EcsConfig {
    /// Spacing 0.03, `R₀ = 12`, `θ = π/8`, extent 15.6.
    pub fn reference() -> Self {
        Self { grid_spacing: 0.03, scaling_radius: 12.0, angle: core::f64::consts::FRAC_PI_8, outer_extent: 15.6 }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.grid_spacing;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidConfig("ECS grid spacing must be positive".into()));
        }
        if !(self.angle > 0.0 && self.angle < core::f64::consts::FRAC_PI_4) {
            return Err(Error::InvalidConfig("ECS angle must lie in (0, pi/4)".into()));
        }
        if !(self.scaling_radius >= h && self.scaling_radius < self.outer_extent && self.outer_extent.is_finite()) {
            return Err(Error::InvalidConfig("ECS needs h <= R0 < outer extent".into()));
        }
        if self.points() < 2 {
            return Err(Error::InvalidConfig("ECS grid has fewer than two points".into()));
        }
        Ok(())
    }

    /// Interior grid points per channel (`ρ = h, 2h, …`, excluding the Dirichlet end).
    pub fn points(&self) -> usize {
        let m = libm::round(self.outer_extent / self.grid_spacing) as usize;
        m.saturating_sub(1)
    }

    /// Complex coordinates of the grid, including both Dirichlet ends.
    pub fn contour(&self) -> Vec<C64> {
        let m = self.points();
        let h = self.grid_spacing;
        let rot = C64::from_polar(1.0, self.angle);
        let map = |rho: f64| {
            if rho <= self.scaling_radius + 1e-12 * h {
                C64::new(rho, 0.0)
            } else {
                C64::new(self.scaling_radius, 0.0) + rot * (rho - self.scaling_radius)
            }
        };
        let mut z: Vec<C64> = (0..=m).map(|j| map(j as f64 * h)).collect();
        z.push(map(self.outer_extent));
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EcsSpectrum {
    pub lambda: f64,
    /// Sorted by real part.
    pub eigenvalues: Vec<C64>,
}

/// Kinetic stencil: diagonal and the coupling to the next point (symmetrized).
fn kinetic(cfg: &EcsConfig, mass: f64) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
    let z = cfg.contour();
    let m = cfg.points();
    let inv2mu = 1.0 / (2.0 * mass);
    let mut diag = Vec::with_capacity(m);
    let mut off = Vec::with_capacity(m.saturating_sub(1));
    let w: Vec<C64> = (1..=m).map(|j| (z[j + 1] - z[j - 1]) * 0.5).collect();
    for j in 1..=m {
        let a = z[j] - z[j - 1];
        let b = z[j + 1] - z[j];
        diag.push((a.inv() + b.inv()) / w[j - 1] * inv2mu);
        if j < m {
            off.push(-(b.inv()) / (w[j - 1] * w[j]).sqrt() * inv2mu);
        }
    }
    (diag, off, z[1..=m].to_vec())
}

/// Potential, thresholds and centrifugal term at each grid point.
fn local_terms(model: &ChannelModel, p: &ParamVector, z: &[C64]) -> Vec<C64> {
    let n = model.n_channels();
    let mu = model.mass();
    let mut out = vec![C64::new(0.0, 0.0); z.len() * n * n];
    for (k, &r) in z.iter().enumerate() {
        let block = &mut out[k * n * n..(k + 1) * n * n];
        model.eval_potential_complex_into(r, p, block);
        for (i, ch) in model.channels().iter().enumerate() {
            let l = f64::from(ch.angular_momentum);
            block[i * n + i] += ch.threshold + l * (l + 1.0) / (2.0 * mu * r * r);
        }
    }
    out
}

/// The `N·M × N·M` Hamiltonian in channel-major block form.
pub fn build_hamiltonian(model: &ChannelModel, cfg: &EcsConfig, p: &ParamVector) -> Result<CMatrix> {
    cfg.validate()?;
    let n = model.n_channels();
    let (diag, off, z) = kinetic(cfg, model.mass());
    let m = z.len();
    let local = local_terms(model, p, &z);
    let mut h = CMatrix::zeros(n * m);
    for c in 0..n {
        for j in 0..m {
            h[(c * m + j, c * m + j)] = diag[j];
            if j + 1 < m {
                h[(c * m + j, c * m + j + 1)] = off[j];
                h[(c * m + j + 1, c * m + j)] = off[j];
            }
        }
    }
    for j in 0..m {
        for a in 0..n {
            for b in 0..n {
                h[(a * m + j, b * m + j)] += local[j * n * n + a * n + b];
            }
        }
    }
    Ok(h)
}

/// All eigenvalues at parameters `p` from the pure-Rust Schur solver, sorted
/// by real part.
pub fn spectrum(model: &ChannelModel, cfg: &EcsConfig, p: &ParamVector) -> Result<Vec<C64>> {
    spectrum_with(&DenseSchur, model, cfg, p)
}

pub fn spectrum_with<S: EigenSolver + ?Sized>(
    solver: &S,
    model: &ChannelModel,
    cfg: &EcsConfig,
    p: &ParamVector,
) -> Result<Vec<C64>> {
    let h = build_hamiltonian(model, cfg, p)?;
    let mut ev = solver.eigenvalues(&h)?;
    if ev.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite("ECS eigenvalue"));
    }
    sort_by_real(&mut ev);
    Ok(ev)
}

/// Spectra along `λ ↦ binding.at(λ)`.
pub fn spectrum_sweep<S: EigenSolver + ?Sized>(
    solver: &S,
    model: &ChannelModel,
    cfg: &EcsConfig,
    binding: &ParamBinding,
    lambdas: &[f64],
) -> Result<Vec<EcsSpectrum>> {
    lambdas
        .iter()
        .map(|&lambda| Ok(EcsSpectrum { lambda, eigenvalues: spectrum_with(solver, model, cfg, &binding.at(lambda))? }))
        .collect()
}

/// The window plotted for comparison with continuation: `Im E > −0.5`,
/// `−2.5 < Re E < 1`.
pub fn relevant(eigenvalues: &[C64]) -> Vec<C64> {
    eigenvalues.iter().copied().filter(|e| e.im > -0.5 && e.re > -2.5 && e.re < 1.0).collect()
}

/// Default for [`bound_states`]. Weakly bound states reach the outer
/// Dirichlet wall and keep a small width until the binding grows.
pub const BOUND_ANGLE: f64 = 1e-2;

/// Eigenvalues below `threshold` lying within `angle` of the negative real
/// axis as seen from the threshold, i.e. `|Im E| < angle · (ξ − Re E)`.
pub fn bound_states(eigenvalues: &[C64], threshold: f64, angle: f64) -> Vec<C64> {
    eigenvalues.iter().copied().filter(|e| e.re < threshold && e.im.abs() < angle * (threshold - e.re)).collect()
}

/// Direction of the rotated continuum leaving `threshold`: the steepest
/// `arg(E − ξ)` among eigenvalues with `Re(E − ξ) > 0` and `|E − ξ| > 1`.
/// Low-lying box states of the unscaled region sit at smaller angles.
pub fn string_angle(eigenvalues: &[C64], threshold: f64) -> Option<f64> {
    eigenvalues
        .iter()
        .map(|e| e - threshold)
        .filter(|d| d.re > 0.0 && d.norm() > 1.0)
        .map(|d| d.arg())
        .min_by(f64::total_cmp)
}

/// Eigenvalues away from every rotated continuum string `arg(E − ξ) = −2θ`
/// (by more than `angle_tol`, measured from each threshold).
pub fn isolated(eigenvalues: &[C64], thresholds: &[f64], angle: f64, angle_tol: f64) -> Vec<C64> {
    eigenvalues
        .iter()
        .copied()
        .filter(|e| {
            thresholds.iter().all(|&xi| {
                let d = e - xi;
                d.norm() < 1e-12 || d.re < 0.0 || (d.arg() + 2.0 * angle).abs() > angle_tol
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gaussian_two_channel, Channel, FnPotential};
    use alloc::sync::Arc;

    fn small() -> EcsConfig {
        EcsConfig { grid_spacing: 0.1, scaling_radius: 6.0, angle: core::f64::consts::FRAC_PI_8, outer_extent: 9.0 }
    }

    fn model() -> ChannelModel {
        gaussian_two_channel(0.0, 0.5, 1.0, 4.8, 4096).unwrap()
    }

    fn free_single() -> ChannelModel {
        let pot = FnPotential(|_: f64, _: &ParamVector, out: &mut [f64]| out[0] = 0.0);
        ChannelModel::new(vec![Channel::new(0.0, 0)], 1.0, Arc::new(pot), 4.8, 64).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(EcsConfig::reference().validate().is_ok());
        assert_eq!(EcsConfig::reference().points(), 519);
        let bad = EcsConfig { angle: 1.0, ..EcsConfig::reference() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        let bad = EcsConfig { scaling_radius: 20.0, ..EcsConfig::reference() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn hamiltonian_is_complex_symmetric_not_hermitian() {
        let h = build_hamiltonian(&model(), &small(), &ParamVector::new(4.0, 4.0, 0.5)).unwrap();
        assert_eq!((&h - &h.transpose()).max_abs(), 0.0);
        assert!((&h - &h.adjoint()).max_abs() > 1e-3);
    }

    #[test]
    fn free_continuum_is_rotated_by_twice_the_angle() {
        let cfg = small();
        let ev = spectrum(&free_single(), &cfg, &ParamVector::default()).unwrap();
        assert_eq!(ev.len(), cfg.points());
        let angle = string_angle(&ev, 0.0).unwrap();
        assert!((angle + 2.0 * cfg.angle).abs() < 0.05, "{angle}");
        let on_line = ev.iter().filter(|e| (e.arg() + 2.0 * cfg.angle).abs() < 0.05).count();
        assert!(on_line >= 10, "{on_line}");
    }

    #[test]
    fn deep_bound_state_is_close_to_the_pole_energy() {
        let cfg = EcsConfig { grid_spacing: 0.06, scaling_radius: 8.0, ..EcsConfig::reference() };
        let ev = spectrum(&model(), &cfg, &ParamVector::new(4.0, 4.0, 0.5)).unwrap();
        // Continuation value for the deepest state at these parameters: −2.1940286.
        assert!((ev[0] - C64::new(-2.1940286, 0.0)).norm() < 1e-2, "{}", ev[0]);
    }

    #[test]
    fn bound_states_do_not_depend_on_the_angle() {
        let m = model();
        let p = ParamVector::new(4.0, 4.0, 0.5);
        let a = spectrum(&m, &small(), &p).unwrap();
        let b = spectrum(&m, &EcsConfig { angle: core::f64::consts::PI / 6.0, ..small() }, &p).unwrap();
        let bound = bound_states(&a, 0.0, BOUND_ANGLE);
        assert!(bound.len() >= 2);
        for e in bound {
            let d = b.iter().map(|y| (e - y).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-4, "{e}: {d}");
        }
    }
}
