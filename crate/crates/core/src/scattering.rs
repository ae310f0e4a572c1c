//! Wronskians, the S-matrix and the regularized pole function `F`.
//!
//! For channel momenta `kᵢ` and the regular solution matrix `Ψ` at `r₀`,
//! `W± = 𝒲[diag ĥ±(kᵢr), Ψ]` and `S = K^{−1/2} W₋ W₊⁻¹ K^{1/2}`. The poles of
//! `S` are the zeros of `det W₊`.
//!
//! With the entire functions `q_l = z^l ĥ⁺_l` and `g_l = ĵ_l / z^{l+1}`
//! (evaluated at `kᵢr₀`), define the rows
//!
//! ```text
//! P_i = q ψ′_i − (k q′ − l q / r₀) ψ_i      (kᵢ^{lᵢ} times row i of W₊)
//! R_i = g ψ′_i − (k g′ + (l+1) g / r₀) ψ_i
//! ```
//!
//! Two pole functions are available, both finite at the thresholds `kᵢ = 0`:
//!
//! * [`regularized_from`]: `det P` in the canonical regular basis (fixed start
//!   normalization at the origin). This is a regularized Jost determinant,
//!   analytic in `u` with no poles, and it is what [`Evaluator::f`] returns.
//! * [`ratio_form_from`]: `∏ kᵢ^{2lᵢ+1} / det(S − I) = det P / ((−2i)^N ∏ r₀^{2lᵢ+1} det R)`.
//!   It has the same zeros but also a pole wherever `det(S − I) = 0`, and for
//!   strongly closed channels such a pole sits exponentially close to every
//!   zero, so it is only used for comparison.

use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::{Cell, RefCell};

use crate::continuation::ContinuationSystem;
use crate::linalg::{CMatrix, C64};
use crate::math;
use crate::model::{ChannelModel, ParamBinding, ParamVector};
use crate::solver::{propagate_on, PotentialGrid, PropagationResult};
use crate::specfun::{outgoing_scaled, regular_scaled, riccati_hankel, HankelSign};
use crate::uniform::{Sheet, UniformPoint, Uniformizer};
use crate::{Error, Result};

/// Guard radius around `u = 0`, where `E(u)` has a pole.
pub const DEFAULT_U_MIN: f64 = 1e-3;

/// Above this total `|Im kᵢr₀|` the scaled functions leave floating-point range.
const MAX_TOTAL_DECAY: f64 = 300.0;

/// Relative size of `det W₊` below which an evaluation point is treated as a pole.
const POLE_TOL: f64 = 1e-12;

/// Number of potential grids kept by an [`Evaluator`].
const GRID_CACHE: usize = 4;

/// `𝒲[A, B] = AᵀB′ − A′ᵀB`.
pub fn wronskian(a: &CMatrix, da: &CMatrix, b: &CMatrix, db: &CMatrix) -> CMatrix {
    &(&a.transpose() * db) - &(&da.transpose() * b)
}

/// Everything computed at one `(u, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringEval {
    pub point: UniformPoint,
    pub params: ParamVector,
    pub w_plus: CMatrix,
    pub w_minus: CMatrix,
    pub s: CMatrix,
    /// Regularized Jost determinant.
    pub f: C64,
    /// `∏ kᵢ^{2lᵢ+1} / det(S − I)`; `None` where it is not finite (for
    /// example with no potential, where `S = I`).
    pub f_ratio: Option<C64>,
}

/// `W₊` and `W₋` for explicit channel momenta.
pub fn w_matrices(model: &ChannelModel, momenta: &[C64], prop: &PropagationResult) -> Result<(CMatrix, CMatrix)> {
    let n = model.n_channels();
    let r0 = prop.r0;
    let mut out = [CMatrix::zeros(n), CMatrix::zeros(n)];
    for (slot, sign) in [HankelSign::Plus, HankelSign::Minus].into_iter().enumerate() {
        let mut h = vec![C64::new(0.0, 0.0); n];
        let mut dh = vec![C64::new(0.0, 0.0); n];
        for (i, ch) in model.channels().iter().enumerate() {
            let k = momenta[i];
            let pair = riccati_hankel(ch.angular_momentum, sign, k * r0)?;
            h[i] = pair.value;
            dh[i] = pair.derivative * k;
        }
        let a = CMatrix::from_diag(&h);
        let da = CMatrix::from_diag(&dh);
        out[slot] = wronskian(&a, &da, &prop.psi, &prop.dpsi);
    }
    let [wp, wm] = out;
    Ok((wp, wm))
}

/// `K^{−1/2} W₋ W₊⁻¹ K^{1/2}`, principal square roots.
pub fn s_from_w(momenta: &[C64], w_plus: &CMatrix, w_minus: &CMatrix) -> Result<CMatrix> {
    let n = momenta.len();
    let scale = (0..n).map(|i| (0..n).map(|j| w_plus[(i, j)].norm_sqr()).sum::<f64>()).map(math::sqrt).product::<f64>();
    let det = w_plus.det();
    if !(det.norm() > POLE_TOL * scale) {
        return Err(Error::AtPole { det_abs: det.norm() });
    }
    let inv = w_plus.inverse().ok_or(Error::AtPole { det_abs: 0.0 })?;
    let core = w_minus * &inv;
    let roots: Vec<C64> = momenta.iter().map(|k| k.sqrt()).collect();
    if roots.iter().any(|r| r.norm() == 0.0) {
        return Err(Error::Domain("S-matrix is undefined at a channel threshold"));
    }
    Ok(CMatrix::from_fn(n, |i, j| core[(i, j)] * roots[j] / roots[i]))
}

fn decay_guard(momenta: &[C64], r0: f64) -> Result<()> {
    let decay: f64 = momenta.iter().map(|k| (k * r0).im.abs()).sum();
    if decay <= MAX_TOTAL_DECAY {
        Ok(())
    } else {
        Err(Error::Domain("channel momenta too large for a representable F"))
    }
}

/// The `P` and `R` matrices of the module docs.
fn p_and_r(model: &ChannelModel, momenta: &[C64], prop: &PropagationResult) -> (CMatrix, CMatrix) {
    let n = model.n_channels();
    let r0 = prop.r0;
    let mut p = CMatrix::zeros(n);
    let mut r = CMatrix::zeros(n);
    for (i, ch) in model.channels().iter().enumerate() {
        let k = momenta[i];
        let l = ch.angular_momentum;
        let lf = f64::from(l);
        let z = k * r0;
        let q = outgoing_scaled(l, z);
        let g = regular_scaled(l, z);
        let cq = k * q.derivative - q.value * (lf / r0);
        let cg = k * g.derivative + g.value * ((lf + 1.0) / r0);
        for j in 0..n {
            let psi = prop.psi[(i, j)];
            let dpsi = prop.dpsi[(i, j)];
            p[(i, j)] = q.value * dpsi - cq * psi;
            r[(i, j)] = g.value * dpsi - cg * psi;
        }
    }
    (p, r)
}

/// Regularized Jost determinant `det P` in the canonical regular basis,
/// scaled by `∏ h^{lᵢ+1}` so that it does not depend on the grid step to
/// leading order.
pub fn regularized_from(model: &ChannelModel, momenta: &[C64], prop: &PropagationResult) -> Result<C64> {
    decay_guard(momenta, prop.r0)?;
    let (p, _) = p_and_r(model, momenta, prop);
    let ln_h = libm::log(model.step());
    let shift: f64 = model.channels().iter().map(|ch| (f64::from(ch.angular_momentum) + 1.0) * ln_h).sum();
    let f = p.det() * (prop.log_det + shift).exp();
    if !(f.re.is_finite() && f.im.is_finite()) {
        return Err(Error::NonFinite("regularized F"));
    }
    Ok(f)
}

/// `∏ kᵢ^{2lᵢ+1} / det(S − I)` via `det P / ((−2i)^N ∏ r₀^{2lᵢ+1} det R)`.
pub fn ratio_form_from(model: &ChannelModel, momenta: &[C64], prop: &PropagationResult) -> Result<C64> {
    decay_guard(momenta, prop.r0)?;
    let (p, r) = p_and_r(model, momenta, prop);
    let denom: C64 = model
        .channels()
        .iter()
        .map(|ch| C64::new(0.0, -2.0) * libm::pow(prop.r0, 2.0 * f64::from(ch.angular_momentum) + 1.0))
        .product();
    let f = p.det() / (denom * r.det());
    if !(f.re.is_finite() && f.im.is_finite()) {
        return Err(Error::NonFinite("det(S - I) form of F"));
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Uniformized(Uniformizer),
    EqualThresholds { threshold: f64 },
}

/// Evaluates `F` for one model, caching potential grids by parameter vector.
///
/// Not `Sync`: use one evaluator per worker thread.
#[derive(Debug)]
pub struct Evaluator {
    model: ChannelModel,
    mode: Mode,
    cache: RefCell<Vec<Rc<PotentialGrid>>>,
    evaluations: Cell<u64>,
}

impl Clone for Evaluator {
    fn clone(&self) -> Self {
        Self { model: self.model.clone(), mode: self.mode, cache: RefCell::new(Vec::new()), evaluations: Cell::new(0) }
    }
}

impl Evaluator {
    /// Two-channel uniformized mode (`ξ₁ < ξ₂`).
    pub fn new(model: ChannelModel) -> Result<Self> {
        model.check_uniformizable()?;
        let ch = model.channels();
        let uz = Uniformizer::new(ch[0].threshold, ch[1].threshold, model.mass())?;
        Ok(Self::with_mode(model, Mode::Uniformized(uz)))
    }

    /// Equal-threshold mode, parameterized by the common channel momentum `k`.
    pub fn equal_thresholds(model: ChannelModel) -> Result<Self> {
        model.check_equal_thresholds()?;
        let threshold = model.channels()[0].threshold;
        Ok(Self::with_mode(model, Mode::EqualThresholds { threshold }))
    }

    fn with_mode(model: ChannelModel, mode: Mode) -> Self {
        Self { model, mode, cache: RefCell::new(Vec::new()), evaluations: Cell::new(0) }
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    /// The uniformization, if this evaluator is in uniformized mode.
    pub fn uniformizer(&self) -> Option<&Uniformizer> {
        match &self.mode {
            Mode::Uniformized(uz) => Some(uz),
            Mode::EqualThresholds { .. } => None,
        }
    }

    /// Number of propagations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.get()
    }

    fn grid(&self, p: &ParamVector) -> Result<Rc<PotentialGrid>> {
        let mut cache = self.cache.borrow_mut();
        if let Some(pos) = cache.iter().position(|g| g.params() == p) {
            let g = cache.remove(pos);
            cache.push(g.clone());
            return Ok(g);
        }
        let g = Rc::new(PotentialGrid::new(&self.model, p)?);
        if cache.len() == GRID_CACHE {
            cache.remove(0);
        }
        cache.push(g.clone());
        Ok(g)
    }

    fn propagate(&self, energy: C64, p: &ParamVector) -> Result<PropagationResult> {
        let grid = self.grid(p)?;
        self.evaluations.set(self.evaluations.get() + 1);
        propagate_on(&grid, energy)
    }

    /// Energy and channel momenta for a point of the evaluator's plane.
    fn kinematics(&self, z: C64) -> Result<(C64, Vec<C64>)> {
        match &self.mode {
            Mode::Uniformized(uz) => {
                let e = uz.energy(z)?;
                let (k1, k2) = uz.momenta(z)?;
                Ok((e, vec![k1, k2]))
            }
            Mode::EqualThresholds { threshold } => {
                let e = z * z / (2.0 * self.model.mass()) + threshold;
                Ok((e, vec![z; self.model.n_channels()]))
            }
        }
    }

    /// `F(u, p)` in uniformized mode, `F(k, p)` in equal-threshold mode.
    pub fn f(&self, z: C64, p: &ParamVector) -> Result<C64> {
        let (e, momenta) = self.kinematics(z)?;
        let prop = self.propagate(e, p)?;
        regularized_from(&self.model, &momenta, &prop)
    }

    /// Complex derivative `dF/dz` by central differences with step
    /// `1e−6·max(1, |z|)`.
    pub fn df(&self, z: C64, p: &ParamVector) -> Result<C64> {
        let h = 1e-6 * z.norm().max(1.0);
        let fp = self.f(z + h, p)?;
        let fm = self.f(z - h, p)?;
        Ok((fp - fm) / (2.0 * h))
    }

    /// Full scattering data at `u` (uniformized mode only).
    pub fn scattering(&self, u: C64, p: &ParamVector) -> Result<ScatteringEval> {
        let uz = *self
            .uniformizer()
            .ok_or_else(|| Error::InvalidArgument("S-matrix evaluation needs uniformized mode".into()))?;
        let point = uz.point(u)?;
        let momenta = [point.k1, point.k2];
        let prop = self.propagate(point.energy, p)?;
        let (w_plus, w_minus) = w_matrices(&self.model, &momenta, &prop)?;
        let s = s_from_w(&momenta, &w_plus, &w_minus)?;
        let f = regularized_from(&self.model, &momenta, &prop)?;
        let f_ratio = ratio_form_from(&self.model, &momenta, &prop).ok();
        Ok(ScatteringEval { point, params: *p, w_plus, w_minus, s, f, f_ratio })
    }

    /// Per-channel cancellation measure `|P_ii| / (|q ψ′_ii| + |c ψ_ii|)`.
    ///
    /// For an uncoupled model `F` factorizes over channels and the channel
    /// whose measure is smallest is the one the state belongs to.
    pub fn channel_residuals(&self, z: C64, p: &ParamVector) -> Result<Vec<f64>> {
        let (e, momenta) = self.kinematics(z)?;
        let prop = self.propagate(e, p)?;
        let r0 = prop.r0;
        Ok(self
            .model
            .channels()
            .iter()
            .enumerate()
            .map(|(i, ch)| {
                let k = momenta[i];
                let lf = f64::from(ch.angular_momentum);
                let q = outgoing_scaled(ch.angular_momentum, k * r0);
                let cq = k * q.derivative - q.value * (lf / r0);
                let a = q.value * prop.dpsi[(i, i)];
                let b = cq * prop.psi[(i, i)];
                (a - b).norm() / (a.norm() + b.norm())
            })
            .collect())
    }
}

/// `F(u, p)` for a two-channel model.
pub fn regularized_f(model: &ChannelModel, u: C64, p: &ParamVector) -> Result<C64> {
    Evaluator::new(model.clone())?.f(u, p)
}

/// `F(k, p)` for a model whose channel thresholds all coincide.
pub fn regularized_f_equal_thresholds(model: &ChannelModel, k: C64, p: &ParamVector) -> Result<C64> {
    Evaluator::equal_thresholds(model.clone())?.f(k, p)
}

/// S-matrix and friends at a uniformized point.
pub fn s_matrix(model: &ChannelModel, pt: &UniformPoint, p: &ParamVector) -> Result<ScatteringEval> {
    Evaluator::new(model.clone())?.scattering(pt.u, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Converged when the Newton step is below `tol·max(1, |z|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Guard disk around the origin (uniformized mode only).
    pub u_min: f64,
    /// Abort if an iterate wanders further than this from the seed.
    pub max_distance: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 40, u_min: DEFAULT_U_MIN, max_distance: None }
    }
}

/// Newton iteration on `F(·, p)` from `z0`.
pub fn newton_refine(eval: &Evaluator, z0: C64, p: &ParamVector, opts: &NewtonOptions) -> Result<C64> {
    let guard = eval.uniformizer().is_some();
    let mut z = z0;
    for _ in 0..opts.max_iter {
        if guard && z.norm() < opts.u_min {
            return Err(Error::DivergedToOrigin);
        }
        let f = eval.f(z, p)?;
        if f == C64::new(0.0, 0.0) {
            return Ok(z);
        }
        let d = eval.df(z, p)?;
        if d == C64::new(0.0, 0.0) || !(d.re.is_finite() && d.im.is_finite()) {
            return Err(Error::NoConvergence { iterations: opts.max_iter });
        }
        let step = f / d;
        z -= step;
        if let Some(limit) = opts.max_distance {
            if (z - z0).norm() > limit {
                return Err(Error::NoConvergence { iterations: opts.max_iter });
            }
        }
        if step.norm() <= opts.tol * z.norm().max(1.0) {
            if guard && z.norm() < opts.u_min {
                return Err(Error::DivergedToOrigin);
            }
            return Ok(z);
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter })
}

/// Rectangle `[re_min, re_max] × [im_min, im_max]` in the `u`-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn contains(&self, z: C64, margin: f64) -> bool {
        z.re >= self.re_min - margin
            && z.re <= self.re_max + margin
            && z.im >= self.im_min - margin
            && z.im <= self.im_max + margin
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub newton: NewtonOptions,
    /// Roots closer than this are merged.
    pub dedup_eps: f64,
    /// Seed Newton from every grid node instead of only from local minima of `|F|`.
    pub newton_from_all: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { newton: NewtonOptions::default(), dedup_eps: 1e-5, newton_from_all: false }
    }
}

/// A converged root of `F` with its kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartState {
    pub point: UniformPoint,
    /// Last Newton step length, relative.
    pub residual: f64,
}

/// Cell-centre seeds of an `nx × ny` grid over `region`, skipping the guard disk.
pub fn scan_seeds(region: &Region, nx: usize, ny: usize, u_min: f64) -> Vec<C64> {
    let dx = (region.re_max - region.re_min) / nx as f64;
    let dy = (region.im_max - region.im_min) / ny as f64;
    let mut seeds = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let z = C64::new(region.re_min + (i as f64 + 0.5) * dx, region.im_min + (j as f64 + 0.5) * dy);
            if z.norm() >= u_min {
                seeds.push(z);
            }
        }
    }
    seeds
}

/// Seeds worth refining: grid nodes whose value is no larger than at any of
/// the eight neighbours. Nodes where `F` fails to evaluate are skipped.
pub fn local_minima(region: &Region, nx: usize, ny: usize, values: &[Option<f64>]) -> Vec<C64> {
    let dx = (region.re_max - region.re_min) / nx as f64;
    let dy = (region.im_max - region.im_min) / ny as f64;
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let Some(v) = values[j * nx + i] else { continue };
            let mut is_min = true;
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as isize + di, j as isize + dj);
                    if ii < 0 || jj < 0 || ii >= nx as isize || jj >= ny as isize {
                        continue;
                    }
                    if let Some(w) = values[jj as usize * nx + ii as usize] {
                        if w < v {
                            is_min = false;
                        }
                    }
                }
            }
            if is_min {
                out.push(C64::new(region.re_min + (i as f64 + 0.5) * dx, region.im_min + (j as f64 + 0.5) * dy));
            }
        }
    }
    out
}

/// Sorts by `(Re u, Im u)` and merges roots closer than `eps`.
pub fn dedup_roots(mut roots: Vec<StartState>, eps: f64) -> Vec<StartState> {
    roots.sort_by(|a, b| a.point.u.re.total_cmp(&b.point.u.re).then(a.point.u.im.total_cmp(&b.point.u.im)));
    let mut out: Vec<StartState> = Vec::with_capacity(roots.len());
    for r in roots {
        if out.iter().all(|o| (o.point.u - r.point.u).norm() > eps) {
            out.push(r);
        }
    }
    out
}

/// Refines one seed; `None` if Newton fails or the root leaves the region.
pub fn refine_seed(
    eval: &Evaluator,
    seed: C64,
    p: &ParamVector,
    region: &Region,
    margin: f64,
    opts: &NewtonOptions,
) -> Option<StartState> {
    let uz = *eval.uniformizer()?;
    let u = newton_refine(eval, seed, p, opts).ok()?;
    if !region.contains(u, margin) || u.norm() < opts.u_min {
        return None;
    }
    let f = eval.f(u, p).ok()?;
    let d = eval.df(u, p).ok()?;
    let residual = (f / d).norm() / u.norm().max(1.0);
    Some(StartState { point: uz.point(u).ok()?, residual })
}

/// The Newton step `−F/F′`. Its length is roughly the distance to the
/// nearest zero and, unlike `|F|`, is not dominated by the exponential growth
/// of `F` towards `u = 0`.
fn newton_step(eval: &Evaluator, z: C64, p: &ParamVector) -> Option<C64> {
    let f = eval.f(z, p).ok()?;
    let d = eval.df(z, p).ok()?;
    let step = -f / d;
    (step.re.is_finite() && step.im.is_finite()).then_some(step)
}

/// Newton-converged, deduplicated roots of `F(·, p)` inside `region`.
///
/// Newton starts from the grid cells where `|F/F′|` is a local minimum or
/// smaller than a cell, or from every cell with `newton_from_all`.
pub fn scan_start_states(
    eval: &Evaluator,
    p: &ParamVector,
    region: &Region,
    nx: usize,
    ny: usize,
    opts: &ScanOptions,
) -> Vec<StartState> {
    let seeds = scan_seeds(region, nx, ny, opts.newton.u_min);
    let margin = ((region.re_max - region.re_min) / nx as f64).max((region.im_max - region.im_min) / ny as f64);
    let candidates = if opts.newton_from_all {
        seeds
    } else {
        let grid = scan_seed_grid(region, nx, ny);
        let steps: Vec<Option<C64>> =
            grid.iter().map(|&z| if z.norm() < opts.newton.u_min { None } else { newton_step(eval, z, p) }).collect();
        let values: Vec<Option<f64>> = steps.iter().map(|s| s.map(|s| s.norm())).collect();
        let mut c = local_minima(region, nx, ny, &values);
        // Near u = 0 the Newton length shrinks everywhere and zeros are not
        // local minima, so cells whose Newton step stays within one cell are
        // tried too, one per predicted root.
        let mut short: Vec<(f64, C64, C64)> = grid
            .iter()
            .zip(&steps)
            .filter_map(|(&z, s)| s.filter(|s| s.norm() < margin).map(|s| (s.norm(), z, z + s)))
            .collect();
        short.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut predicted: Vec<C64> = Vec::new();
        for (_, z, target) in short {
            if predicted.iter().all(|q| (q - target).norm() > margin) {
                predicted.push(target);
                c.push(z);
            }
        }
        c
    };
    // Every candidate is within a cell or so of its root; wandering
    // iterations are abandoned early.
    let newton = NewtonOptions { max_distance: opts.newton.max_distance.or(Some(4.0 * margin)), ..opts.newton };
    let roots: Vec<StartState> =
        candidates.into_iter().filter_map(|z| refine_seed(eval, z, p, region, margin, &newton)).collect();
    dedup_roots(roots, opts.dedup_eps)
}

/// All cell centres, row-major, including any inside the guard disk.
pub fn scan_seed_grid(region: &Region, nx: usize, ny: usize) -> Vec<C64> {
    scan_seeds(region, nx, ny, 0.0)
}

/// Table-style labels for roots found on an uncoupled model.
///
/// A root belongs to channel `i` when its channel factor of `F` vanishes
/// (`residuals[i]` smallest) and `kᵢ` lies on the positive imaginary axis.
/// It is a tilde state when the other channel's momentum has negative
/// imaginary part (or is real and negative). States are numbered by energy
/// within each channel; everything else gets `seed-<index>`.
pub fn label_uncoupled_states(points: &[UniformPoint], residuals: &[Vec<f64>]) -> Vec<String> {
    let n = points.len();
    let mut channel: Vec<Option<usize>> = vec![None; n];
    let mut tilde = vec![false; n];
    for (idx, pt) in points.iter().enumerate() {
        let res = &residuals[idx];
        let Some(ch) = (0..res.len()).min_by(|&a, &b| res[a].total_cmp(&res[b])) else { continue };
        let ks = [pt.k1, pt.k2];
        let k = ks[ch];
        if !(k.im > 0.0 && k.re.abs() <= 1e-6 * k.norm()) {
            continue;
        }
        let other = ks[1 - ch];
        let real = other.im.abs() <= 1e-6 * other.norm();
        channel[idx] = Some(ch);
        tilde[idx] = if real { other.re < 0.0 } else { other.im < 0.0 };
    }
    let mut labels: Vec<String> = (0..n).map(|i| format!("seed-{i}")).collect();
    for ch in 0..2 {
        // Distinct energies in this channel, ascending.
        let mut energies: Vec<f64> = (0..n).filter(|&i| channel[i] == Some(ch)).map(|i| points[i].energy.re).collect();
        energies.sort_by(f64::total_cmp);
        energies.dedup_by(|a, b| (*a - *b).abs() <= 1e-6 * (1.0 + b.abs()));
        for i in 0..n {
            if channel[i] != Some(ch) {
                continue;
            }
            let e = points[i].energy.re;
            let level = energies.iter().position(|x| (x - e).abs() <= 1e-6 * (1.0 + x.abs())).unwrap_or(0);
            labels[i] = format!("c{}{}n{}", ch + 1, if tilde[i] { "~" } else { "" }, level);
        }
    }
    labels
}

/// The real system `(Re F, Im F)(Re u, Im u, λ)` traced by continuation.
#[derive(Debug)]
pub struct PoleSystem<'a> {
    eval: &'a Evaluator,
    binding: ParamBinding,
    u_min: f64,
}

impl<'a> PoleSystem<'a> {
    pub fn new(eval: &'a Evaluator, binding: ParamBinding) -> Self {
        Self { eval, binding, u_min: DEFAULT_U_MIN }
    }

    pub fn with_u_min(mut self, u_min: f64) -> Self {
        self.u_min = u_min;
        self
    }

    pub fn binding(&self) -> &ParamBinding {
        &self.binding
    }

    pub fn evaluator(&self) -> &Evaluator {
        self.eval
    }
}

impl ContinuationSystem for PoleSystem<'_> {
    fn residual(&self, x: &[f64; 3]) -> Result<[f64; 2]> {
        let u = C64::new(x[0], x[1]);
        if u.norm() < self.u_min {
            return Err(Error::DivergedToOrigin);
        }
        let f = self.eval.f(u, &self.binding.at(x[2]))?;
        Ok([f.re, f.im])
    }

    fn guard(&self, x: &[f64; 3]) -> Result<()> {
        if C64::new(x[0], x[1]).norm() < self.u_min {
            Err(Error::DivergedToOrigin)
        } else {
            Ok(())
        }
    }
}

/// The sheet of `u` under `uz`.
pub fn sheet_of(uz: &Uniformizer, u: C64) -> Option<Sheet> {
    uz.point(u).ok().map(|p| p.sheet)
}
