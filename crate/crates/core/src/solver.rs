//! Renormalized (ratio) matrix Numerov propagation of the regular solution.
//!
//! With `Q(r) = 2μ(V + Ξ + L(L+1)/(2μr²) − E)` the radial equation is
//! `Ψ″ = QΨ`. Writing `T_n = (h²/12)Q(r_n)` and `F_n = (I − T_n)Ψ_n`, Numerov's
//! scheme is `F_{n+1} = U_n F_n − F_{n−1}` with `U_n = (I − T_n)⁻¹(2I + 10T_n)`.
//! Only the ratio `R_n = F_{n+1}F_n⁻¹ = U_n − R_{n−1}⁻¹` is propagated (as
//! `R_n − I`), which keeps exponentially growing closed-channel components
//! bounded.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{invert_into, CMatrix, C64};
use crate::model::{ChannelModel, ParamVector};
use crate::{Error, Result};

/// Number of trailing grid points kept for the wave-function reconstruction.
const TAIL: usize = 8;

/// `(h²/12)·2μ(V + Ξ + centrifugal)` at every grid point, for fixed parameters.
///
/// Energy enters only as a shift of the diagonal, so one grid serves every
/// evaluation at the same parameter vector.
#[derive(Debug, Clone)]
pub struct PotentialGrid {
    params: ParamVector,
    n: usize,
    points: usize,
    h: f64,
    r_max: f64,
    energy_coef: f64,
    /// Row-major `n × n` blocks for grid indices `1..points` (index 0 is unused).
    a: Vec<f64>,
}

impl PotentialGrid {
    pub fn new(model: &ChannelModel, p: &ParamVector) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::NonFinite("parameter vector"));
        }
        let n = model.n_channels();
        let points = model.grid_points();
        let h = model.step();
        let mu = model.mass();
        let scale = h * h / 12.0 * 2.0 * mu;
        let mut a = vec![0.0; points * n * n];
        for idx in 1..points {
            let r = idx as f64 * h;
            let block = &mut a[idx * n * n..(idx + 1) * n * n];
            model.eval_potential_into(r, p, block);
            for (i, ch) in model.channels().iter().enumerate() {
                let l = f64::from(ch.angular_momentum);
                block[i * n + i] += ch.threshold + l * (l + 1.0) / (2.0 * mu * r * r);
            }
            for v in block.iter_mut() {
                *v *= scale;
            }
        }
        Ok(Self { params: *p, n, points, h, r_max: model.r_max(), energy_coef: scale, a })
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn n_channels(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }
}

/// `Ψ(r₀)` and `Ψ′(r₀)` for a basis of regular solutions.
///
/// The basis is normalized so that `F = (I − T)Ψ` is the identity at `r₀`.
/// `log_det` is `ln det C` for the matrix `C` taking this basis to the
/// canonical one that starts from `F₁ = I` at the first grid point, so
/// `det Ψ_canonical = det Ψ · exp(log_det)` is an analytic function of the
/// energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub psi: CMatrix,
    pub dpsi: CMatrix,
    pub r0: f64,
    pub log_det: C64,
}

/// Builds the potential grid and propagates at energy `energy`.
pub fn propagate(model: &ChannelModel, energy: C64, p: &ParamVector) -> Result<PropagationResult> {
    let grid = PotentialGrid::new(model, p)?;
    propagate_on(&grid, energy)
}

/// Propagates on a prepared grid.
pub fn propagate_on(grid: &PotentialGrid, energy: C64) -> Result<PropagationResult> {
    let mut ws = Workspace::new(grid.n);
    run(grid, energy, &mut ws, None)
}

/// Reconstructed `Ψ(r_n)` at every grid point `n = 0..points`, same basis as
/// [`propagate_on`]. Intended for diagnostics; costs `O(points·n²)` memory.
pub fn wave_function(grid: &PotentialGrid, energy: C64) -> Result<Vec<CMatrix>> {
    let mut ws = Workspace::new(grid.n);
    let mut store = vec![C64::new(0.0, 0.0); grid.points * grid.n * grid.n];
    run(grid, energy, &mut ws, Some(&mut store))?;
    let n = grid.n;
    let nn = n * n;
    // store holds R_k⁻¹ for k = 1..points-1; rebuild F backwards from F_{M-1} = I.
    let mut out = vec![CMatrix::zeros(n); grid.points];
    let mut f = CMatrix::identity(n);
    let mut tmp = CMatrix::zeros(n);
    for idx in (1..grid.points).rev() {
        if idx < grid.points - 1 {
            crate::linalg::mul_into(n, &store[idx * nn..(idx + 1) * nn], f.as_slice(), tmp.as_mut_slice());
            core::mem::swap(&mut f, &mut tmp);
        }
        out[idx] = psi_from_f(grid, energy, idx, &f, &mut ws)?;
    }
    Ok(out)
}

struct Workspace {
    t: Vec<C64>,
    lhs: Vec<C64>,
    lhs_inv: Vec<C64>,
    rhs: Vec<C64>,
    r: Vec<C64>,
    r_inv: Vec<C64>,
    delta: Vec<C64>,
    x: Vec<C64>,
    tail: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        let nn = n * n;
        Self {
            t: vec![z; nn],
            lhs: vec![z; nn],
            lhs_inv: vec![z; nn],
            rhs: vec![z; nn],
            r: vec![z; nn],
            r_inv: vec![z; nn],
            delta: vec![z; nn],
            x: vec![z; nn],
            tail: vec![z; TAIL * nn],
        }
    }
}

#[inline]
fn fill_t(grid: &PotentialGrid, energy: C64, idx: usize, t: &mut [C64]) {
    let n = grid.n;
    let nn = n * n;
    let block = &grid.a[idx * nn..(idx + 1) * nn];
    let shift = energy * grid.energy_coef;
    for (dst, &v) in t.iter_mut().zip(block) {
        *dst = C64::new(v, 0.0);
    }
    for i in 0..n {
        t[i * n + i] -= shift;
    }
}

fn psi_from_f(grid: &PotentialGrid, energy: C64, idx: usize, f: &CMatrix, ws: &mut Workspace) -> Result<CMatrix> {
    let n = grid.n;
    fill_t(grid, energy, idx, &mut ws.t);
    for (i, (l, &t)) in ws.lhs.iter_mut().zip(ws.t.iter()).enumerate() {
        *l = if i % (n + 1) == 0 { C64::new(1.0, 0.0) - t } else { -t };
    }
    if !invert_into(n, &mut ws.lhs, &mut ws.lhs_inv) {
        return Err(Error::SingularSolution { r: idx as f64 * grid.h });
    }
    let mut psi = CMatrix::zeros(n);
    crate::linalg::mul_into(n, &ws.lhs_inv, f.as_slice(), psi.as_mut_slice());
    Ok(psi)
}

fn run(
    grid: &PotentialGrid,
    energy: C64,
    ws: &mut Workspace,
    mut store: Option<&mut [C64]>,
) -> Result<PropagationResult> {
    if !(energy.re.is_finite() && energy.im.is_finite()) {
        return Err(Error::NonFinite("energy"));
    }
    let n = grid.n;
    let nn = n * n;
    let last = grid.points - 1;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);

    // F_0 = 0 (regular boundary condition), so R_1 = U_1. After that the
    // small difference Δ_n = R_n − I is propagated instead of R_n:
    //   Δ_n = D_n + R_{n−1}⁻¹Δ_{n−1},  D_n = U_n − 2I = 12T_n(I − T_n)⁻¹,
    // which keeps the energy dependence (of relative size h²) at full precision.
    // det F_{M−1} = ∏ det R_n is kept as a rescaled product plus a logarithm.
    let mut det_prod = one;
    let mut log_det = zero;

    for idx in 1..last {
        fill_t(grid, energy, idx, &mut ws.t);
        for k in 0..nn {
            let t = ws.t[k];
            ws.lhs[k] = if k % (n + 1) == 0 { one - t } else { -t };
        }
        if !invert_into(n, &mut ws.lhs, &mut ws.lhs_inv) {
            return Err(Error::SingularSolution { r: idx as f64 * grid.h });
        }
        crate::linalg::mul_into(n, &ws.t, &ws.lhs_inv, &mut ws.rhs);
        for k in 0..nn {
            let d = ws.rhs[k] * 12.0;
            ws.delta[k] = if idx == 1 {
                if k % (n + 1) == 0 {
                    d + 1.0
                } else {
                    d
                }
            } else {
                d + ws.x[k]
            };
        }
        for k in 0..nn {
            ws.r[k] = if k % (n + 1) == 0 { ws.delta[k] + 1.0 } else { ws.delta[k] };
        }
        det_prod *= small_det(n, &ws.r);
        if !(1e-200..=1e200).contains(&det_prod.norm_sqr()) {
            log_det += det_prod.ln();
            det_prod = one;
        }
        if !invert_into(n, &mut ws.r, &mut ws.r_inv) {
            return Err(Error::SingularSolution { r: idx as f64 * grid.h });
        }
        crate::linalg::mul_into(n, &ws.r_inv, &ws.delta, &mut ws.x);
        let slot = idx % TAIL;
        ws.tail[slot * nn..(slot + 1) * nn].copy_from_slice(&ws.r_inv);
        if let Some(s) = store.as_deref_mut() {
            s[idx * nn..(idx + 1) * nn].copy_from_slice(&ws.r_inv);
        }
    }
    if ws.r_inv.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::PropagationOverflow { r: grid.r_max });
    }

    // F_{M−1} = I, F_k = R_k⁻¹ F_{k+1}; Ψ_k = (I − T_k)⁻¹ F_k for the last 5 points.
    let mut psis: [CMatrix; 5] = core::array::from_fn(|_| CMatrix::zeros(n));
    let mut f = CMatrix::identity(n);
    let mut tmp = CMatrix::zeros(n);
    for (back, psi) in psis.iter_mut().enumerate() {
        let idx = last - back;
        if back > 0 {
            let slot = idx % TAIL;
            crate::linalg::mul_into(n, &ws.tail[slot * nn..(slot + 1) * nn], f.as_slice(), tmp.as_mut_slice());
            core::mem::swap(&mut f, &mut tmp);
        }
        *psi = psi_from_f(grid, energy, idx, &f, ws)?;
    }
    let inv12h = 1.0 / (12.0 * grid.h);
    let coeffs = [25.0, -48.0, 36.0, -16.0, 3.0];
    let mut dpsi = CMatrix::zeros(n);
    for (c, psi) in coeffs.iter().zip(&psis) {
        for (d, &v) in dpsi.as_mut_slice().iter_mut().zip(psi.as_slice()) {
            *d += v * (c * inv12h);
        }
    }
    let [psi, ..] = psis;
    if !psi.is_finite() || !dpsi.is_finite() {
        return Err(Error::PropagationOverflow { r: grid.r_max });
    }
    log_det += det_prod.ln();
    if !(log_det.re.is_finite() && log_det.im.is_finite()) {
        return Err(Error::PropagationOverflow { r: grid.r_max });
    }
    Ok(PropagationResult { psi, dpsi, r0: grid.r_max, log_det })
}

/// Determinant of a small row-major matrix (`invert_into` overwrites its input).
fn small_det(n: usize, a: &[C64]) -> C64 {
    match n {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        _ => CMatrix::from_vec(n, a.to_vec()).det(),
    }
}
