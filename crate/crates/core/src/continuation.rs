//! Pseudo-arclength continuation of a real system `G(x) = 0`, `G: ℝ³ → ℝ²`,
//! with simple branch-point detection and branch switching.
//!
//! For the pole problem `x = (Re u, Im u, λ)` and `G = (Re F, Im F)`, but the
//! engine only sees [`ContinuationSystem`].
//!
//! The tangent is `n = ∇G₁ × ∇G₂`, oriented by the previous tangent. The
//! bordered determinant `det[J; tᵀ] = n·t` changes sign exactly where `n`
//! passes through zero along the curve, which is how simple branch points
//! are detected.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

pub type Vec3 = [f64; 3];
/// Rows are `∇G₁`, `∇G₂`.
pub type Jacobian = [[f64; 3]; 2];

/// A real system with two equations in three unknowns.
pub trait ContinuationSystem {
    fn residual(&self, x: &Vec3) -> Result<[f64; 2]>;

    /// Rejects points outside the admissible domain.
    fn guard(&self, _x: &Vec3) -> Result<()> {
        Ok(())
    }

    fn jacobian(&self, x: &Vec3) -> Result<Jacobian> {
        fd_jacobian(self, x)
    }
}

/// Central differences with step `1e−6·max(1, |x_j|)` (six residual calls).
pub fn fd_jacobian<S: ContinuationSystem + ?Sized>(sys: &S, x: &Vec3) -> Result<Jacobian> {
    let mut jac = [[0.0; 3]; 2];
    for j in 0..3 {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let gp = sys.residual(&xp)?;
        let gm = sys.residual(&xm)?;
        for i in 0..2 {
            jac[i][j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    #[default]
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ContinuationOptions {
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_corrector_iters: usize,
    /// Bound on `|G| / ‖J‖_F` at accepted points.
    pub corrector_tol: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Initial orientation when there is no previous tangent.
    pub direction: Direction,
    pub max_steps: usize,
    pub detect_branch_points: bool,
    /// Relative tolerance on the bordered determinant during localization.
    pub bp_tol: f64,
    /// `σ₂/σ₁` below which the Jacobian counts as rank one.
    pub rank_tol: f64,
    /// A localized sign change is recorded as a branch point only if `σ₂/σ₁`
    /// there is below this; larger values come from sign flips of `τ` that
    /// are not rank drops (for example in nearly degenerate regions).
    pub bp_max_ratio: f64,
    /// Minimum cosine between consecutive tangents.
    pub min_tangent_dot: f64,
    /// Parameter values at which an exact curve point is recorded.
    pub lambda_marks: Vec<f64>,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            ds0: 1e-2,
            ds_min: 1e-6,
            ds_max: 5e-2,
            max_corrector_iters: 8,
            corrector_tol: 1e-9,
            lambda_min: f64::NEG_INFINITY,
            lambda_max: f64::INFINITY,
            direction: Direction::Increasing,
            max_steps: 20_000,
            detect_branch_points: true,
            bp_tol: 1e-8,
            rank_tol: 1e-6,
            bp_max_ratio: 1e-4,
            min_tangent_dot: 0.5,
            lambda_marks: Vec::new(),
        }
    }
}

impl ContinuationOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ds_min > 0.0
            && self.ds_min <= self.ds0
            && self.ds0 <= self.ds_max
            && self.max_corrector_iters > 0
            && self.corrector_tol > 0.0
            && self.lambda_min <= self.lambda_max
            && self.bp_tol > 0.0
            && self.rank_tol > 0.0
            && self.bp_max_ratio >= self.rank_tol;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("inconsistent continuation options".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuationPoint {
    pub x: Vec3,
    pub tangent: Vec3,
    /// Accumulated chord length from the branch start.
    pub s: f64,
    /// `|G| / ‖J‖_F`.
    pub residual: f64,
    /// `det[J; tᵀ]`.
    pub bordered: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Termination {
    LambdaBound,
    StepFailure,
    ClosedLoop,
    DomainGuard,
    MaxSteps,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::LambdaBound => "lambda_bound",
            Termination::StepFailure => "step_failure",
            Termination::ClosedLoop => "closed_loop",
            Termination::DomainGuard => "domain_guard",
            Termination::MaxSteps => "max_steps",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BranchPointRecord {
    pub x: Vec3,
    /// Orthonormal basis of the Jacobian's null space; the first is closest
    /// to the incoming tangent.
    pub null_tangents: [Vec3; 2],
    /// Bordered determinants at the bracketing points.
    pub detected_by: (f64, f64),
    /// `σ₂/σ₁` of the Jacobian at `x`.
    pub sigma_ratio: f64,
    pub incoming: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarkedPoint {
    pub lambda: f64,
    pub point: ContinuationPoint,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Branch {
    pub start_label: String,
    pub points: Vec<ContinuationPoint>,
    pub termination: Termination,
    pub branch_points: Vec<BranchPointRecord>,
    pub marks: Vec<MarkedPoint>,
    pub rejected_steps: usize,
}

impl Branch {
    pub fn last(&self) -> Option<&ContinuationPoint> {
        self.points.last()
    }
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    math::sqrt(dot(a, a))
}

#[inline]
fn axpy(x: &Vec3, s: f64, d: &Vec3) -> Vec3 {
    [x[0] + s * d[0], x[1] + s * d[1], x[2] + s * d[2]]
}

#[inline]
fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn jac_norm(j: &Jacobian) -> f64 {
    math::sqrt(j.iter().flatten().map(|v| v * v).sum())
}

/// `|G| / ‖J‖_F`, the quantity bounded by `corrector_tol`.
pub fn scaled_residual(g: &[f64; 2], j: &Jacobian) -> f64 {
    let jn = jac_norm(j);
    let gn = math::sqrt(g[0] * g[0] + g[1] * g[1]);
    if jn > 0.0 {
        gn / jn
    } else {
        f64::INFINITY
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve3(a: [[f64; 3]; 3], b: Vec3) -> Option<Vec3> {
    let mut m =
        [[a[0][0], a[0][1], a[0][2], b[0]], [a[1][0], a[1][1], a[1][2], b[1]], [a[2][0], a[2][1], a[2][2], b[2]]];
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..3 {
        let p = (k..3).max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs()))?;
        if m[p][k].abs() <= 1e-14 * scale {
            return None;
        }
        m.swap(k, p);
        let pivot = m[k];
        for row in m.iter_mut().skip(k + 1) {
            let f = row[k] / pivot[k];
            for (a, b) in row.iter_mut().zip(&pivot).skip(k) {
                *a -= f * b;
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut acc = m[i][3];
        for j in i + 1..3 {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    Some(x)
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if det.abs() <= 1e-14 * scale * scale || !det.is_finite() {
        return None;
    }
    Some([(b[0] * a[1][1] - b[1] * a[0][1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det])
}

/// Singular values `σ₁ ≥ σ₂` of a 2×3 matrix and the dominant right
/// singular vector.
pub fn singular_values(j: &Jacobian) -> (f64, f64, Vec3) {
    // JJᵀ = [[a, b], [b, c]]
    let a = dot(&j[0], &j[0]);
    let b = dot(&j[0], &j[1]);
    let c = dot(&j[1], &j[1]);
    let mean = 0.5 * (a + c);
    let disc = math::sqrt((0.25 * (a - c) * (a - c) + b * b).max(0.0));
    let l1 = mean + disc;
    let l2 = (a * c - b * b).max(0.0) / if l1 > 0.0 { l1 } else { 1.0 };
    // Left singular vector for l1, then v1 = Jᵀw/|Jᵀw|.
    let w = if b.abs() > 0.0 {
        [b, l1 - a]
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let v = [w[0] * j[0][0] + w[1] * j[1][0], w[0] * j[0][1] + w[1] * j[1][1], w[0] * j[0][2] + w[1] * j[1][2]];
    let vn = norm(&v);
    let v1 = if vn > 0.0 { scale(&v, 1.0 / vn) } else { [1.0, 0.0, 0.0] };
    (math::sqrt(l1), math::sqrt(l2), v1)
}

/// Unnormalized null vector `∇G₁ × ∇G₂`.
pub fn null_vector(j: &Jacobian) -> Vec3 {
    cross(&j[0], &j[1])
}

/// Unit tangent at `x`, oriented along `reference` if given, otherwise so
/// that `dλ` has the sign requested by `direction`.
pub fn tangent_at<S: ContinuationSystem + ?Sized>(
    sys: &S,
    x: &Vec3,
    reference: Option<&Vec3>,
    direction: Direction,
) -> Result<Vec3> {
    let j = sys.jacobian(x)?;
    oriented_tangent(&j, reference, direction)
}

fn oriented_tangent(j: &Jacobian, reference: Option<&Vec3>, direction: Direction) -> Result<Vec3> {
    let n = null_vector(j);
    let nn = norm(&n);
    let (s1, s2, _) = singular_values(j);
    if !(nn > 0.0) || !(s2 > 1e-12 * s1) {
        return Err(Error::RankDeficient);
    }
    let t = scale(&n, 1.0 / nn);
    let flip = match reference {
        Some(r) => dot(&t, r) < 0.0,
        None => match direction {
            Direction::Increasing => t[2] < 0.0,
            Direction::Decreasing => t[2] > 0.0,
        },
    };
    Ok(if flip { scale(&t, -1.0) } else { t })
}

struct Corrected {
    x: Vec3,
    iterations: usize,
    residual: f64,
}

/// Chord Newton on `{G(x) = 0, t·(x − xp) = 0}` starting at `xp`.
fn correct<S: ContinuationSystem + ?Sized>(
    sys: &S,
    xp: &Vec3,
    t: &Vec3,
    jac: &mut Jacobian,
    opts: &ContinuationOptions,
) -> Result<Corrected> {
    let mut x = *xp;
    let mut refreshed = false;
    let mut prev = f64::INFINITY;
    for it in 0..=opts.max_corrector_iters {
        let g = sys.residual(&x)?;
        if !(g[0].is_finite() && g[1].is_finite()) {
            return Err(Error::CorrectorDiverged);
        }
        let res = scaled_residual(&g, jac);
        if res <= opts.corrector_tol {
            return Ok(Corrected { x, iterations: it, residual: res });
        }
        if it == opts.max_corrector_iters {
            break;
        }
        if res > 0.5 * prev && !refreshed && it > 0 {
            *jac = sys.jacobian(&x)?;
            refreshed = true;
        }
        prev = res;
        let a = [jac[0], jac[1], *t];
        let b = [-g[0], -g[1], -dot(t, &sub(&x, xp))];
        let delta = match solve3(a, b) {
            Some(d) => d,
            None if !refreshed => {
                *jac = sys.jacobian(&x)?;
                refreshed = true;
                solve3([jac[0], jac[1], *t], b).ok_or(Error::CorrectorDiverged)?
            }
            None => return Err(Error::CorrectorDiverged),
        };
        x = axpy(&x, 1.0, &delta);
        sys.guard(&x)?;
    }
    Err(Error::CorrectorDiverged)
}

/// Newton on `G(·, ·, λ) = 0` at fixed `λ`.
fn solve_fixed_lambda<S: ContinuationSystem + ?Sized>(
    sys: &S,
    start: &Vec3,
    lambda: f64,
    jac: &Jacobian,
    opts: &ContinuationOptions,
) -> Result<(Vec3, f64)> {
    let mut x = [start[0], start[1], lambda];
    let mut j = *jac;
    let mut refreshed = false;
    let mut prev = f64::INFINITY;
    for it in 0..=2 * opts.max_corrector_iters {
        let g = sys.residual(&x)?;
        let res = scaled_residual(&g, &j);
        if res <= opts.corrector_tol {
            return Ok((x, res));
        }
        if it == 2 * opts.max_corrector_iters {
            break;
        }
        if (res > 0.5 * prev || it == 0) && !refreshed {
            j = sys.jacobian(&x)?;
            refreshed = true;
        }
        prev = res;
        let d = solve2([[j[0][0], j[0][1]], [j[1][0], j[1][1]]], [-g[0], -g[1]]).ok_or(Error::CorrectorDiverged)?;
        x[0] += d[0];
        x[1] += d[1];
        sys.guard(&x)?;
    }
    Err(Error::NoConvergence { iterations: 2 * opts.max_corrector_iters })
}

/// One predictor-corrector step from `point` with step length `ds`.
///
/// Returns the new point (tangent oriented along the old one) and the number
/// of corrector iterations.
pub fn step<S: ContinuationSystem + ?Sized>(
    sys: &S,
    point: &ContinuationPoint,
    ds: f64,
    opts: &ContinuationOptions,
) -> Result<(ContinuationPoint, usize)> {
    let mut jac = sys.jacobian(&point.x)?;
    let xp = axpy(&point.x, ds, &point.tangent);
    let c = correct(sys, &xp, &point.tangent, &mut jac, opts)?;
    let jn = sys.jacobian(&c.x)?;
    let t = oriented_tangent(&jn, Some(&point.tangent), opts.direction)?;
    let bordered = dot(&null_vector(&jn), &t);
    let s = point.s + norm(&sub(&c.x, &point.x));
    Ok((ContinuationPoint { x: c.x, tangent: t, s, residual: c.residual, bordered }, c.iterations))
}

/// Where the tracer currently is.
struct Cursor {
    point: ContinuationPoint,
    jac: Jacobian,
}

/// Traces the solution curve through `x0`.
///
/// `x0` is polished at fixed `λ` first if its residual is above tolerance.
pub fn trace_branch<S: ContinuationSystem + ?Sized>(
    sys: &S,
    x0: Vec3,
    label: &str,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    opts.validate()?;
    sys.guard(&x0)?;
    let jac = sys.jacobian(&x0)?;
    let g = sys.residual(&x0)?;
    let (x, jac) = if scaled_residual(&g, &jac) > opts.corrector_tol {
        let (x, _) = solve_fixed_lambda(sys, &x0, x0[2], &jac, opts)?;
        (x, sys.jacobian(&x)?)
    } else {
        (x0, jac)
    };
    let t = oriented_tangent(&jac, None, opts.direction)?;
    let g = sys.residual(&x)?;
    let start = ContinuationPoint {
        x,
        tangent: t,
        s: 0.0,
        residual: scaled_residual(&g, &jac),
        bordered: dot(&null_vector(&jac), &t),
    };
    Ok(run(sys, Cursor { point: start, jac }, label, opts))
}

/// Traces from a prepared start point (for example a branch-switching seed),
/// keeping its tangent orientation.
pub fn trace_from<S: ContinuationSystem + ?Sized>(
    sys: &S,
    start: &ContinuationPoint,
    label: &str,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    opts.validate()?;
    sys.guard(&start.x)?;
    let jac = sys.jacobian(&start.x)?;
    let t = oriented_tangent(&jac, Some(&start.tangent), opts.direction)?;
    let point = ContinuationPoint { tangent: t, s: 0.0, bordered: dot(&null_vector(&jac), &t), ..*start };
    Ok(run(sys, Cursor { point, jac }, label, opts))
}

fn run<S: ContinuationSystem + ?Sized>(sys: &S, mut cur: Cursor, label: &str, opts: &ContinuationOptions) -> Branch {
    let start = cur.point;
    let mut branch = Branch {
        start_label: label.into(),
        points: alloc::vec![start],
        termination: Termination::MaxSteps,
        branch_points: Vec::new(),
        marks: Vec::new(),
        rejected_steps: 0,
    };
    // A start exactly on a bound or mark counts as landed.
    for &m in &opts.lambda_marks {
        if start.x[2] == m {
            branch.marks.push(MarkedPoint { lambda: m, point: start });
        }
    }
    let mut ds = opts.ds0;
    let mut easy_steps = 0usize;
    for _ in 0..opts.max_steps {
        let prev = cur.point;
        let xp = axpy(&prev.x, ds, &prev.tangent);
        let mut jac = cur.jac;
        let attempt = correct(sys, &xp, &prev.tangent, &mut jac, opts).and_then(|c| {
            if norm(&sub(&c.x, &prev.x)) > 2.0 * opts.ds_max.max(ds) {
                return Err(Error::CorrectorDiverged);
            }
            let jn = sys.jacobian(&c.x)?;
            let t = oriented_tangent(&jn, Some(&prev.tangent), opts.direction)?;
            if dot(&t, &prev.tangent) < opts.min_tangent_dot {
                return Err(Error::CorrectorDiverged);
            }
            Ok((c, jn, t))
        });
        let (c, jn, t) = match attempt {
            Ok(v) => v,
            Err(Error::DivergedToOrigin) if ds <= opts.ds_min => {
                branch.termination = Termination::DomainGuard;
                return branch;
            }
            Err(_) => {
                branch.rejected_steps += 1;
                easy_steps = 0;
                ds *= 0.5;
                if ds < opts.ds_min {
                    branch.termination = Termination::StepFailure;
                    return branch;
                }
                continue;
            }
        };
        let point = ContinuationPoint {
            x: c.x,
            tangent: t,
            s: prev.s + norm(&sub(&c.x, &prev.x)),
            residual: c.residual,
            bordered: dot(&null_vector(&jn), &t),
        };

        if opts.detect_branch_points && prev.bordered != 0.0 && point.bordered.signum() != prev.bordered.signum() {
            if let Some(bp) = locate_branch_point(sys, &prev, &cur.jac, &point, opts) {
                branch.branch_points.push(bp);
            }
        }

        // Marks strictly between the two points.
        let (lo, hi) = if prev.x[2] < point.x[2] { (prev.x[2], point.x[2]) } else { (point.x[2], prev.x[2]) };
        for &m in &opts.lambda_marks {
            if m > lo && m <= hi && m != prev.x[2] {
                if let Some(p) = land(sys, &prev, &point, m, &jn, opts) {
                    branch.marks.push(MarkedPoint { lambda: m, point: p });
                }
            }
        }

        let out_of_range = point.x[2] > opts.lambda_max || point.x[2] < opts.lambda_min;
        if out_of_range {
            let bound = if point.x[2] > opts.lambda_max { opts.lambda_max } else { opts.lambda_min };
            if let Some(p) = land(sys, &prev, &point, bound, &jn, opts) {
                branch.points.push(p);
            }
            branch.termination = Termination::LambdaBound;
            return branch;
        }

        branch.points.push(point);
        cur = Cursor { point, jac: jn };

        if branch.points.len() > 4
            && point.s > 3.0 * opts.ds_max
            && norm(&sub(&point.x, &start.x)) < ds
            && dot(&point.tangent, &start.tangent) > 0.9
        {
            branch.termination = Termination::ClosedLoop;
            return branch;
        }

        if c.iterations <= 2 {
            easy_steps += 1;
            if easy_steps >= 4 {
                ds = (2.0 * ds).min(opts.ds_max);
                easy_steps = 0;
            }
        } else {
            easy_steps = 0;
        }
    }
    branch.termination = Termination::MaxSteps;
    branch
}

/// Exact curve point at parameter `lambda` between `a` and `b`.
fn land<S: ContinuationSystem + ?Sized>(
    sys: &S,
    a: &ContinuationPoint,
    b: &ContinuationPoint,
    lambda: f64,
    jac: &Jacobian,
    opts: &ContinuationOptions,
) -> Option<ContinuationPoint> {
    let span = b.x[2] - a.x[2];
    let w = if span != 0.0 { (lambda - a.x[2]) / span } else { 0.5 };
    let guess = axpy(&a.x, w, &sub(&b.x, &a.x));
    let (x, residual) = solve_fixed_lambda(sys, &guess, lambda, jac, opts).ok()?;
    let j = sys.jacobian(&x).ok()?;
    let t = oriented_tangent(&j, Some(&a.tangent), opts.direction).unwrap_or(a.tangent);
    Some(ContinuationPoint {
        x,
        tangent: t,
        s: a.s + norm(&sub(&x, &a.x)),
        residual,
        bordered: dot(&null_vector(&j), &t),
    })
}

/// Localizes a sign change of the bordered determinant between consecutive
/// accepted points `a` and `b`.
pub fn detect_branch_point<S: ContinuationSystem + ?Sized>(
    sys: &S,
    a: &ContinuationPoint,
    b: &ContinuationPoint,
    opts: &ContinuationOptions,
) -> Option<BranchPointRecord> {
    if a.bordered == 0.0 || a.bordered.signum() == b.bordered.signum() {
        return None;
    }
    let jac = sys.jacobian(&a.x).ok()?;
    locate_branch_point(sys, a, &jac, b, opts)
}

/// Illinois iteration on `τ(σ) = n(x(σ))·t_a`, where `x(σ)` is the curve point
/// on the hyperplane `t_a·(x − x_a) = σ`.
fn locate_branch_point<S: ContinuationSystem + ?Sized>(
    sys: &S,
    a: &ContinuationPoint,
    jac_a: &Jacobian,
    b: &ContinuationPoint,
    opts: &ContinuationOptions,
) -> Option<BranchPointRecord> {
    let ta = a.tangent;
    let tau_at = |jac: &Jacobian| dot(&null_vector(jac), &ta);
    let mut lo = (0.0, tau_at(jac_a), a.x, *jac_a);
    let jac_b = sys.jacobian(&b.x).ok()?;
    let mut hi = (dot(&ta, &sub(&b.x, &a.x)), tau_at(&jac_b), b.x, jac_b);
    if lo.1.signum() == hi.1.signum() {
        return None;
    }
    let tau_scale = (jac_norm(jac_a) * jac_norm(jac_a)).max(jac_norm(&jac_b) * jac_norm(&jac_b));
    let mut best = if lo.1.abs() < hi.1.abs() { lo } else { hi };
    let mut side = 0i8;
    for _ in 0..20 {
        if best.1.abs() <= opts.bp_tol * tau_scale || (hi.0 - lo.0).abs() < 1e-12 {
            break;
        }
        let sigma = (lo.0 * hi.1 - hi.0 * lo.1) / (hi.1 - lo.1);
        let guess = axpy(&lo.2, (sigma - lo.0) / (hi.0 - lo.0), &sub(&hi.2, &lo.2));
        // Project the interpolated guess onto the σ-hyperplane.
        let off = sigma - dot(&ta, &sub(&guess, &a.x));
        let xp = axpy(&guess, off, &ta);
        let mut jac = best.3;
        let Ok(c) = correct(sys, &xp, &ta, &mut jac, opts) else { break };
        let Ok(jc) = sys.jacobian(&c.x) else { break };
        let tau = tau_at(&jc);
        let sample = (sigma, tau, c.x, jc);
        if tau.signum() == lo.1.signum() {
            lo = sample;
            if side == -1 {
                hi.1 *= 0.5;
            }
            side = -1;
        } else {
            hi = sample;
            if side == 1 {
                lo.1 *= 0.5;
            }
            side = 1;
        }
        if tau.abs() < best.1.abs() {
            best = sample;
        }
    }
    let (x, jac) = (best.2, best.3);
    let (s1, s2, v1) = singular_values(&jac);
    if !(s2 <= opts.bp_max_ratio * s1) {
        return None;
    }
    let mut n1 = sub(&ta, &scale(&v1, dot(&ta, &v1)));
    let n1n = norm(&n1);
    n1 = if n1n > 0.0 { scale(&n1, 1.0 / n1n) } else { ta };
    let n2 = cross(&v1, &n1);
    Some(BranchPointRecord {
        x,
        null_tangents: [n1, n2],
        detected_by: (a.bordered, b.bordered),
        sigma_ratio: if s1 > 0.0 { s2 / s1 } else { 0.0 },
        incoming: ta,
    })
}

/// Seeds on the crossing branch at a simple branch point: `x ± δ·n₂` with
/// `δ = ds0`, each corrected on the hyperplane orthogonal to `n₂`. The
/// positive orientation comes first. A seed whose corrector fails is
/// returned as [`Error::SeedNotConverged`].
pub fn switch_branch<S: ContinuationSystem + ?Sized>(
    sys: &S,
    bp: &BranchPointRecord,
    opts: &ContinuationOptions,
) -> Result<Vec<Result<ContinuationPoint>>> {
    let jac = sys.jacobian(&bp.x)?;
    let (s1, s2, v1) = singular_values(&jac);
    let ratio = if s1 > 0.0 { s2 / s1 } else { 0.0 };
    if ratio > opts.rank_tol {
        return Err(Error::NotABranchPoint { ratio });
    }
    // Recompute the null basis at the record's point.
    let mut n1 = sub(&bp.incoming, &scale(&v1, dot(&bp.incoming, &v1)));
    let n1n = norm(&n1);
    n1 = if n1n > 0.0 { scale(&n1, 1.0 / n1n) } else { bp.null_tangents[0] };
    let n2 = cross(&v1, &n1);
    let delta = opts.ds0;
    let mut out = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let dir = scale(&n2, sign);
        let xp = axpy(&bp.x, delta, &dir);
        let mut j = jac;
        let seed = correct(sys, &xp, &dir, &mut j, opts)
            .and_then(|c| {
                let jn = sys.jacobian(&c.x)?;
                let t = oriented_tangent(&jn, Some(&dir), opts.direction)?;
                Ok(ContinuationPoint {
                    x: c.x,
                    tangent: t,
                    s: 0.0,
                    residual: c.residual,
                    bordered: dot(&null_vector(&jn), &t),
                })
            })
            .map_err(|_| Error::SeedNotConverged);
        out.push(seed);
    }
    Ok(out)
}
