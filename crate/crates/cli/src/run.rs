//! Orchestration: scan, continuation with recursive branch switching, ECS
//! sweeps and verification.

use std::path::Path;
use std::time::Instant;

use polepath_core::continuation::{
    fd_jacobian, scaled_residual, switch_branch, trace_branch, trace_from, Branch, BranchPointRecord,
    ContinuationPoint, ContinuationSystem,
};
use polepath_core::ecs::{bound_states, relevant, spectrum_with, BOUND_ANGLE};
use polepath_core::eigen::EigenSolver;
use polepath_core::scattering::{dedup_roots, label_uncoupled_states, scan_start_states, PoleSystem, ScanOptions};
use polepath_core::C64;
use rand::rngs::StdRng;
use rand::seq::index::sample;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ContinuationConfig, RunConfig, ScanTrace};
use crate::error::{CliError, Result};
use crate::manifest::{BranchPointSummary, BranchSummary, EcsSummary, Mark, RunManifest, ScanEntry};
use crate::rows::{read_rows, write_rows, PlaneMap, Row};

/// Branch points closer than this (max-norm in `(Re u, Im u, λ)`) are the same.
pub const BRANCH_POINT_MERGE: f64 = 1e-4;

/// Fraction of rows `verify` re-evaluates.
pub const VERIFY_FRACTION: f64 = 0.01;

/// A start point for continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct Start {
    pub label: String,
    pub u: C64,
    pub lambda: f64,
}

/// `scan.csv`: the branch columns preceded by the start label.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct ScanRow<'a> {
    label: &'a str,
    s: f64,
    re_u: f64,
    im_u: f64,
    lambda: f64,
    #[serde(rename = "re_E")]
    re_e: f64,
    #[serde(rename = "im_E")]
    im_e: f64,
    re_k1: f64,
    im_k1: f64,
    re_k2: f64,
    im_k2: f64,
    residual: Option<f64>,
    sheet: &'a str,
}

fn continuation(cfg: &RunConfig) -> Result<&ContinuationConfig> {
    cfg.continuation.as_ref().ok_or_else(|| CliError::Invalid("this command needs a continuation section".into()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Roots of `F` on the scan grid, labelled by channel and level when the
/// model is uncoupled at the scan parameter.
pub fn scan(cfg: &RunConfig) -> Result<Vec<(String, Row)>> {
    let Some(sc) = &cfg.scan else { return Ok(Vec::new()) };
    let cont = continuation(cfg)?;
    let eval = cfg.evaluator()?;
    let map = PlaneMap::from_config(cfg)?;
    let p = cont.binding.at(sc.lambda);
    let opts = ScanOptions { newton_from_all: sc.newton_from_all, ..ScanOptions::default() };
    let mut roots = Vec::new();
    for r in &sc.regions {
        roots.extend(scan_start_states(&eval, &p, &r.region, r.grid[0], r.grid[1], &opts));
    }
    let roots = dedup_roots(roots, opts.dedup_eps);
    let points: Vec<_> = roots.iter().map(|r| r.point).collect();
    let labels = if p.coupling == 0.0 {
        let residuals = points.iter().map(|pt| eval.channel_residuals(pt.u, &p)).collect::<Result<Vec<_>, _>>()?;
        label_uncoupled_states(&points, &residuals)
    } else {
        (0..points.len()).map(|i| format!("seed-{i}")).collect()
    };
    roots
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (r, label))| Ok((label, map.row(i as f64, r.point.u, sc.lambda, Some(r.residual))?)))
        .collect()
}

pub fn run_scan(cfg: &RunConfig, out: &Path) -> Result<RunManifest> {
    let t0 = Instant::now();
    ensure_dir(out)?;
    let hits = scan(cfg)?;
    let rows: Vec<ScanRow> = hits
        .iter()
        .map(|(label, r)| ScanRow {
            label,
            s: r.s,
            re_u: r.re_u,
            im_u: r.im_u,
            lambda: r.lambda,
            re_e: r.re_e,
            im_e: r.im_e,
            re_k1: r.re_k1,
            im_k1: r.im_k1,
            re_k2: r.re_k2,
            im_k2: r.im_k2,
            residual: r.residual,
            sheet: &r.sheet,
        })
        .collect();
    write_rows(&out.join("scan.csv"), &rows)?;
    let mut m = RunManifest::new("scan", cfg.clone());
    m.scan = scan_entries(&hits);
    m.seconds = t0.elapsed().as_secs_f64();
    m.write(out)?;
    Ok(m)
}

fn scan_entries(hits: &[(String, Row)]) -> Vec<ScanEntry> {
    hits.iter()
        .map(|(label, r)| ScanEntry {
            label: label.clone(),
            re_u: r.re_u,
            im_u: r.im_u,
            re_e: r.re_e,
            im_e: r.im_e,
            sheet: r.sheet.clone(),
            residual: r.residual.unwrap_or(f64::NAN),
        })
        .collect()
}

/// Explicit seeds followed by scan roots, optionally restricted to one label.
pub fn starts(cfg: &RunConfig, hits: &[(String, Row)], only: Option<&str>) -> Result<Vec<Start>> {
    let cont = continuation(cfg)?;
    let mut out: Vec<Start> = cont
        .seeds
        .iter()
        .enumerate()
        .map(|(i, s)| Start {
            label: s.label.clone().unwrap_or_else(|| format!("seed-{i}")),
            u: C64::new(s.u[0], s.u[1]),
            lambda: cont.start_lambda,
        })
        .collect();
    let policy = cfg.scan.as_ref().map(|s| s.trace).unwrap_or_default();
    out.extend(
        hits.iter()
            .filter(|(l, _)| match policy {
                ScanTrace::All => true,
                ScanTrace::Labelled => !l.starts_with("seed-"),
                ScanTrace::None => false,
            })
            .map(|(l, r)| Start { label: l.clone(), u: r.u(), lambda: r.lambda }),
    );
    if let Some(only) = only {
        out.retain(|s| s.label == only);
    }
    Ok(out)
}

enum Task {
    Fresh(Start),
    Switched { label: String, parent: String, depth: usize, seed: ContinuationPoint },
}

struct Traced {
    summary: BranchSummary,
    branch: Option<Branch>,
}

fn run_task(cfg: &RunConfig, task: &Task) -> Traced {
    let t0 = Instant::now();
    let cont = cfg.continuation.as_ref().expect("validated");
    let (label, parent, depth, start) = match task {
        Task::Fresh(s) => (s.label.clone(), None, 0, [s.u.re, s.u.im, s.lambda]),
        Task::Switched { label, parent, depth, seed } => (label.clone(), Some(parent.clone()), *depth, seed.x),
    };
    let result = cfg.evaluator().map_err(|e| e.to_string()).and_then(|eval| {
        let sys = PoleSystem::new(&eval, cont.binding);
        match task {
            Task::Fresh(_) => trace_branch(&sys, start, &label, &cont.options),
            Task::Switched { seed, .. } => trace_from(&sys, seed, &label, &cont.options),
        }
        .map_err(|e| e.to_string())
    });
    let mut summary = BranchSummary {
        label,
        parent,
        depth,
        start,
        file: None,
        endpoint: None,
        termination: None,
        points: 0,
        rejected_steps: 0,
        branch_points: Vec::new(),
        marks: Vec::new(),
        seconds: 0.0,
        error: None,
    };
    let branch = match result {
        Ok(b) => {
            summary.endpoint = b.last().map(|p| p.x);
            summary.termination = Some(b.termination.as_str().into());
            summary.points = b.points.len();
            summary.rejected_steps = b.rejected_steps;
            summary.branch_points = b.branch_points.iter().map(|r| r.x).collect();
            summary.marks =
                b.marks.iter().map(|m| Mark { lambda: m.lambda, re_u: m.point.x[0], im_u: m.point.x[1] }).collect();
            Some(b)
        }
        Err(e) => {
            summary.error = Some(e);
            None
        }
    };
    summary.seconds = t0.elapsed().as_secs_f64();
    Traced { summary, branch }
}

fn same_point(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= BRANCH_POINT_MERGE)
}

fn file_name(index: usize, label: &str) -> String {
    let clean: String =
        label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!("branch_{index:03}_{clean}.csv")
}

/// Traces every start and, level by level, the branches that cross at newly
/// found branch points. Tasks of one level run in parallel; results are kept
/// in task order so outputs do not depend on scheduling.
pub fn trace_all(
    cfg: &RunConfig,
    starts: Vec<Start>,
) -> Result<(Vec<BranchSummary>, Vec<Branch>, Vec<BranchPointSummary>)> {
    let cont = continuation(cfg)?;
    let mut summaries = Vec::new();
    let mut branches = Vec::new();
    let mut bps: Vec<BranchPointSummary> = Vec::new();
    let mut level: Vec<Task> = starts.into_iter().map(Task::Fresh).collect();
    while !level.is_empty() {
        let traced: Vec<Traced> = level.par_iter().map(|t| run_task(cfg, t)).collect();
        let mut next = Vec::new();
        for t in traced {
            let depth = t.summary.depth;
            let label = t.summary.label.clone();
            let records: Vec<BranchPointRecord> =
                t.branch.as_ref().map(|b| b.branch_points.clone()).unwrap_or_default();
            summaries.push(t.summary);
            branches.push(t.branch);
            for rec in records {
                if let Some(known) = bps.iter_mut().find(|s| same_point(&[s.re_u, s.im_u, s.lambda], &rec.x)) {
                    if !known.found_on.contains(&label) {
                        known.found_on.push(label.clone());
                    }
                    continue;
                }
                let switch = cont.switch_branches && depth < cont.max_switch_depth;
                let k = bps.len();
                bps.push(BranchPointSummary {
                    lambda: rec.x[2],
                    re_u: rec.x[0],
                    im_u: rec.x[1],
                    sigma_ratio: rec.sigma_ratio,
                    found_on: vec![label.clone()],
                    switched: switch,
                });
                if !switch {
                    continue;
                }
                let eval = cfg.evaluator()?;
                let sys = PoleSystem::new(&eval, cont.binding);
                let Ok(seeds) = switch_branch(&sys, &rec, &cont.options) else { continue };
                for (seed, sign) in seeds.into_iter().zip(["+", "-"]) {
                    if let Ok(seed) = seed {
                        next.push(Task::Switched {
                            label: format!("{label}/bp{k}{sign}"),
                            parent: label.clone(),
                            depth: depth + 1,
                            seed,
                        });
                    }
                }
            }
        }
        level = next;
    }
    let traced = branches.into_iter().flatten().collect();
    Ok((summaries, traced, bps))
}

fn branch_rows(map: &PlaneMap, b: &Branch) -> Result<Vec<Row>> {
    b.points.iter().map(|p| map.row(p.s, C64::new(p.x[0], p.x[1]), p.x[2], Some(p.residual))).collect()
}

/// `trace`: scan (if configured), continuation and branch switching. Writes
/// one CSV per branch, then the manifest. Partial failures are reported
/// through [`CliError::PartialFailure`] after the manifest is written.
pub fn run_trace(cfg: &RunConfig, out: &Path, only: Option<&str>) -> Result<RunManifest> {
    let t0 = Instant::now();
    ensure_dir(out)?;
    let hits = scan(cfg)?;
    let starts = starts(cfg, &hits, only)?;
    let map = PlaneMap::from_config(cfg)?;
    let (mut summaries, branches, bps) =
        if cfg.continuation.is_some() { trace_all(cfg, starts)? } else { (Vec::new(), Vec::new(), Vec::new()) };
    let mut traced = branches.iter();
    for (i, s) in summaries.iter_mut().enumerate() {
        if s.error.is_some() {
            continue;
        }
        let b = traced.next().expect("one branch per successful summary");
        let name = file_name(i, &s.label);
        write_rows(&out.join(&name), &branch_rows(&map, b)?)?;
        s.file = Some(name);
    }
    let mut m = RunManifest::new("trace", cfg.clone());
    m.scan = scan_entries(&hits);
    m.branches = summaries;
    m.branch_points = bps;
    m.seconds = t0.elapsed().as_secs_f64();
    m.write(out)?;
    Ok(m)
}

/// `ecs`: one spectrum per λ; the plotted window (or all eigenvalues) goes to
/// `ecs.csv` with `method=ecs`.
pub fn run_ecs<S: EigenSolver + Sync + ?Sized>(
    cfg: &RunConfig,
    out: &Path,
    solver: &S,
    solver_name: &str,
) -> Result<RunManifest> {
    let t0 = Instant::now();
    let ecs = cfg.ecs.as_ref().ok_or_else(|| CliError::Invalid("config has no ecs section".into()))?;
    let binding = cfg.ecs_binding().ok_or_else(|| CliError::Invalid("ecs needs a binding".into()))?;
    ensure_dir(out)?;
    let model = cfg.model()?;
    let map = PlaneMap::from_config(cfg)?;
    let lambdas = ecs.lambdas.values();
    let spectra: Vec<Vec<C64>> = lambdas
        .par_iter()
        .map(|&l| spectrum_with(solver, &model, &ecs.grid, &binding.at(l)))
        .collect::<Result<_, _>>()?;
    let lowest = cfg.model.thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    let mut bound = Vec::new();
    for (&l, ev) in lambdas.iter().zip(&spectra) {
        bound.push(bound_states(ev, lowest, BOUND_ANGLE).len());
        let shown = if ecs.all_eigenvalues { ev.clone() } else { relevant(ev) };
        for (i, e) in shown.iter().enumerate() {
            let z = map.from_ecs_energy(*e, ecs.grid.angle);
            let mut row = map.row(i as f64, z, l, None)?;
            // Keep the eigenvalue itself rather than its round trip through u.
            row.re_e = e.re;
            row.im_e = e.im;
            rows.push(row.into_ecs());
        }
    }
    write_rows(&out.join("ecs.csv"), &rows)?;
    let mut m = RunManifest::new("ecs", cfg.clone());
    m.ecs = Some(EcsSummary { file: "ecs.csv".into(), solver: solver_name.into(), lambdas, bound_states: bound });
    m.seconds = t0.elapsed().as_secs_f64();
    m.write(out)?;
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checked: usize,
    pub failed: usize,
    pub worst: f64,
    pub tolerance: f64,
}

/// Re-evaluates `|G|/‖J‖_F` on a seeded random 1% of each branch file's rows.
pub fn verify(out: &Path, seed: u64) -> Result<VerifyReport> {
    let m = RunManifest::read(out)?;
    let cfg = &m.config;
    let cont = continuation(cfg)?;
    let eval = cfg.evaluator()?;
    let sys = PoleSystem::new(&eval, cont.binding);
    let tol = cont.options.corrector_tol;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut report = VerifyReport { checked: 0, failed: 0, worst: 0.0, tolerance: tol };
    for b in &m.branches {
        let Some(file) = &b.file else { continue };
        let rows = read_rows(&out.join(file))?;
        if rows.is_empty() {
            continue;
        }
        let n = ((rows.len() as f64 * VERIFY_FRACTION).ceil() as usize).clamp(1, rows.len());
        let mut picks = sample(&mut rng, rows.len(), n).into_vec();
        picks.sort_unstable();
        for i in picks {
            let r = &rows[i];
            let x = [r.re_u, r.im_u, r.lambda];
            let res = sys
                .residual(&x)
                .and_then(|g| Ok(scaled_residual(&g, &fd_jacobian(&sys, &x)?)))
                .unwrap_or(f64::INFINITY);
            report.checked += 1;
            report.worst = report.worst.max(res);
            if !(res <= tol) {
                report.failed += 1;
            }
        }
    }
    Ok(report)
}
