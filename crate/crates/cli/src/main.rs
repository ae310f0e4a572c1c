use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polepath::config::RunConfig;
use polepath::manifest::RunManifest;
use polepath::rows::{export_energy, PlaneMap};
use polepath::{run, CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "polepath", version, about = "Trace S-matrix poles of coupled-channel models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Trace only the start with this label.
    #[arg(long)]
    seed_label: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find start states on the scan grid and write scan.csv.
    Scan(Common),
    /// Scan, trace all branches and switch at branch points.
    Trace(Common),
    /// Exterior complex scaling spectra over the configured λ values.
    Ecs(Common),
    /// Add energy-plane columns to CSV files with re_u and im_u.
    ExportEnergy {
        #[command(flatten)]
        common: Common,
        /// Input CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Re-evaluate the residual on a random 1% of the rows of a traced run.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let path = common.config.as_ref().ok_or_else(|| CliError::Invalid("--config is required".into()))?;
    RunConfig::load(path)
}

fn out_dir(common: &Common, cfg: Option<&RunConfig>) -> Result<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .ok_or_else(|| CliError::Invalid("no output directory: pass --out or set `output`".into()))
}

fn check(m: &RunManifest) -> Result<()> {
    match m.failed_branches() {
        0 => Ok(()),
        failed => Err(CliError::PartialFailure { failed, total: m.branches.len() }),
    }
}

fn report(m: &RunManifest, out: &Path) {
    for b in &m.branches {
        let end = b.endpoint.map(|e| format!("u = {:.8} {:+.8}i at {:.6}", e[0], e[1], e[2])).unwrap_or_default();
        let how = b.termination.as_deref().or(b.error.as_deref()).unwrap_or("?");
        println!("{:<24} {:<14} {} ({:.2} s)", b.label, how, end, b.seconds);
    }
    for bp in &m.branch_points {
        println!(
            "branch point lambda = {:.7} u = {:.7} {:+.7}i on {}",
            bp.lambda,
            bp.re_u,
            bp.im_u,
            bp.found_on.join(", ")
        );
    }
    println!("wrote {}", out.display());
}

fn execute(cli: Cli) -> Result<()> {
    let pool = |threads: Option<usize>| -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n);
        }
        Ok(b.build()?)
    };
    match cli.command {
        Command::Scan(c) => {
            let cfg = load(&c)?;
            let out = out_dir(&c, Some(&cfg))?;
            let m = pool(c.threads)?.install(|| run::run_scan(&cfg, &out))?;
            for s in &m.scan {
                println!(
                    "{:<10} u = {:.8} {:+.8}i  E = {:.8} {:+.8}i  {}",
                    s.label, s.re_u, s.im_u, s.re_e, s.im_e, s.sheet
                );
            }
            Ok(())
        }
        Command::Trace(c) => {
            let cfg = load(&c)?;
            let out = out_dir(&c, Some(&cfg))?;
            let m = pool(c.threads)?.install(|| run::run_trace(&cfg, &out, c.seed_label.as_deref()))?;
            report(&m, &out);
            check(&m)
        }
        Command::Ecs(c) => {
            let cfg = load(&c)?;
            let out = out_dir(&c, Some(&cfg))?;
            let (solver, name) = polepath::default_eigensolver();
            let m = pool(c.threads)?.install(|| run::run_ecs(&cfg, &out, solver.as_ref(), name))?;
            if let Some(e) = &m.ecs {
                for (l, n) in e.lambdas.iter().zip(&e.bound_states) {
                    println!("lambda = {l:.4}: {n} bound");
                }
            }
            Ok(())
        }
        Command::ExportEnergy { common, inputs } => {
            let out = out_dir(&common, None)?;
            let cfg = match &common.config {
                Some(_) => load(&common)?,
                None => RunManifest::read(&out)?.config,
            };
            let map = PlaneMap::from_config(&cfg)?;
            std::fs::create_dir_all(&out).map_err(|e| CliError::Io { path: out.clone(), source: e })?;
            for input in inputs {
                let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("rows");
                let target = out.join(format!("{stem}.energy.csv"));
                let n = export_energy(&map, &input, &target)?;
                println!("{} rows -> {}", n, target.display());
            }
            Ok(())
        }
        Command::Verify { common, rng_seed } => {
            let out = out_dir(&common, common.config.as_ref().map(|_| load(&common)).transpose()?.as_ref())?;
            let r = pool(common.threads)?.install(|| run::verify(&out, rng_seed))?;
            println!("checked {} rows, worst residual {:.3e} (tolerance {:.1e})", r.checked, r.worst, r.tolerance);
            if r.failed > 0 {
                return Err(CliError::VerifyFailed { failed: r.failed, checked: r.checked });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
