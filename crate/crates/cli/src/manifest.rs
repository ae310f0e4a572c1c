//! `manifest.json`, written after every other output of a run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub label: String,
    pub re_u: f64,
    pub im_u: f64,
    pub re_e: f64,
    pub im_e: f64,
    pub sheet: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mark {
    pub lambda: f64,
    pub re_u: f64,
    pub im_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub label: String,
    pub parent: Option<String>,
    pub depth: usize,
    /// `[Re u, Im u, λ]` of the requested start.
    pub start: [f64; 3],
    pub file: Option<String>,
    pub endpoint: Option<[f64; 3]>,
    pub termination: Option<String>,
    pub points: usize,
    pub rejected_steps: usize,
    pub branch_points: Vec<[f64; 3]>,
    pub marks: Vec<Mark>,
    pub seconds: f64,
    pub error: Option<String>,
}

impl BranchSummary {
    /// Errors, step failures and step-count exhaustion count as failures.
    pub fn failed(&self) -> bool {
        self.error.is_some() || matches!(self.termination.as_deref(), Some("step_failure" | "max_steps"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPointSummary {
    pub lambda: f64,
    pub re_u: f64,
    pub im_u: f64,
    pub sigma_ratio: f64,
    /// Branches on which the point was detected, in trace order.
    pub found_on: Vec<String>,
    /// Whether switching was attempted here.
    pub switched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcsSummary {
    pub file: String,
    pub solver: String,
    pub lambdas: Vec<f64>,
    /// Eigenvalues with `Re E` below the lowest threshold and `|Im E| < 1e−6`, per λ.
    pub bound_states: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub polepath: String,
    pub format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self { polepath: env!("CARGO_PKG_VERSION").into(), format: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub scan: Vec<ScanEntry>,
    pub branches: Vec<BranchSummary>,
    pub branch_points: Vec<BranchPointSummary>,
    pub ecs: Option<EcsSummary>,
    pub seconds: f64,
    pub versions: Versions,
}

impl RunManifest {
    pub fn new(command: &str, config: RunConfig) -> Self {
        Self {
            command: command.into(),
            config,
            scan: Vec::new(),
            branches: Vec::new(),
            branch_points: Vec::new(),
            ecs: None,
            seconds: 0.0,
            versions: Versions::default(),
        }
    }

    pub fn failed_branches(&self) -> usize {
        self.branches.iter().filter(|b| b.failed()).count()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Json { path: path.clone(), source: e })?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Json { path, source: e })
    }
}
