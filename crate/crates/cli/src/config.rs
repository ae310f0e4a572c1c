//! The JSON run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use polepath_core::continuation::ContinuationOptions;
use polepath_core::ecs::EcsConfig;
use polepath_core::model::{Channel, ChannelModel, GaussianTwoChannel, ParamBinding};
use polepath_core::scattering::{Evaluator, Region};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Two channels with `ξ₁ < ξ₂`, traced in the uniformized `u`-plane.
    UniformizedTwoChannel,
    /// All thresholds equal, traced in the common momentum `k`.
    EqualThresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// `V_ii = −λ_i exp(−r²/4)`, `V_12 = λ_c exp(−r²)`.
    GaussianTwoChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub thresholds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_momenta: Option<Vec<u32>>,
    pub mass: f64,
    pub r_max: f64,
    pub grid_points: usize,
    pub potential: PotentialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRegion {
    #[serde(flatten)]
    pub region: Region,
    /// Cells along `Re` and `Im`.
    pub grid: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Continuation parameter at which roots are searched.
    pub lambda: f64,
    /// Searched independently; roots found in several are merged. A finer
    /// region around `u = 0` helps, because Newton basins shrink there.
    pub regions: Vec<ScanRegion>,
    #[serde(default)]
    pub newton_from_all: bool,
    /// Which roots become continuation starts.
    #[serde(default)]
    pub trace: ScanTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanTrace {
    #[default]
    All,
    /// Only roots that received a channel label (`c1n0`, `c2~n1`, ...).
    Labelled,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seed {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// `[Re, Im]` of the plane coordinate.
    pub u: [f64; 2],
}

fn default_true() -> bool {
    true
}

fn default_depth() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationConfig {
    pub binding: ParamBinding,
    /// λ at which explicit seeds are given.
    pub start_lambda: f64,
    #[serde(default)]
    pub seeds: Vec<Seed>,
    pub options: ContinuationOptions,
    #[serde(default = "default_true")]
    pub switch_branches: bool,
    #[serde(default = "default_depth")]
    pub max_switch_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaValues {
    Grid { start: f64, stop: f64, count: usize },
    List(Vec<f64>),
}

impl LambdaValues {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaValues::List(v) => v.clone(),
            LambdaValues::Grid { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcsRunConfig {
    #[serde(flatten)]
    pub grid: EcsConfig,
    pub lambdas: LambdaValues,
    /// Defaults to the continuation binding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<ParamBinding>,
    /// Write every eigenvalue instead of the plotted window only.
    #[serde(default)]
    pub all_eigenvalues: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<ContinuationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecs: Option<EcsRunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { path: path.to_owned(), message: e.to_string() })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config { path: path.to_owned(), message: e.to_string() })?;
        cfg.validate().map_err(|e| CliError::Config { path: path.to_owned(), message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Invalid(m.to_owned()));
        let m = &self.model;
        let n = m.thresholds.len();
        if let Some(l) = &m.angular_momenta {
            if l.len() != n {
                return bad("angular_momenta must have one entry per threshold");
            }
        }
        match m.potential {
            PotentialConfig::GaussianTwoChannel if n != 2 => return bad("gaussian_two_channel needs two thresholds"),
            _ => {}
        }
        match self.mode {
            Mode::UniformizedTwoChannel => {
                if n != 2 || !(m.thresholds[0] < m.thresholds[1]) {
                    return bad("uniformized mode needs two channels with xi1 < xi2");
                }
            }
            Mode::EqualThresholds => {
                if m.thresholds.iter().any(|t| *t != m.thresholds[0]) {
                    return bad("equal_thresholds mode needs identical thresholds");
                }
                if self.scan.is_some() {
                    return bad("scan is only available in uniformized mode");
                }
            }
        }
        self.model()?;
        if let Some(s) = &self.scan {
            if s.regions.is_empty() || !s.lambda.is_finite() {
                return bad("scan needs a finite lambda and at least one region");
            }
            for r in &s.regions {
                let g = &r.region;
                if !(g.re_min < g.re_max && g.im_min < g.im_max) || r.grid[0] < 2 || r.grid[1] < 2 {
                    return bad("scan regions must be non-empty with at least 2x2 cells");
                }
            }
        }
        if let Some(c) = &self.continuation {
            let o = &c.options;
            o.validate()?;
            if !(o.lambda_min.is_finite() && o.lambda_max.is_finite()) {
                return bad("continuation options need finite lambda_min and lambda_max");
            }
            if !(o.lambda_min..=o.lambda_max).contains(&c.start_lambda) {
                return bad("start_lambda lies outside [lambda_min, lambda_max]");
            }
            if let Some(s) = &self.scan {
                if !(o.lambda_min..=o.lambda_max).contains(&s.lambda) {
                    return bad("scan lambda lies outside [lambda_min, lambda_max]");
                }
            }
            if c.seeds.iter().any(|s| !(s.u[0].is_finite() && s.u[1].is_finite())) {
                return bad("seeds must be finite");
            }
        } else if self.scan.is_some() {
            return bad("a scan takes its parameter binding from the continuation section");
        }
        if let Some(e) = &self.ecs {
            e.grid.validate()?;
            if e.binding.is_none() && self.continuation.is_none() {
                return bad("ecs needs a binding when there is no continuation section");
            }
            if e.lambdas.values().iter().any(|l| !l.is_finite()) {
                return bad("ecs lambdas must be finite");
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ChannelModel> {
        let m = &self.model;
        let ls = m.angular_momenta.clone().unwrap_or_else(|| vec![0; m.thresholds.len()]);
        let channels = m.thresholds.iter().zip(ls).map(|(&t, l)| Channel::new(t, l)).collect();
        let potential = match m.potential {
            PotentialConfig::GaussianTwoChannel => Arc::new(GaussianTwoChannel),
        };
        Ok(ChannelModel::new(channels, m.mass, potential, m.r_max, m.grid_points)?)
    }

    pub fn evaluator(&self) -> Result<Evaluator> {
        let model = self.model()?;
        Ok(match self.mode {
            Mode::UniformizedTwoChannel => Evaluator::new(model)?,
            Mode::EqualThresholds => Evaluator::equal_thresholds(model)?,
        })
    }

    pub fn ecs_binding(&self) -> Option<ParamBinding> {
        self.ecs.as_ref().and_then(|e| e.binding).or(self.continuation.as_ref().map(|c| c.binding))
    }
}
