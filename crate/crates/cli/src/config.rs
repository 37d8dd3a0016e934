//! The TOML instance file shared by every command.

use mislearn_core::analysis::{FomAssessment, Perturbation, SceSelector};
use mislearn_core::learning::{GroupSpec, NoiseMode, Prior};
use mislearn_core::multigroup::GroupPopulation;
use mislearn_core::{build_lq, Error as CoreError, LqParams, ModelPrimitives, Scenario, Support};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub lq: LqParams,
    pub truth: Truth,
    pub support: Support,
    #[serde(default)]
    pub groups: Vec<GroupConfig>,
    #[serde(default)]
    pub learning: LearningConfig,
    pub disparity: Option<DisparityConfig>,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub phase: PhaseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    #[serde(default)]
    pub mu_star: f64,
    pub beta_star: f64,
    /// `μ̂ - μ*`.
    pub delta_mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub alpha: f64,
    pub delta: f64,
    /// Defaults to `truth.beta_star`.
    pub beta_star: Option<f64>,
    /// Defaults to `learning.prior`.
    pub prior: Option<Prior>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningConfig {
    pub runs: usize,
    pub horizon: u64,
    pub seed: u64,
    pub prior: Prior,
    pub noise: NoiseMode,
    pub radius: f64,
    pub checkpoints: Vec<u64>,
    /// Runs whose full paths are exported.
    pub trajectories: usize,
    /// Export every `stride`-th period.
    pub stride: u64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            runs: 200,
            horizon: 100_000,
            seed: 1,
            prior: Prior::Uniform,
            noise: NoiseMode::Gaussian,
            radius: 0.05,
            checkpoints: vec![1_000, 10_000],
            trajectories: 1,
            stride: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisparityConfig {
    pub delta_m: f64,
    pub delta_w: f64,
    #[serde(default = "least_distorted")]
    pub selector: SceSelector,
}

fn least_distorted() -> SceSelector {
    SceSelector::LeastDistorted
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    /// Empty means every parameter at ±1%.
    pub perturbations: Vec<Perturbation>,
    pub first_order: FomAssessment,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            perturbations: Vec::new(),
            first_order: FomAssessment::TruthEffort,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseConfig {
    pub n_m: usize,
    pub n_xi: usize,
    pub m_range: Option<[f64; 2]>,
    pub xi_range: Option<[f64; 2]>,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            n_m: 41,
            n_xi: 21,
            m_range: None,
            xi_range: None,
        }
    }
}

/// A parsed config together with its source, for diagnostics.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: String,
    pub source: String,
    pub config: Config,
}

impl Loaded {
    pub fn parse(path: impl Into<String>, source: String) -> Result<Self> {
        let path = path.into();
        let config: Config = toml::from_str(&source).map_err(|e| CliError::Config {
            line: e.span().map(|s| line_of(&source, s.start)),
            message: e.message().trim().to_string(),
            path: path.clone(),
        })?;
        let loaded = Self { path, source, config };
        loaded.model()?;
        Ok(loaded)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(path.display().to_string(), source)
    }

    /// Converts a core validation error into a diagnostic pointing at the
    /// offending key.
    pub fn diagnose(&self, err: CoreError) -> CliError {
        match &err {
            CoreError::InvalidParameter { name, .. } => CliError::Config {
                path: self.path.clone(),
                line: find_key(&self.source, config_key(name)),
                message: err.to_string(),
            },
            _ => CliError::Model(err),
        }
    }

    pub fn model(&self) -> Result<ModelPrimitives> {
        let c = &self.config;
        let scenario = Scenario {
            mu_star: c.truth.mu_star,
            beta_star: c.truth.beta_star,
            mu_hat: c.truth.mu_star + c.truth.delta_mu,
            support: c.support,
        };
        build_lq(c.lq, scenario).map_err(|e| self.diagnose(e))
    }

    pub fn population(&self) -> Result<GroupPopulation> {
        if self.config.groups.is_empty() {
            return Err(CliError::Config {
                path: self.path.clone(),
                line: None,
                message: "no [[groups]] defined".into(),
            });
        }
        GroupPopulation::new(&self.model()?, self.group_specs()).map_err(|e| self.diagnose(e))
    }

    pub fn group_specs(&self) -> Vec<GroupSpec> {
        let c = &self.config;
        c.groups
            .iter()
            .map(|g| GroupSpec {
                alpha: g.alpha,
                delta: g.delta,
                beta_star: g.beta_star.unwrap_or(c.truth.beta_star),
            })
            .collect()
    }

    pub fn group_priors(&self) -> Vec<Prior> {
        let c = &self.config;
        c.groups.iter().map(|g| g.prior.unwrap_or(c.learning.prior)).collect()
    }
}

fn config_key(core_name: &str) -> &str {
    match core_name {
        "mu_hat" => "delta_mu",
        "lq" => "[lq]",
        other => other,
    }
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// 1-based line of the first `key = ...` assignment or `[key]` header.
fn find_key(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|l| {
        let t = l.trim_start();
        if key.starts_with('[') {
            return t.starts_with(key);
        }
        t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}
