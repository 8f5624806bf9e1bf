//! Experiment configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//! experiment = "circular-law"
//! sizes = [100]
//! samples = 20
//! seed = 7
//! output_dir = "out/circular"
//!
//! [ensemble]
//! mode = "quaternionic"
//! atom = "gaussian-complex"
//!
//! [assertions]
//! radial_gap_max = 0.06
//! ```

use std::path::{Path, PathBuf};

use rmlab_core::ensembles::{AtomKind, BlockEnsembleSpec};
use rmlab_core::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const LSV_MAX_N: usize = 200;
pub const LSV_MAX_TRIALS: usize = 10_000;

/// A configuration problem, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Eigenvalues of `X / sqrt(n)` against the uniform disk.
    CircularLaw,
    /// Tail count of the least singular value of `X + N`.
    Lsv,
    /// `|m_hat_n(z, w) - m(z, w)|` across sizes.
    StieltjesCompare,
    /// Lévy distance of the symmetrized singular law to `nu_z`.
    RateLevy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::CircularLaw => "circular-law",
            Self::Lsv => "lsv",
            Self::StieltjesCompare => "stieltjes-compare",
            Self::RateLevy => "rate-levy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeConfig {
    Independent,
    Quaternionic,
    CorrelatedDemo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AtomName {
    Bernoulli,
    GaussianReal,
    GaussianComplex,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub mode: ModeConfig,
    #[serde(default = "default_d")]
    pub d: usize,
    pub atom: AtomName,
    /// `[re, im]` pairs, for `atom = "discrete"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_d() -> usize {
    2
}

fn default_eta() -> f64 {
    1.0
}

impl EnsembleConfig {
    pub fn new(mode: ModeConfig, d: usize, atom: AtomName) -> Self {
        Self {
            mode,
            d,
            atom,
            support: None,
            probs: None,
            eta: 1.0,
        }
    }

    fn kind(&self) -> Result<AtomKind, ConfigError> {
        Ok(match self.atom {
            AtomName::Bernoulli => AtomKind::BernoulliReal,
            AtomName::GaussianReal => AtomKind::GaussianReal,
            AtomName::GaussianComplex => AtomKind::GaussianComplex,
            AtomName::Discrete => {
                let support = self
                    .support
                    .as_ref()
                    .ok_or_else(|| ConfigError::new("ensemble.support", "required for a discrete atom"))?;
                let probs = self
                    .probs
                    .clone()
                    .ok_or_else(|| ConfigError::new("ensemble.probs", "required for a discrete atom"))?;
                AtomKind::Discrete {
                    support: support.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
                    probs,
                }
            }
        })
    }

    pub fn build(&self) -> Result<BlockEnsembleSpec, ConfigError> {
        let kind = self.kind()?;
        let spec = match self.mode {
            ModeConfig::Independent => BlockEnsembleSpec::independent(self.d, kind),
            ModeConfig::Quaternionic | ModeConfig::CorrelatedDemo if self.d != 2 => {
                return Err(ConfigError::new("ensemble.d", "this mode requires d = 2"));
            }
            ModeConfig::Quaternionic => BlockEnsembleSpec::quaternionic(kind),
            ModeConfig::CorrelatedDemo => BlockEnsembleSpec::correlated_demo(kind),
        }
        .map_err(|e| ConfigError::new("ensemble", e.to_string()))?;
        spec.with_moment_eta(self.eta)
            .map_err(|e| ConfigError::new("ensemble.eta", e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `[re, im]` pairs.
    #[serde(default)]
    pub z: Vec<[f64; 2]>,
    #[serde(default)]
    pub w: Vec<[f64; 2]>,
}

impl GridConfig {
    pub fn z_points(&self) -> Vec<Complex64> {
        self.z.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
    }

    pub fn w_points(&self) -> Vec<Complex64> {
        self.w.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    None,
    RankOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsvConfig {
    /// Tail threshold `n^(-A)`.
    pub a_exponent: f64,
    #[serde(default = "default_perturbation")]
    pub perturbation: PerturbationKind,
}

fn default_perturbation() -> PerturbationKind {
    PerturbationKind::RankOne
}

/// Hard assertions checked after a run; absent keys are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_gap_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsv_max_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_decreasing: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_final_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levy_decreasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub ensemble: EnsembleConfig,
    pub sizes: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsv: Option<LsvConfig>,
    #[serde(default)]
    pub assertions: AssertionConfig,
}

impl ExperimentConfig {
    pub fn new(
        experiment: ExperimentKind,
        ensemble: EnsembleConfig,
        sizes: Vec<usize>,
        samples: usize,
        seed: u64,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            ensemble,
            sizes,
            samples,
            seed,
            output_dir: output_dir.into(),
            truncation: None,
            grid: GridConfig::default(),
            lsv: None,
            assertions: AssertionConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map_or_else(|| "<document>".to_string(), |s| locate(text, s.start));
            ConfigError::new(path, e.message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::new(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.sizes.is_empty() {
            return Err(ConfigError::new("sizes", "at least one size is required"));
        }
        for (i, &n) in self.sizes.iter().enumerate() {
            if n < 2 {
                return Err(ConfigError::new(format!("sizes[{i}]"), format!("size {n} is below 2")));
            }
        }
        if self.samples == 0 {
            return Err(ConfigError::new("samples", "at least one sample is required"));
        }
        self.ensemble.build()?;
        if let Some(t) = &self.truncation {
            if !(t.delta > 0.0 && t.delta < 1.0) {
                return Err(ConfigError::new("truncation.delta", "must lie in (0, 1)"));
            }
        }
        for (i, &[re, im]) in self.grid.z.iter().enumerate() {
            if !(re.is_finite() && im.is_finite()) {
                return Err(ConfigError::new(format!("grid.z[{i}]"), "must be finite"));
            }
        }
        for (i, &[re, im]) in self.grid.w.iter().enumerate() {
            if !(im > 0.0 && re.is_finite() && im.is_finite()) {
                return Err(ConfigError::new(
                    format!("grid.w[{i}]"),
                    "needs a finite point with Im w > 0",
                ));
            }
        }
        match self.experiment {
            ExperimentKind::CircularLaw => {}
            ExperimentKind::Lsv => {
                if self.lsv.is_none() {
                    return Err(ConfigError::new("lsv", "section required for an lsv experiment"));
                }
                if let Some(i) = self.sizes.iter().position(|&n| n > LSV_MAX_N) {
                    return Err(ConfigError::new(
                        format!("sizes[{i}]"),
                        format!("lsv sizes are capped at {LSV_MAX_N}"),
                    ));
                }
                if self.samples > LSV_MAX_TRIALS {
                    return Err(ConfigError::new(
                        "samples",
                        format!("lsv trials are capped at {LSV_MAX_TRIALS}"),
                    ));
                }
            }
            ExperimentKind::StieltjesCompare => {
                if self.grid.z.is_empty() {
                    return Err(ConfigError::new("grid.z", "grid is empty"));
                }
                if self.grid.w.is_empty() {
                    return Err(ConfigError::new("grid.w", "grid is empty"));
                }
            }
            ExperimentKind::RateLevy => {
                if self.grid.z.is_empty() {
                    return Err(ConfigError::new("grid.z", "grid is empty"));
                }
            }
        }
        Ok(())
    }
}

/// `line L, column C` for a byte offset.
fn locate(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    format!("line {line}, column {column}")
}
