use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffusion::l1::L1Config;
use crate::diffusion::l2::DiffusionConfig;
use crate::error::{Error, Result};
use crate::graph::KnnParams;

/// Alpha grid over the open unit interval, used by `--grid default`.
pub const DEFAULT_ALPHA_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    OnePass,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    P1,
    #[default]
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RampConfig {
    pub t_ramp: usize,
    pub alpha_max: f64,
}

impl Default for RampConfig {
    fn default() -> Self {
        Self {
            t_ramp: 3,
            alpha_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Projection {
    Identity,
    Random { dim: usize },
}

impl Default for Projection {
    fn default() -> Self {
        Projection::Random { dim: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    pub projection: Projection,
    /// Sharpening step scale.
    pub eta: f64,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            projection: Projection::default(),
            eta: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExtractorConfig {
    Mock(MockConfig),
    External {
        /// Program and leading arguments; the manifest path is appended.
        command: Vec<String>,
        /// Passed through as the manifest's `data_ref`; defaults to the
        /// embeddings path of a file data source.
        #[serde(default)]
        data_ref: Option<String>,
        #[serde(default)]
        timeout_secs: Option<f64>,
        /// Where manifests and outputs go; a temporary directory if unset.
        #[serde(default)]
        work_dir: Option<PathBuf>,
    },
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig::Mock(MockConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    TwoMoons {
        n: usize,
        noise: f64,
        labels_per_class: usize,
    },
    Blobs {
        n: usize,
        classes: usize,
        dim: usize,
        spread: f64,
        labels_per_class: usize,
    },
    Files {
        embeddings: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        truth: Option<PathBuf>,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Blobs {
            n: 400,
            classes: 4,
            dim: 64,
            spread: 1.0,
            labels_per_class: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub predictions: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub method: Method,
    pub p2: DiffusionConfig,
    pub p1: L1Config,
    /// When set, alpha is re-selected on a labeled holdout every epoch.
    pub alpha_grid: Option<Vec<f64>>,
    pub holdout_fraction: f64,
    pub graph: KnnParams,
    /// J, the number of dynamic-pass epochs.
    pub epochs: usize,
    pub ramp: RampConfig,
    /// Rescale pseudo-label weights toward class balance.
    pub balance: bool,
    pub extractor: ExtractorConfig,
    pub data: DataSource,
    pub seed: u64,
    pub output: OutputPaths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::OnePass,
            method: Method::P2,
            p2: DiffusionConfig::default(),
            p1: L1Config::default(),
            alpha_grid: None,
            holdout_fraction: 0.2,
            graph: KnnParams::default(),
            epochs: 5,
            ramp: RampConfig::default(),
            balance: false,
            extractor: ExtractorConfig::default(),
            data: DataSource::default(),
            seed: 0,
            output: OutputPaths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks that need no data. `n`-dependent checks happen once the data
    /// source is loaded, before any extraction.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.graph.k == 0 {
            return bad("graph.k must be >= 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.ramp.t_ramp == 0 {
            return bad("ramp.t_ramp must be >= 1".into());
        }
        if !(self.ramp.alpha_max >= 0.0) || !self.ramp.alpha_max.is_finite() {
            return bad(format!("ramp.alpha_max must be >= 0, got {}", self.ramp.alpha_max));
        }
        self.p2.validate().map_err(|e| Error::Config(format!("p2: {e}")))?;
        self.p1.validate().map_err(|e| Error::Config(format!("p1: {e}")))?;
        if let Some(grid) = &self.alpha_grid {
            if grid.is_empty() || grid.iter().any(|a| !(0.0..1.0).contains(a)) {
                return bad(format!("alpha_grid must be non-empty within [0, 1), got {grid:?}"));
            }
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad(format!("holdout_fraction must lie in (0, 1), got {}", self.holdout_fraction));
        }
        match &self.extractor {
            ExtractorConfig::Mock(m) => {
                if matches!(m.projection, Projection::Random { dim: 0 }) {
                    return bad("mock projection dim must be >= 1".into());
                }
                if !(m.eta >= 0.0) {
                    return bad(format!("mock eta must be >= 0, got {}", m.eta));
                }
            }
            ExtractorConfig::External { command, timeout_secs, .. } => {
                if command.is_empty() {
                    return bad("external extractor command is empty".into());
                }
                if timeout_secs.is_some_and(|t| !(t > 0.0)) {
                    return bad("timeout_secs must be > 0".into());
                }
            }
        }
        Ok(())
    }
}
