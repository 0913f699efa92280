//! Declarative run configuration, read from TOML.
//!
//! ```toml
//! input = "iris.csv"
//! label_column = "species"
//! output = "out/iris-pca"
//! perturbation = { axis = "petal length" }
//! extraction = "halves"
//!
//! [projection]
//! method = "pca"
//! ```
//!
//! Relative paths are taken relative to the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discovery::DEFAULT_LAMBDA;
use crate::error::{Error, Result};
use crate::extraction::ExtractionMode;
use crate::field::{DEFAULT_LEVELS, DEFAULT_REG_WEIGHT, DEFAULT_RESOLUTION};
use crate::io::{Dataset, DatasetFormat};
use crate::projections::ProjectionConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    /// Every point along the named input dimension.
    Axis(String),
    /// Per-point directions from a headerless CSV with one row per point.
    Custom(PathBuf),
    DiscoverGlobal,
    DiscoverPerPoint,
}

impl Perturbation {
    pub fn is_discovery(&self) -> bool {
        matches!(
            self,
            Perturbation::DiscoverGlobal | Perturbation::DiscoverPerPoint
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSettings {
    pub resolution: usize,
    pub reg_weight: f64,
    pub n_levels: usize,
    pub draw_vectors: bool,
}

impl Default for FieldSettings {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            reg_weight: DEFAULT_REG_WEIGHT,
            n_levels: DEFAULT_LEVELS,
            draw_vectors: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoverySettings {
    pub lambda: f64,
    /// Similarity bandwidth; half the median projected distance when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl Default for DiscoverySettings {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            sigma: None,
        }
    }
}

fn default_format() -> DatasetFormat {
    DatasetFormat::Csv
}

fn default_extraction() -> ExtractionMode {
    ExtractionMode::Halves
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    #[serde(default = "default_format")]
    pub format: DatasetFormat,
    /// CSV column with class labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    /// IDX label file accompanying an image archive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    pub output: PathBuf,
    /// Master seed; it replaces `projection.seed`.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; the environment or the machine decides when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub perturbation: Perturbation,
    #[serde(default = "default_extraction")]
    pub extraction: ExtractionMode,
    #[serde(default)]
    pub projection: ProjectionConfig,
    #[serde(default)]
    pub field: FieldSettings,
    #[serde(default)]
    pub discovery: DiscoverySettings,
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base);
        cfg.projection.seed = cfg.seed;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.input);
        join(&mut self.output);
        if let Some(l) = &mut self.labels {
            join(l);
        }
        if let Perturbation::Custom(p) = &mut self.perturbation {
            join(p);
        }
    }

    /// Checks that need no data.
    pub fn validate(&self) -> Result<()> {
        let f = &self.field;
        if f.resolution == 0 {
            return Err(Error::Config("field.resolution must be positive".into()));
        }
        if !(f.reg_weight > 0.0 && f.reg_weight.is_finite()) {
            return Err(Error::Config(format!(
                "field.reg_weight must be positive, got {}",
                f.reg_weight
            )));
        }
        let l = self.discovery.lambda;
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::Config(format!(
                "discovery.lambda must be nonnegative, got {l}"
            )));
        }
        if let Some(s) = self.discovery.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "discovery.sigma must be positive, got {s}"
                )));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if self.projection.seed != self.seed {
            return Err(Error::Config("projection.seed must equal seed".into()));
        }
        Ok(())
    }

    /// Checks against the loaded data: names exist and sizes fit.
    pub fn validate_for(&self, dataset: &Dataset) -> Result<()> {
        if let Perturbation::Axis(name) = &self.perturbation {
            if dataset.dimension(name).is_none() {
                return Err(Error::Config(format!(
                    "dimension {name:?} is not in the dataset (have {:?})",
                    dataset.names
                )));
            }
        }
        self.projection.validate(dataset.data.n())
    }
}
