//! JSON run configurations. Unknown keys are rejected; relative input paths
//! are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use covpow::consistency::{ScenarioSpec, VerifyOptions};
use covpow::features::{Ridge, WindowSpec};
use covpow::graph::{ErParams, WeightedGraph};
use covpow::pipeline::{Part, SelectionConfig, SplitSpec, SyntheticSpec};
use covpow::signatures::{GmmConfig, SignatureMode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1";

pub trait RunConfig: DeserializeOwned + Serialize {
    fn schema_version(&self) -> &str;
    fn output_dir(&self) -> Option<&str>;
    fn validate(&self) -> CliResult<()> {
        Ok(())
    }
}

macro_rules! run_config {
    ($t:ty) => {
        impl RunConfig for $t {
            fn schema_version(&self) -> &str {
                &self.schema_version
            }
            fn output_dir(&self) -> Option<&str> {
                self.output_dir.as_deref()
            }
            fn validate(&self) -> CliResult<()> {
                self.check()
            }
        }
    };
}

/// Parses and validates a config document.
pub fn parse<T: RunConfig>(text: &str) -> CliResult<T> {
    let cfg: T =
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "unsupported schema_version {:?}, expected {SCHEMA_VERSION:?}",
            cfg.schema_version()
        )));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// `{n, edges: [[i, j, w], …]}`.
    Inline(WeightedGraph),
    Csv {
        path: PathBuf,
        n: Option<usize>,
    },
    /// Drawn with the run seed.
    Er(ErParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub graph: GraphSource,
    pub kappa: f64,
    pub alpha: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: String,
    pub output_dir: Option<String>,
    pub seed: u64,
    /// Single field: samples over every node.
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub n_samples: Option<usize>,
    /// Labelled two-class recordings.
    #[serde(default)]
    pub two_class: Option<SyntheticSpec>,
}

impl SimulateConfig {
    fn check(&self) -> CliResult<()> {
        match (&self.model, &self.two_class) {
            (Some(_), None) => {
                if self.n_samples == Some(0) {
                    return Err(CliError::config("n_samples must be positive"));
                }
                Ok(())
            }
            (None, Some(_)) if self.n_samples.is_none() => Ok(()),
            (None, Some(_)) => Err(CliError::config("n_samples applies only to `model`")),
            _ => Err(CliError::config(
                "set exactly one of `model` or `two_class`",
            )),
        }
    }
}
run_config!(SimulateConfig);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub start: u64,
    pub count: u64,
}

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        (self.start..self.start + self.count).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub schema_version: String,
    pub output_dir: Option<String>,
    pub scenario: ScenarioSpec,
    pub seeds: SeedRange,
    #[serde(default)]
    pub options: VerifyOptions,
}

impl VerifyConfig {
    fn check(&self) -> CliResult<()> {
        if self.seeds.count == 0 {
            return Err(CliError::config("seeds.count must be positive"));
        }
        if self.seeds.start.checked_add(self.seeds.count).is_none() {
            return Err(CliError::config("seed range overflows"));
        }
        Ok(())
    }
}
run_config!(VerifyConfig);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Series CSV files, one recording each.
    Files(Vec<PathBuf>),
    /// Every `*.csv` in a directory, in file-name order.
    Dir(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    pub schema_version: String,
    pub output_dir: Option<String>,
    pub dataset: DatasetSource,
    pub window: WindowSpec,
    #[serde(default)]
    pub ridge: Ridge,
    pub beta: f64,
    /// With a split, one archive per part.
    #[serde(default)]
    pub split: Option<SplitSpec>,
}

impl ExtractConfig {
    fn check(&self) -> CliResult<()> {
        self.window.validate()?;
        if !self.beta.is_finite() {
            return Err(CliError::config("beta must be finite"));
        }
        if let Some(s) = &self.split {
            s.validate()?;
        }
        Ok(())
    }
}
run_config!(ExtractConfig);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectConfig {
    pub schema_version: String,
    pub output_dir: Option<String>,
    pub dataset: DatasetSource,
    pub split: SplitSpec,
    #[serde(default)]
    pub selection: SelectionConfig,
}

impl SelectConfig {
    fn check(&self) -> CliResult<()> {
        self.split.validate()?;
        check_selection(&self.selection)
    }
}
run_config!(SelectConfig);

fn check_selection(s: &SelectionConfig) -> CliResult<()> {
    if s.beta_grid.is_empty() || s.window_grid.is_empty() {
        return Err(CliError::config(
            "beta_grid and window_grid must be non-empty",
        ));
    }
    if s.beta_grid.iter().any(|b| !b.is_finite()) {
        return Err(CliError::config("beta_grid entries must be finite"));
    }
    for w in &s.window_grid {
        w.validate()?;
    }
    s.classifier.validate()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub schema_version: String,
    pub output_dir: Option<String>,
    pub dataset: DatasetSource,
    pub split: SplitSpec,
    /// `model.json` written by `select` or `pipeline`.
    pub model: PathBuf,
    #[serde(default = "test_part")]
    pub part: Part,
}

fn test_part() -> Part {
    Part::Test
}

impl EvaluateConfig {
    fn check(&self) -> CliResult<()> {
        Ok(self.split.validate()?)
    }
}
run_config!(EvaluateConfig);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub schema_version: String,
    pub output_dir: Option<String>,
    /// Feature archive directory.
    pub features: PathBuf,
    #[serde(default)]
    pub distance_matrix: bool,
}

impl GeometryConfig {
    fn check(&self) -> CliResult<()> {
        Ok(())
    }
}
run_config!(GeometryConfig);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignaturesConfig {
    pub schema_version: String,
    pub output_dir: Option<String>,
    /// Feature archive directory.
    pub features: PathBuf,
    #[serde(default)]
    pub mode: SignatureMode,
    #[serde(default)]
    pub gmm: GmmConfig,
    /// Ground-truth edge-list CSVs for classes 0 and 1.
    #[serde(default)]
    pub truth: Option<[PathBuf; 2]>,
}

impl SignaturesConfig {
    fn check(&self) -> CliResult<()> {
        check_gmm(&self.gmm)
    }
}
run_config!(SignaturesConfig);

fn check_gmm(g: &GmmConfig) -> CliResult<()> {
    if g.max_iter == 0 || g.tol.is_nan() || g.tol <= 0.0 {
        return Err(CliError::config(
            "gmm.max_iter and gmm.tol must be positive",
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifiabilityOptions {
    /// Window overlap used for the distance analysis; the length is the
    /// selected one.
    pub overlap: f64,
    pub part: Part,
    pub distance_matrix: bool,
}

impl Default for IdentifiabilityOptions {
    fn default() -> Self {
        IdentifiabilityOptions {
            overlap: 0.0,
            part: Part::Test,
            distance_matrix: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignatureOptions {
    pub mode: SignatureMode,
    pub gmm: GmmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: String,
    pub output_dir: Option<String>,
    pub dataset: DatasetSource,
    pub split: SplitSpec,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub identifiability: IdentifiabilityOptions,
    #[serde(default)]
    pub signatures: SignatureOptions,
}

impl PipelineConfig {
    fn check(&self) -> CliResult<()> {
        self.split.validate()?;
        check_selection(&self.selection)?;
        check_gmm(&self.signatures.gmm)?;
        let o = self.identifiability.overlap;
        if !(0.0..1.0).contains(&o) {
            return Err(CliError::config(
                "identifiability.overlap must lie in [0, 1)",
            ));
        }
        Ok(())
    }
}
run_config!(PipelineConfig);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub schema_version: String,
    pub output_dir: Option<String>,
    /// `summary.csv` files written by `verify`.
    pub summaries: Vec<PathBuf>,
}

impl ReportConfig {
    fn check(&self) -> CliResult<()> {
        if self.summaries.is_empty() {
            return Err(CliError::config("summaries must be non-empty"));
        }
        Ok(())
    }
}
run_config!(ReportConfig);
