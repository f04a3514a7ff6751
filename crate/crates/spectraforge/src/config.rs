use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spectraforge_core::classify::ExperimentConfig;
use spectraforge_core::preprocess::DatasetProfile;
use spectraforge_core::seqae::BundleConfig;
use spectraforge_core::synth::CovarianceConfig;
use spectraforge_core::toygen::ToyDatasetSpec;

use crate::error::{require, Result};
use crate::manifest::read_json;

/// Where the pipeline takes its raw records from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Generate a toy dataset; without a spec file the default spec is used.
    Toy {
        #[serde(default)]
        spec: Option<PathBuf>,
    },
    Manifest { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub multiplier: f64,
    pub covariance: CovarianceConfig,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            multiplier: 1.0,
            covariance: CovarianceConfig::default(),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: DatasetSource,
    pub profile: Option<PathBuf>,
    pub val_fraction: f64,
    /// Seeds the training/validation split.
    pub split_seed: u64,
    pub bundle: BundleConfig,
    pub synth: SynthConfig,
    pub classify: ExperimentConfig,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: DatasetSource::Toy { spec: None },
            profile: None,
            val_fraction: 0.15,
            split_seed: 0,
            bundle: BundleConfig::default(),
            synth: SynthConfig::default(),
            classify: ExperimentConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Reads a config and resolves its relative paths against the file's
    /// directory. Every referenced input must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        match &mut cfg.dataset {
            DatasetSource::Toy { spec: Some(p) } | DatasetSource::Manifest { path: p } => rebase(&base, p),
            DatasetSource::Toy { spec: None } => {}
        }
        if let Some(p) = &mut cfg.profile {
            rebase(&base, p);
        }
        rebase(&base, &mut cfg.out_dir);
        cfg.check_paths()?;
        Ok(cfg)
    }

    pub fn check_paths(&self) -> Result<()> {
        match &self.dataset {
            DatasetSource::Toy { spec: Some(p) } | DatasetSource::Manifest { path: p } => require(p)?,
            DatasetSource::Toy { spec: None } => {}
        }
        if let Some(p) = &self.profile {
            require(p)?;
        }
        Ok(())
    }

    pub fn load_profile(&self) -> Result<DatasetProfile> {
        match &self.profile {
            Some(p) => read_json(p),
            None => Ok(DatasetProfile::default()),
        }
    }

    pub fn load_toy_spec(path: Option<&Path>) -> Result<ToyDatasetSpec> {
        match path {
            Some(p) => read_json(p),
            None => Ok(ToyDatasetSpec::default()),
        }
    }
}
