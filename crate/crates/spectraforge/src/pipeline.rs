//! The end-to-end flow, in memory: structure preprocessing, split,
//! scaling, bundle training, encoding, synthesis, reconstruction and the
//! classification experiment.

use serde::{Deserialize, Serialize};
use spectraforge_core::classify::{run_experiment, ExperimentConfig, ExperimentOutcome, ExperimentReport};
use spectraforge_core::preprocess::{apply_scaling_dataset, fit_scaling, DatasetProfile, ScalingParams};
use spectraforge_core::seqae::{encode_dataset, train_bundle, BundleConfig, LatentMatrix, SeqAeBundle, StageReport};
use spectraforge_core::split::split_dataset;
use spectraforge_core::synth::{reconstruct, synthesize, Synthesis};
use spectraforge_core::{Dataset, Result, Rng};

use crate::config::SynthConfig;

#[derive(Debug, Clone)]
pub struct Prepared {
    /// Every record, structured and scaled.
    pub all: Dataset,
    pub train: Dataset,
    pub val: Dataset,
    pub scaling: ScalingParams,
}

/// Applies the profile's structural steps, splits, and scales all records
/// with parameters fitted on the training part only.
pub fn prepare(raw: &Dataset, profile: &DatasetProfile, val_fraction: f64, seed: u64) -> Result<Prepared> {
    let structured = raw.map_spectra(|s| profile.apply_structure(s))?;
    let (train, val) = split_dataset(&structured, val_fraction, &mut Rng::new(seed))?;
    let scaling = fit_scaling(&train, profile.clamp)?;
    Ok(Prepared {
        all: apply_scaling_dataset(&structured, &scaling)?,
        train: apply_scaling_dataset(&train, &scaling)?,
        val: apply_scaling_dataset(&val, &scaling)?,
        scaling,
    })
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub bundle: SeqAeBundle,
    pub first: StageReport,
    pub second: StageReport,
}

pub fn train(prepared: &Prepared, cfg: &BundleConfig) -> Result<Trained> {
    let (bundle, first, second) = train_bundle(&prepared.train, &prepared.val, cfg)?;
    log::info!(
        "stage 1 best val {:?}, stage 2 best val {:?}",
        first.best_val(),
        second.best_val()
    );
    Ok(Trained { bundle, first, second })
}

#[derive(Debug, Clone)]
pub struct Augmented {
    pub latents: Vec<LatentMatrix>,
    pub synthesis: Synthesis,
    pub reconstructed: Dataset,
}

/// Encodes every original, samples synthetic records and reconstructs the
/// originals through the bundle.
pub fn augment(all: &Dataset, bundle: &SeqAeBundle, cfg: &SynthConfig) -> Result<Augmented> {
    let latents = encode_dataset(all, bundle)?;
    let synthesis = synthesize(&latents, bundle, cfg.multiplier, &cfg.covariance, &Rng::new(cfg.seed))?;
    let reconstructed = reconstruct(all, bundle)?;
    Ok(Augmented {
        latents,
        synthesis,
        reconstructed,
    })
}

pub fn classify(all: &Dataset, aug: &Augmented, cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment(all, &aug.synthesis.dataset, Some(&aug.reconstructed), cfg)
}

/// Leakage summary over every (seed, condition) fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub fits_checked: usize,
    pub validation_ids_checked: usize,
    pub leaked_ids: usize,
    pub derived_validation_records: usize,
}

impl AuditSummary {
    pub fn from_outcome(out: &ExperimentOutcome) -> Self {
        AuditSummary {
            fits_checked: out.traces.len(),
            validation_ids_checked: out.traces.iter().map(|t| t.val_ids.len()).sum(),
            leaked_ids: out.traces.iter().map(|t| t.leaked_ids().len()).sum(),
            derived_validation_records: out.traces.iter().map(|t| t.non_original_validation()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub reports: Vec<ExperimentReport>,
    pub audit: AuditSummary,
}

impl ReportFile {
    pub fn from_outcome(out: &ExperimentOutcome) -> Self {
        ReportFile {
            reports: out.reports.clone(),
            audit: AuditSummary::from_outcome(out),
        }
    }
}

/// Everything one in-memory run produces.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub prepared: Prepared,
    pub trained: Trained,
    pub augmented: Augmented,
    pub outcome: ExperimentOutcome,
}

pub fn run_in_memory(
    raw: &Dataset,
    profile: &DatasetProfile,
    val_fraction: f64,
    split_seed: u64,
    bundle: &BundleConfig,
    synth: &SynthConfig,
    experiment: &ExperimentConfig,
) -> Result<PipelineRun> {
    let prepared = prepare(raw, profile, val_fraction, split_seed)?;
    let trained = train(&prepared, bundle)?;
    let augmented = augment(&prepared.all, &trained.bundle, synth)?;
    let outcome = classify(&prepared.all, &augmented, experiment)?;
    Ok(PipelineRun {
        prepared,
        trained,
        augmented,
        outcome,
    })
}
