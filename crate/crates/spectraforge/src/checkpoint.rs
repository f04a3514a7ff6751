//! On-disk layouts for models, bundles, latent matrices and label
//! statistics. Each is a directory with a JSON descriptor and SPB blocks.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spectraforge_core::nn::{Activation, AutoencoderModel, DenseLayer};
use spectraforge_core::seqae::{LatentMatrix, LatentOrigin, SeqAeBundle};
use spectraforge_core::synth::LabelStats;
use spectraforge_core::{Label, Matrix};

use crate::error::{require, AppError, Result};
use crate::manifest::{create_dir, file_stem, read_json, unique_stems, write_json};
use crate::spb::{read_matrix, write_matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
    pub weights: PathBuf,
    pub bias: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub encoder: Vec<LayerEntry>,
    pub decoder: Vec<LayerEntry>,
}

pub const MODEL_FILE: &str = "model.json";
pub const BUNDLE_FILE: &str = "bundle.json";
pub const LATENTS_FILE: &str = "latents.json";
pub const STATS_FILE: &str = "stats.json";

fn save_layers(dir: &Path, prefix: &str, layers: &[DenseLayer]) -> Result<Vec<LayerEntry>> {
    layers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let weights = PathBuf::from(format!("{prefix}{i}.weights.spb"));
            let bias = PathBuf::from(format!("{prefix}{i}.bias.spb"));
            write_matrix(&dir.join(&weights), l.weights())?;
            write_matrix(&dir.join(&bias), &Matrix::new(1, l.bias().len(), l.bias().to_vec())?)?;
            Ok(LayerEntry {
                input: l.input_dim(),
                output: l.output_dim(),
                activation: l.activation(),
                weights,
                bias,
            })
        })
        .collect()
}

fn load_layers(dir: &Path, entries: &[LayerEntry]) -> Result<Vec<DenseLayer>> {
    entries
        .iter()
        .map(|e| {
            let w = read_matrix(&dir.join(&e.weights))?;
            let b = read_matrix(&dir.join(&e.bias))?;
            if (w.rows(), w.cols()) != (e.output, e.input) || b.as_slice().len() != e.output {
                return Err(AppError::format(&dir.join(&e.weights), "layer shape disagrees with header"));
            }
            Ok(DenseLayer::new(w, b.into_vec(), e.activation)?)
        })
        .collect()
}

pub fn save_model(dir: &Path, model: &AutoencoderModel) -> Result<()> {
    create_dir(dir)?;
    let header = ModelHeader {
        input_dim: model.input_dim(),
        latent_dim: model.latent_dim(),
        encoder: save_layers(dir, "enc", model.encoder())?,
        decoder: save_layers(dir, "dec", model.decoder())?,
    };
    write_json(&dir.join(MODEL_FILE), &header)
}

pub fn load_model(dir: &Path) -> Result<AutoencoderModel> {
    let header: ModelHeader = read_json(&dir.join(MODEL_FILE))?;
    let model = AutoencoderModel::new(load_layers(dir, &header.encoder)?, load_layers(dir, &header.decoder)?)?;
    if model.input_dim() != header.input_dim || model.latent_dim() != header.latent_dim {
        return Err(AppError::format(&dir.join(MODEL_FILE), "declared dims disagree with layers"));
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub d: usize,
    pub m: usize,
    pub n: usize,
}

pub fn save_bundle(dir: &Path, b: &SeqAeBundle) -> Result<()> {
    save_model(&dir.join("first"), b.first())?;
    save_model(&dir.join("second"), b.second())?;
    write_json(
        &dir.join(BUNDLE_FILE),
        &BundleMeta {
            d: b.d(),
            m: b.m(),
            n: b.n(),
        },
    )
}

pub fn load_bundle(dir: &Path) -> Result<SeqAeBundle> {
    require(dir)?;
    let meta: BundleMeta = read_json(&dir.join(BUNDLE_FILE))?;
    let b = SeqAeBundle::new(load_model(&dir.join("first"))?, load_model(&dir.join("second"))?)?;
    if (b.d(), b.m(), b.n()) != (meta.d, meta.m, meta.n) {
        return Err(AppError::format(&dir.join(BUNDLE_FILE), "metadata disagrees with the stored models"));
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentEntry {
    pub source_id: String,
    pub label: Option<Label>,
    pub origin: LatentOrigin,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentIndex {
    pub d: usize,
    pub records: Vec<LatentEntry>,
}

pub fn save_latents(dir: &Path, latents: &[LatentMatrix]) -> Result<()> {
    let d = latents.first().map_or(0, LatentMatrix::side);
    let data_dir = dir.join("latents");
    create_dir(&data_dir)?;
    let stems = unique_stems(latents.iter().map(|l| l.source_id.as_str()));
    let mut records = Vec::with_capacity(latents.len());
    for (lat, stem) in latents.iter().zip(stems) {
        let rel = Path::new("latents").join(format!("{stem}.spb"));
        write_matrix(&dir.join(&rel), &lat.e)?;
        records.push(LatentEntry {
            source_id: lat.source_id.clone(),
            label: lat.label.clone(),
            origin: lat.origin,
            path: rel,
        });
    }
    write_json(&dir.join(LATENTS_FILE), &LatentIndex { d, records })
}

pub fn load_latents(dir: &Path) -> Result<Vec<LatentMatrix>> {
    require(dir)?;
    let index: LatentIndex = read_json(&dir.join(LATENTS_FILE))?;
    index
        .records
        .into_iter()
        .map(|e| {
            let path = dir.join(&e.path);
            let m = read_matrix(&path)?;
            if m.rows() != index.d {
                return Err(AppError::format(&path, format!("expected a {0}x{0} latent", index.d)));
            }
            Ok(LatentMatrix::new(m, e.source_id, e.label, e.origin)?)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsEntry {
    pub label: Label,
    pub d: usize,
    pub n_samples: usize,
    pub ridge: f64,
    pub shrinkage: f64,
    pub mean: PathBuf,
    pub cov: PathBuf,
}

pub fn save_stats(dir: &Path, stats: &[LabelStats]) -> Result<()> {
    create_dir(dir)?;
    let mut entries = Vec::with_capacity(stats.len());
    for s in stats {
        let stem = file_stem(s.label.as_str());
        let mean = PathBuf::from(format!("{stem}.mean.spb"));
        let cov = PathBuf::from(format!("{stem}.cov.spb"));
        write_matrix(&dir.join(&mean), &Matrix::new(1, s.mean.len(), s.mean.clone())?)?;
        write_matrix(&dir.join(&cov), &s.cov)?;
        entries.push(StatsEntry {
            label: s.label.clone(),
            d: s.d,
            n_samples: s.n_samples,
            ridge: s.ridge,
            shrinkage: s.shrinkage,
            mean,
            cov,
        });
    }
    write_json(&dir.join(STATS_FILE), &entries)
}

pub fn load_stats(dir: &Path) -> Result<Vec<LabelStats>> {
    let entries: Vec<StatsEntry> = read_json(&dir.join(STATS_FILE))?;
    entries
        .into_iter()
        .map(|e| {
            let mean = read_matrix(&dir.join(&e.mean))?.into_vec();
            let cov = read_matrix(&dir.join(&e.cov))?;
            let p = e.d * e.d;
            if mean.len() != p || (cov.rows(), cov.cols()) != (p, p) {
                return Err(AppError::format(&dir.join(&e.cov), "statistics shape disagrees with d"));
            }
            Ok(LabelStats {
                label: e.label,
                d: e.d,
                mean,
                cov,
                n_samples: e.n_samples,
                ridge: e.ridge,
                shrinkage: e.shrinkage,
            })
        })
        .collect()
}
