//! Per-label latent statistics and multivariate Gaussian resampling.
//!
//! Latent matrices are flattened row-major into vectors of length `d²`.
//! Groups are always far smaller than `d²`, so the sample covariance is
//! singular; a diagonal ridge is added and doubled until the Cholesky
//! factorization succeeds.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::seqae::{decode_with_id, LatentMatrix, LatentOrigin, SeqAeBundle};
use crate::spectrum::{Dataset, Label, LabelSet, Provenance, Record};

/// How the diagonal loading is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RidgePolicy {
    /// Start at `max(relative * trace / d², floor)`.
    Auto { relative: f64, floor: f64 },
    /// Start at the given value (or `floor` of the auto policy when zero).
    Fixed { value: f64 },
}

impl Default for RidgePolicy {
    fn default() -> Self {
        RidgePolicy::Auto {
            relative: 1e-6,
            floor: 1e-9,
        }
    }
}

/// Ridge and optional shrinkage applied by [`fit_stats`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CovarianceConfig {
    pub ridge: RidgePolicy,
    /// Blend weight towards the diagonal, `(1 - a) C + a diag(C)`; zero
    /// disables shrinkage.
    pub shrinkage: f64,
}

impl CovarianceConfig {
    pub fn fixed(value: f64) -> Self {
        CovarianceConfig {
            ridge: RidgePolicy::Fixed { value },
            shrinkage: 0.0,
        }
    }
}

const RIDGE_FLOOR: f64 = 1e-9;
const MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelStats {
    pub label: Label,
    /// Side of the latent matrices.
    pub d: usize,
    /// Flattened element-wise mean, length `d²`.
    pub mean: Vec<f64>,
    /// Regularised covariance, `d² x d²`.
    pub cov: Matrix,
    pub n_samples: usize,
    pub ridge: f64,
    pub shrinkage: f64,
}

/// Lower-triangular factor of a covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    l: Matrix,
}

impl CholFactor {
    pub fn new(cov: &Matrix) -> Result<Self> {
        linalg::cholesky(cov)
            .map(|l| CholFactor { l })
            .ok_or_else(|| Error::Numerics("covariance is not positive definite".into()))
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// `L z`.
    pub fn mul(&self, z: &[f64]) -> Vec<f64> {
        (0..self.l.rows())
            .map(|i| {
                let row = &self.l.row(i)[..=i];
                row.iter().zip(z).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// Partitions latents by label, keyed in canonical label order.
pub fn group_by_label(latents: &[LatentMatrix]) -> Result<BTreeMap<Label, Vec<LatentMatrix>>> {
    let mut groups: BTreeMap<Label, Vec<LatentMatrix>> = BTreeMap::new();
    for lat in latents {
        let label = lat
            .label
            .clone()
            .ok_or_else(|| Error::Spec(format!("latent {} has no label", lat.source_id)))?;
        groups.entry(label).or_default().push(lat.clone());
    }
    Ok(groups)
}

/// Mean and unbiased covariance of one label group, regularised so it is
/// positive definite.
pub fn fit_stats(group: &[LatentMatrix], cfg: &CovarianceConfig) -> Result<LabelStats> {
    let label = group
        .first()
        .and_then(|g| g.label.clone())
        .unwrap_or_else(|| Label::new("<unlabelled>"));
    let stats_err = |reason: alloc::string::String| Error::Stats {
        label: label.to_string(),
        reason,
    };
    if group.len() < 2 {
        return Err(stats_err(format!("{} latent matrix, need at least 2", group.len())));
    }
    let d = group[0].side();
    if group.iter().any(|g| g.side() != d || g.label.as_ref() != Some(&label)) {
        return Err(stats_err("group mixes latent sizes or labels".into()));
    }
    let p = d * d;
    let n = group.len() as f64;
    let mut mean = vec![0.0; p];
    for g in group {
        for (m, v) in mean.iter_mut().zip(g.e.as_slice()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let centered: Vec<Vec<f64>> = group
        .iter()
        .map(|g| g.e.as_slice().iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut cov = Matrix::zeros(p, p);
    for c in &centered {
        for i in 0..p {
            let ci = c[i];
            if ci == 0.0 {
                continue;
            }
            let row = cov.row_mut(i);
            for j in i..p {
                row[j] += ci * c[j];
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            let v = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    if cfg.shrinkage > 0.0 {
        let a = cfg.shrinkage.min(1.0);
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    cov[(i, j)] *= 1.0 - a;
                }
            }
        }
    }
    let trace: f64 = (0..p).map(|i| cov[(i, i)]).sum();
    let mut ridge = match cfg.ridge {
        RidgePolicy::Auto { relative, floor } => (relative * trace / p as f64).max(floor),
        RidgePolicy::Fixed { value } if value > 0.0 => value,
        RidgePolicy::Fixed { .. } => RIDGE_FLOOR,
    };
    for _ in 0..MAX_DOUBLINGS {
        let mut loaded = cov.clone();
        for i in 0..p {
            loaded[(i, i)] += ridge;
        }
        if linalg::cholesky(&loaded).is_some() {
            return Ok(LabelStats {
                label,
                d,
                mean,
                cov: loaded,
                n_samples: group.len(),
                ridge,
                shrinkage: cfg.shrinkage,
            });
        }
        ridge *= 2.0;
    }
    Err(Error::Numerics(format!(
        "covariance of label {label} stayed indefinite after ridge escalation"
    )))
}

/// Draws `count` latent matrices `mean + L z`, `z ~ N(0, I)`.
pub fn sample_latent(stats: &LabelStats, count: usize, rng: &mut Rng) -> Result<Vec<LatentMatrix>> {
    let chol = CholFactor::new(&stats.cov)?;
    sample_with_factor(stats, &chol, count, rng)
}

pub fn sample_with_factor(stats: &LabelStats, chol: &CholFactor, count: usize, rng: &mut Rng) -> Result<Vec<LatentMatrix>> {
    let p = stats.mean.len();
    let mut z = vec![0.0; p];
    (0..count)
        .map(|k| {
            for zi in z.iter_mut() {
                *zi = rng.normal();
            }
            let lz = chol.mul(&z);
            let flat: Vec<f64> = stats.mean.iter().zip(&lz).map(|(m, v)| m + v).collect();
            LatentMatrix::new(
                Matrix::new(stats.d, stats.d, flat)?,
                format!("{}#{k}", stats.label),
                Some(stats.label.clone()),
                LatentOrigin::Sampled,
            )
        })
        .collect()
}

/// Number of synthetic records generated for a group of `n` latents.
pub fn synthetic_count(n: usize, multiplier: f64) -> usize {
    if multiplier <= 0.0 {
        return 0;
    }
    libm::ceil(multiplier * n as f64 - 1e-9) as usize
}

/// Synthetic dataset plus the statistics it was drawn from.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub dataset: Dataset,
    pub stats: Vec<LabelStats>,
}

/// Fits per-label statistics, samples `ceil(multiplier * N_label)` latents
/// per label and decodes them into synthetic records.
///
/// Record ids are `syn-<label>-<k>`. Each label samples from its own forked
/// stream, keyed by its position in canonical label order.
pub fn synthesize(
    latents: &[LatentMatrix],
    bundle: &SeqAeBundle,
    multiplier: f64,
    cfg: &CovarianceConfig,
    rng: &Rng,
) -> Result<Synthesis> {
    if !(multiplier >= 0.0) {
        return Err(Error::Spec(format!("multiplier must be non-negative, got {multiplier}")));
    }
    let groups = group_by_label(latents)?;
    let labels: LabelSet = groups.keys().cloned().collect();
    let mut records = Vec::new();
    let mut all_stats = Vec::new();
    for (idx, (label, group)) in groups.iter().enumerate() {
        let count = synthetic_count(group.len(), multiplier);
        if count == 0 {
            continue;
        }
        let stats = fit_stats(group, cfg)?;
        let mut stream = rng.fork(idx as u64);
        for (k, lat) in sample_latent(&stats, count, &mut stream)?.into_iter().enumerate() {
            let spectrum = decode_with_id(&lat, bundle, format!("syn-{label}-{k:04}"))?;
            records.push(Record {
                spectrum,
                provenance: Provenance::Synthetic,
                source: None,
            });
        }
        all_stats.push(stats);
    }
    Ok(Synthesis {
        dataset: Dataset::new(labels, records)?,
        stats: all_stats,
    })
}

/// Encode/decode round trip of every record, without touching the latents.
pub fn reconstruct(ds: &Dataset, bundle: &SeqAeBundle) -> Result<Dataset> {
    let records = ds
        .iter()
        .map(|r| {
            let lat = crate::seqae::encode_record(&r.spectrum, bundle)?;
            Ok(Record {
                spectrum: decode_with_id(&lat, bundle, format!("rec-{}", r.id()))?,
                provenance: Provenance::Reconstructed,
                source: Some(r.id().into()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(ds.labels().clone(), records)
}
