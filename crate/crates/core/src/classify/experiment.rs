use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::forest::{forest_predict, forest_train, ForestConfig};
use super::pca::{pca_fit, pca_transform};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::spectrum::{Dataset, LabelSet, Provenance, Record};
use crate::split::holdout_per_class;

/// Fraction of positions where `preds` and `truth` agree.
pub fn accuracy_rating<T: PartialEq>(preds: &[T], truth: &[T]) -> Result<f64> {
    if preds.len() != truth.len() {
        return Err(Error::Spec(format!("{} predictions for {} truths", preds.len(), truth.len())));
    }
    if preds.is_empty() {
        return Err(Error::Spec("accuracy of an empty prediction set".into()));
    }
    let correct = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Baseline,
    Augmented,
    ReconstructedPlusSynthetic,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Baseline, Condition::Augmented, Condition::ReconstructedPlusSynthetic];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Augmented => "augmented",
            Condition::ReconstructedPlusSynthetic => "reconstructed_plus_synthetic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub condition: Condition,
    pub seeds: Vec<u64>,
    pub per_seed_ar: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; `0` when fewer than two runs.
    pub stddev: f64,
    pub stddev_defined: bool,
}

impl ExperimentReport {
    pub fn from_runs(condition: Condition, seeds: Vec<u64>, per_seed_ar: Vec<f64>) -> Self {
        let n = per_seed_ar.len();
        let mean = if n == 0 { 0.0 } else { per_seed_ar.iter().sum::<f64>() / n as f64 };
        let (stddev, stddev_defined) = if n < 2 {
            (0.0, false)
        } else {
            let ss: f64 = per_seed_ar.iter().map(|a| (a - mean) * (a - mean)).sum();
            (libm::sqrt(ss / (n - 1) as f64), true)
        };
        ExperimentReport {
            condition,
            seeds,
            per_seed_ar,
            mean,
            stddev,
            stddev_defined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub runs: usize,
    pub holdout_k: usize,
    /// One seed per run; empty means `1..=runs`.
    pub seeds: Vec<u64>,
    pub variance_target: f64,
    pub forest: ForestConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            runs: 5,
            holdout_k: 5,
            seeds: Vec::new(),
            variance_target: 0.9,
            forest: ForestConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn resolved_seeds(&self) -> Result<Vec<u64>> {
        if self.seeds.is_empty() {
            return Ok((1..=self.runs as u64).collect());
        }
        if self.seeds.len() != self.runs {
            return Err(Error::Spec(format!("{} seeds given for {} runs", self.seeds.len(), self.runs)));
        }
        Ok(self.seeds.clone())
    }
}

/// One (seed, condition) fit: which ids went where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub condition: Condition,
    pub train_ids: Vec<String>,
    /// Original ids behind the training records (own id for originals).
    pub train_sources: Vec<String>,
    pub val_ids: Vec<String>,
    pub val_provenance: Vec<Provenance>,
    pub pca_k: usize,
}

impl RunTrace {
    /// Ids that appear both in validation and, directly or via `source`,
    /// in training.
    pub fn leaked_ids(&self) -> Vec<String> {
        let seen: BTreeSet<&str> = self
            .train_ids
            .iter()
            .chain(&self.train_sources)
            .map(String::as_str)
            .collect();
        self.val_ids.iter().filter(|id| seen.contains(id.as_str())).cloned().collect()
    }

    pub fn non_original_validation(&self) -> usize {
        self.val_provenance.iter().filter(|p| **p != Provenance::Original).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub reports: Vec<ExperimentReport>,
    pub traces: Vec<RunTrace>,
}

fn flatten(r: &Record) -> Vec<f64> {
    r.spectrum.data().as_slice().to_vec()
}

fn class_indices(ds: &Dataset, labels: &LabelSet) -> Result<Vec<usize>> {
    ds.iter()
        .map(|r| {
            r.label()
                .and_then(|l| labels.index_of(l))
                .ok_or_else(|| Error::Data(format!("record {} has no usable label", r.id())))
        })
        .collect()
}

fn fit_and_score(train: &Dataset, val: &Dataset, labels: &LabelSet, cfg: &ExperimentConfig, seed: u64) -> Result<(f64, usize)> {
    let rows: Vec<Vec<f64>> = train.iter().map(flatten).collect();
    let pca = pca_fit(&rows, cfg.variance_target)?;
    let feats = rows.iter().map(|r| pca_transform(&pca, r)).collect::<Result<Vec<_>>>()?;
    let y = class_indices(train, labels)?;
    let forest = forest_train(&feats, &y, labels.len(), &ForestConfig { seed, ..cfg.forest.clone() })?;
    let truth = class_indices(val, labels)?;
    let preds = val
        .iter()
        .map(|r| forest_predict(&forest, &pca_transform(&pca, &flatten(r))?))
        .collect::<Result<Vec<_>>>()?;
    Ok((accuracy_rating(&preds, &truth)?, pca.k()))
}

/// Repeated hold-out comparison of training on originals, originals plus
/// synthetic records, and reconstructions plus synthetic records.
///
/// Every run holds out `holdout_k` originals per label as validation. PCA
/// and the forest are fitted on each condition's training set alone. The
/// reconstructed condition is skipped when `reconstructed` is `None`.
/// Any validation id that reaches a training set is a [`Error::Leakage`].
pub fn run_experiment(
    original: &Dataset,
    synthetic: &Dataset,
    reconstructed: Option<&Dataset>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    let seeds = cfg.resolved_seeds()?;
    if seeds.is_empty() {
        return Err(Error::Spec("experiment needs at least one run".into()));
    }
    if original.iter().any(|r| r.provenance != Provenance::Original) {
        return Err(Error::Data("original dataset contains derived records".into()));
    }
    let dims = original.dims();
    for other in [Some(synthetic), reconstructed].into_iter().flatten() {
        if !other.is_empty() && other.dims() != dims {
            return Err(Error::Shape(format!("datasets disagree on dims: {:?} vs {:?}", dims, other.dims())));
        }
    }
    let mut labels = original.labels().union(synthetic.labels());
    if let Some(rec) = reconstructed {
        labels = labels.union(rec.labels());
    }
    let conditions: Vec<Condition> = Condition::ALL
        .into_iter()
        .filter(|c| *c != Condition::ReconstructedPlusSynthetic || reconstructed.is_some())
        .collect();
    let mut ars: Vec<Vec<f64>> = conditions.iter().map(|_| Vec::new()).collect();
    let mut traces = Vec::new();
    for &seed in &seeds {
        let root = Rng::new(seed);
        let (train_orig, val) = holdout_per_class(original, cfg.holdout_k, &mut root.fork(0))?;
        if val.is_empty() {
            return Err(Error::Spec("holdout_k must be positive".into()));
        }
        let train_ids: BTreeSet<&str> = train_orig.iter().map(Record::id).collect();
        for (ci, &cond) in conditions.iter().enumerate() {
            let train = match cond {
                Condition::Baseline => train_orig.clone(),
                Condition::Augmented => train_orig.concat(synthetic)?,
                Condition::ReconstructedPlusSynthetic => {
                    let rec = reconstructed.expect("condition filtered above");
                    let keep: Vec<usize> = rec
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| r.source.as_deref().is_some_and(|s| train_ids.contains(s)))
                        .map(|(i, _)| i)
                        .collect();
                    rec.select(&keep).concat(synthetic)?
                }
            };
            let train = Dataset::new(labels.clone(), train.into_records())?;
            let mut trace = RunTrace {
                seed,
                condition: cond,
                train_ids: train.iter().map(|r| r.id().into()).collect(),
                train_sources: train.iter().filter_map(|r| r.source.clone()).collect(),
                val_ids: val.iter().map(|r| r.id().into()).collect(),
                val_provenance: val.iter().map(|r| r.provenance).collect(),
                pca_k: 0,
            };
            let leaked = trace.leaked_ids();
            if !leaked.is_empty() || trace.non_original_validation() > 0 {
                return Err(Error::Leakage(format!(
                    "seed {seed}, {}: {} validation id(s) in training, {} derived validation record(s)",
                    cond.name(),
                    leaked.len(),
                    trace.non_original_validation()
                )));
            }
            let forest_seed = root.fork(1 + ci as u64).seed();
            let (ar, k) = fit_and_score(&train, &val, &labels, cfg, forest_seed)?;
            log::debug!("seed {seed} {}: AR {ar:.4} with {k} components", cond.name());
            trace.pca_k = k;
            ars[ci].push(ar);
            traces.push(trace);
        }
    }
    let reports = conditions
        .iter()
        .zip(ars)
        .map(|(&c, a)| ExperimentReport::from_runs(c, seeds.clone(), a))
        .collect();
    Ok(ExperimentOutcome { reports, traces })
}
