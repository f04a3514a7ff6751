//! Sequential double autoencoder.
//!
//! A record `X` (`m x n`) is compressed in two passes. The first model maps
//! every column (a drift-time series of length `m`) to `d` values, giving
//! `Z` (`d x n`). The second model maps every row of `Z` (length `n`) to `d`
//! values, giving the latent matrix `E` (`d x d`). Decoding runs the two
//! decoders in reverse order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{self, Activation, AutoencoderModel, LossHistory, TrainConfig};
use crate::rng::Rng;
use crate::spectrum::{Dataset, Label, ScaleState, Spectrum2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentOrigin {
    Encoded,
    Sampled,
}

/// `d x d` latent representation of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMatrix {
    pub e: Matrix,
    pub source_id: String,
    pub label: Option<Label>,
    pub origin: LatentOrigin,
}

impl LatentMatrix {
    pub fn new(e: Matrix, source_id: impl Into<String>, label: Option<Label>, origin: LatentOrigin) -> Result<Self> {
        if e.rows() != e.cols() || e.is_empty() {
            return Err(Error::Shape(format!("latent matrix must be square, got {:?}", e.shape())));
        }
        if !e.all_finite() {
            return Err(Error::Numerics("latent matrix has non-finite entries".into()));
        }
        Ok(LatentMatrix {
            e,
            source_id: source_id.into(),
            label,
            origin,
        })
    }

    pub fn side(&self) -> usize {
        self.e.rows()
    }
}

/// Trained column (first) and row (second) autoencoders.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqAeBundle {
    first: AutoencoderModel,
    second: AutoencoderModel,
}

impl SeqAeBundle {
    pub fn new(first: AutoencoderModel, second: AutoencoderModel) -> Result<Self> {
        if first.latent_dim() != second.latent_dim() {
            return Err(Error::Shape(format!(
                "latent widths differ: first {} vs second {}",
                first.latent_dim(),
                second.latent_dim()
            )));
        }
        Ok(SeqAeBundle { first, second })
    }

    /// Linear identity bundle for square `d x d` records.
    pub fn identity(d: usize) -> Self {
        SeqAeBundle {
            first: AutoencoderModel::identity(d),
            second: AutoencoderModel::identity(d),
        }
    }

    pub fn first(&self) -> &AutoencoderModel {
        &self.first
    }

    pub fn second(&self) -> &AutoencoderModel {
        &self.second
    }

    pub fn d(&self) -> usize {
        self.first.latent_dim()
    }

    /// Record rows `m`.
    pub fn m(&self) -> usize {
        self.first.input_dim()
    }

    /// Record columns `n`.
    pub fn n(&self) -> usize {
        self.second.input_dim()
    }
}

/// Stage-one encoding: `Z[:, j] = f(x[:, j])`.
pub fn encode_columns(data: &Matrix, model: &AutoencoderModel) -> Result<Matrix> {
    let cols = (0..data.cols())
        .map(|j| model.encode(&data.column(j)))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_columns(&cols)
}

pub fn encode_record(x: &Spectrum2D, b: &SeqAeBundle) -> Result<LatentMatrix> {
    if x.dims() != (b.m(), b.n()) {
        return Err(Error::Shape(format!(
            "record {} is {:?}, bundle expects {:?}",
            x.id,
            x.dims(),
            (b.m(), b.n())
        )));
    }
    if x.scale != ScaleState::LogMinmax {
        return Err(Error::Spec(format!("record {} must be scaled before encoding", x.id)));
    }
    let z = encode_columns(x.data(), &b.first)?;
    let rows = (0..z.rows())
        .map(|i| b.second.encode(z.row(i)))
        .collect::<Result<Vec<_>>>()?;
    LatentMatrix::new(Matrix::from_rows(&rows)?, x.id.clone(), x.label.clone(), LatentOrigin::Encoded)
}

/// Inverse pass: `Zhat[i, :] = g'(E[i, :])`, then `Xhat[:, j] = g(Zhat[:, j])`.
pub fn decode_record(e: &LatentMatrix, b: &SeqAeBundle) -> Result<Spectrum2D> {
    decode_with_id(e, b, e.source_id.clone())
}

pub fn decode_with_id(e: &LatentMatrix, b: &SeqAeBundle, id: String) -> Result<Spectrum2D> {
    if e.side() != b.d() {
        return Err(Error::Shape(format!("latent side {} vs bundle d = {}", e.side(), b.d())));
    }
    let zrows = (0..e.side())
        .map(|i| b.second.decode(e.e.row(i)))
        .collect::<Result<Vec<_>>>()?;
    let z = Matrix::from_rows(&zrows)?;
    let cols = (0..z.cols())
        .map(|j| b.first.decode(&z.column(j)))
        .collect::<Result<Vec<_>>>()?;
    let data = Matrix::from_columns(&cols)?;
    if !data.all_finite() {
        return Err(Error::Numerics(format!("decoding {id} produced non-finite values")));
    }
    Spectrum2D::with_scale(id, data, e.label.clone(), ScaleState::LogMinmax)
}

/// Column series selected for stage-one training.
#[derive(Debug, Clone, PartialEq)]
pub struct UndersamplePlan {
    /// Median of the per-series standard deviations.
    pub threshold: f64,
    /// `(record index, column)` of every kept series, in scan order.
    pub kept: Vec<(usize, usize)>,
    /// Number of kept series whose std was below the threshold.
    pub kept_below: usize,
    /// Number of series whose std was below the threshold.
    pub total_below: usize,
    pub total: usize,
}

fn population_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    libm::sqrt(x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Decides which column series survive undersampling. Series with a standard
/// deviation at or above the threshold are always kept; the rest are kept
/// with probability `keep_prob`. The threshold is the median std over the
/// pooled series of `records` unless one is supplied.
pub fn undersample_plan(
    records: &Dataset,
    keep_prob: f64,
    threshold: Option<f64>,
    rng: &mut Rng,
) -> Result<UndersamplePlan> {
    if !(0.0..=1.0).contains(&keep_prob) {
        return Err(Error::Spec(format!("keep probability {keep_prob} outside [0, 1]")));
    }
    let mut stds = Vec::new();
    for (i, r) in records.iter().enumerate() {
        for j in 0..r.spectrum.cols() {
            stds.push((i, j, population_std(&r.spectrum.data().column(j))));
        }
    }
    let threshold = match threshold {
        Some(t) => t,
        None if stds.is_empty() => 0.0,
        None => median(&stds.iter().map(|s| s.2).collect::<Vec<_>>()),
    };
    let mut plan = UndersamplePlan {
        threshold,
        kept: Vec::new(),
        kept_below: 0,
        total_below: 0,
        total: stds.len(),
    };
    for (i, j, s) in stds {
        if s >= threshold {
            plan.kept.push((i, j));
        } else {
            plan.total_below += 1;
            if rng.uniform() < keep_prob {
                plan.kept.push((i, j));
                plan.kept_below += 1;
            }
        }
    }
    Ok(plan)
}

/// Column series of `records` surviving median-std undersampling.
pub fn undersample_columns(records: &Dataset, keep_prob: f64, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    let plan = undersample_plan(records, keep_prob, None, rng)?;
    Ok(collect_columns(records, &plan))
}

fn collect_columns(records: &Dataset, plan: &UndersamplePlan) -> Vec<Vec<f64>> {
    plan.kept
        .iter()
        .map(|&(i, j)| records.records()[i].spectrum.data().column(j))
        .collect()
}

/// Dense layout of one autoencoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            hidden: vec![256, 64],
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BundleConfig {
    pub d: usize,
    pub first: Architecture,
    pub second: Architecture,
    pub keep_prob: f64,
    /// Regime shared by both stages.
    pub train: TrainConfig,
    /// Seeds weight initialisation and undersampling.
    pub seed: u64,
}

impl Default for BundleConfig {
    fn default() -> Self {
        BundleConfig {
            d: 32,
            first: Architecture::default(),
            second: Architecture::default(),
            keep_prob: 0.25,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub train_series: usize,
    pub val_series: usize,
    pub history: LossHistory,
}

impl StageReport {
    /// Validation loss of the returned parameters.
    pub fn best_val(&self) -> Option<f64> {
        self.history.val.get(self.history.best_epoch).copied()
    }
}

fn check_prepared(ds: &Dataset, what: &str) -> Result<(usize, usize)> {
    if ds.iter().any(|r| r.spectrum.scale != ScaleState::LogMinmax) {
        return Err(Error::Spec(format!("{what} records must be scaled before training")));
    }
    ds.dims().ok_or_else(|| Error::Spec(format!("{what} set is empty")))
}

/// Trains the column autoencoder on undersampled column series. Validation
/// series are undersampled with the training threshold.
pub fn train_first_stage(train: &Dataset, val: &Dataset, cfg: &BundleConfig) -> Result<(AutoencoderModel, StageReport)> {
    let (m, _) = check_prepared(train, "training")?;
    let root = Rng::new(cfg.seed);
    let plan = undersample_plan(train, cfg.keep_prob, None, &mut root.fork(3))?;
    let train_series = collect_columns(train, &plan);
    let val_series = if val.is_empty() {
        Vec::new()
    } else {
        check_prepared(val, "validation")?;
        let vplan = undersample_plan(val, cfg.keep_prob, Some(plan.threshold), &mut root.fork(4))?;
        collect_columns(val, &vplan)
    };
    let model = AutoencoderModel::build(m, &cfg.first.hidden, cfg.d, cfg.first.activation, &mut root.fork(1))?;
    let (model, history) = nn::train(model, &train_series, &val_series, &cfg.train)?;
    Ok((
        model,
        StageReport {
            train_series: train_series.len(),
            val_series: val_series.len(),
            history,
        },
    ))
}

/// Every row of every record's `Z` matrix.
pub fn stage_two_series(ds: &Dataset, first: &AutoencoderModel) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for r in ds.iter() {
        let z = encode_columns(r.spectrum.data(), first)?;
        out.extend((0..z.rows()).map(|i| z.row(i).to_vec()));
    }
    Ok(out)
}

/// Trains the row autoencoder on `Z` rows produced by a finished first stage.
pub fn train_second_stage(
    train: &Dataset,
    val: &Dataset,
    first: &AutoencoderModel,
    cfg: &BundleConfig,
) -> Result<(SeqAeBundle, StageReport)> {
    let (_, n) = check_prepared(train, "training")?;
    let train_series = stage_two_series(train, first)?;
    let val_series = if val.is_empty() {
        Vec::new()
    } else {
        check_prepared(val, "validation")?;
        stage_two_series(val, first)?
    };
    let root = Rng::new(cfg.seed);
    let model = AutoencoderModel::build(n, &cfg.second.hidden, cfg.d, cfg.second.activation, &mut root.fork(2))?;
    let stage_cfg = TrainConfig {
        seed: cfg.train.seed.wrapping_add(1),
        ..cfg.train.clone()
    };
    let (second, history) = nn::train(model, &train_series, &val_series, &stage_cfg)?;
    Ok((
        SeqAeBundle::new(first.clone(), second)?,
        StageReport {
            train_series: train_series.len(),
            val_series: val_series.len(),
            history,
        },
    ))
}

/// Both stages back to back.
pub fn train_bundle(
    train: &Dataset,
    val: &Dataset,
    cfg: &BundleConfig,
) -> Result<(SeqAeBundle, StageReport, StageReport)> {
    if cfg.d == 0 {
        return Err(Error::Spec("latent width d must be positive".into()));
    }
    let (first, r1) = train_first_stage(train, val, cfg)?;
    let (bundle, r2) = train_second_stage(train, val, &first, cfg)?;
    Ok((bundle, r1, r2))
}

/// Encodes every record of `ds`.
pub fn encode_dataset(ds: &Dataset, b: &SeqAeBundle) -> Result<Vec<LatentMatrix>> {
    ds.iter().map(|r| encode_record(&r.spectrum, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Record;

    fn scaled(id: &str, data: Matrix) -> Spectrum2D {
        Spectrum2D::with_scale(id, data, Some("A".into()), ScaleState::LogMinmax).unwrap()
    }

    fn random_bundle(m: usize, n: usize, d: usize, seed: u64) -> SeqAeBundle {
        let mut rng = Rng::new(seed);
        SeqAeBundle::new(
            AutoencoderModel::build(m, &[5], d, Activation::Tanh, &mut rng).unwrap(),
            AutoencoderModel::build(n, &[5], d, Activation::Tanh, &mut rng).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identity_bundle_round_trip() {
        let mut rng = Rng::new(1);
        let x = scaled("x", Matrix::from_fn(4, 4, |_, _| rng.uniform()));
        let b = SeqAeBundle::identity(4);
        let e = encode_record(&x, &b).unwrap();
        assert_eq!(e.e, *x.data());
        let back = decode_record(&e, &b).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn shapes_follow_bundle() {
        let b = random_bundle(7, 5, 3, 2);
        let x = scaled("x", Matrix::from_fn(7, 5, |r, c| (r * c) as f64 / 35.0));
        let e = encode_record(&x, &b).unwrap();
        assert_eq!(e.e.shape(), (3, 3));
        assert_eq!(decode_record(&e, &b).unwrap().dims(), (7, 5));
        let wrong = scaled("w", Matrix::zeros(5, 7));
        assert!(matches!(encode_record(&wrong, &b), Err(Error::Shape(_))));
        let raw = Spectrum2D::new("r", Matrix::zeros(7, 5), None).unwrap();
        assert!(encode_record(&raw, &b).is_err());
    }

    #[test]
    fn stage_one_is_column_local() {
        let b = random_bundle(6, 4, 2, 3);
        let mut rng = Rng::new(4);
        let data = Matrix::from_fn(6, 4, |_, _| rng.uniform());
        let z = encode_columns(&data, b.first()).unwrap();
        let mut other = data.clone();
        for r in 0..6 {
            other[(r, 0)] += 1.0;
            other[(r, 3)] -= 0.5;
        }
        let z2 = encode_columns(&other, b.first()).unwrap();
        assert_eq!(z.column(1), z2.column(1));
        assert_eq!(z.column(2), z2.column(2));
        assert_ne!(z.column(0), z2.column(0));
    }

    fn ramp_dataset(count: usize) -> Dataset {
        // column j of every record has std proportional to j
        let recs = (0..count)
            .map(|k| {
                let data = Matrix::from_fn(6, 10, |r, c| (r as f64 - 2.5) * c as f64 * 0.01 + k as f64 * 1e-3);
                Record::original(scaled(&alloc::format!("r{k}"), data))
            })
            .collect();
        Dataset::from_records(recs).unwrap()
    }

    #[test]
    fn undersample_limits() {
        let ds = ramp_dataset(3);
        let none = undersample_plan(&ds, 0.0, None, &mut Rng::new(1)).unwrap();
        assert_eq!(none.kept.len(), 15);
        assert!(none.kept.iter().all(|&(_, c)| c >= 5));
        let all = undersample_columns(&ds, 1.0, &mut Rng::new(1)).unwrap();
        assert_eq!(all.len(), 30);
        assert!(undersample_plan(&ds, 1.5, None, &mut Rng::new(1)).is_err());
    }

    #[test]
    fn undersample_odd_count_keeps_ceiling_half() {
        let ds = ramp_dataset(1);
        let odd = ds.map_spectra(|s| s.replace_data(s.data().submatrix(0, 6, 0, 9))).unwrap();
        let plan = undersample_plan(&odd, 0.0, None, &mut Rng::new(0)).unwrap();
        assert_eq!(plan.kept.len(), 5);
    }

    #[test]
    fn tiny_bundle_trains_and_counts_series() {
        let mut rng = Rng::new(5);
        let recs: Vec<Record> = (0..6)
            .map(|k| {
                let data = Matrix::from_fn(8, 6, |r, c| {
                    0.5 + 0.4 * libm::sin((r + c + k) as f64 * 0.7) + 0.01 * rng.uniform()
                });
                Record::original(scaled(&alloc::format!("t{k}"), data))
            })
            .collect();
        let ds = Dataset::from_records(recs).unwrap();
        let train = ds.select(&[0, 1, 2, 3]);
        let val = ds.select(&[4, 5]);
        let cfg = BundleConfig {
            d: 3,
            first: Architecture {
                hidden: vec![8],
                activation: Activation::Tanh,
            },
            second: Architecture {
                hidden: vec![8],
                activation: Activation::Tanh,
            },
            train: TrainConfig {
                epochs: 5,
                lr: 1e-2,
                ..TrainConfig::default()
            },
            ..BundleConfig::default()
        };
        let (b, r1, r2) = train_bundle(&train, &val, &cfg).unwrap();
        assert_eq!((b.m(), b.n(), b.d()), (8, 6, 3));
        assert!(r1.train_series >= 12 && r1.train_series <= 24);
        assert_eq!(r2.train_series, 4 * 3);
        assert_eq!(r2.val_series, 2 * 3);
        assert_eq!(r1.history.val.len(), 5);
    }
}
