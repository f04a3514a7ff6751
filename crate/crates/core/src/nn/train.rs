use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{loss_and_gradients, sample_errors, AdamState, AutoencoderModel, PlateauScheduler};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub patience: usize,
    pub factor: f64,
    /// Minimum absolute decrease of the validation loss counted as progress.
    pub threshold: f64,
    pub min_lr: f64,
    /// Return the parameters of the best-validation epoch instead of the last.
    pub keep_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 150,
            lr: 5e-4,
            batch_size: 32,
            seed: 0,
            patience: 10,
            factor: 0.5,
            threshold: 1e-5,
            min_lr: 1e-6,
            keep_best: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Spec("epochs and batch size must be positive".into()));
        }
        if !(self.lr >= 0.0) || !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::Spec("learning rate must be >= 0 and factor in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-epoch losses. `val` is empty when no validation series were given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub train: Vec<f64>,
    pub val: Vec<f64>,
    pub lr: Vec<f64>,
    pub best_epoch: usize,
}

/// Mean reconstruction error over `series`. Per-sample errors are sorted
/// before summation so the result does not depend on series order.
pub fn evaluate<X: AsRef<[f64]>>(model: &AutoencoderModel, series: &[X]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Spec("cannot evaluate on zero series".into()));
    }
    let mut errs = sample_errors(model, series)?;
    errs.sort_by(f64::total_cmp);
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Mini-batch Adam on the reconstruction MSE with a plateau schedule driven
/// by the validation loss (training loss when `val` is empty).
pub fn train<X: AsRef<[f64]>, Y: AsRef<[f64]>>(
    mut model: AutoencoderModel,
    train: &[X],
    val: &[Y],
    cfg: &TrainConfig,
) -> Result<(AutoencoderModel, LossHistory)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Spec("no training series".into()));
    }
    let shapes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    let mut adam = AdamState::new(&shapes, cfg.lr);
    let mut sched = PlateauScheduler::new(cfg.lr, cfg.patience, cfg.factor, cfg.threshold, cfg.min_lr.min(cfg.lr));
    let mut rng = Rng::new(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = LossHistory::default();
    let mut best_loss = f64::INFINITY;
    let mut best_model: Option<AutoencoderModel> = None;
    let mut batch: Vec<&[f64]> = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].as_ref()));
            let (loss, grads) = match loss_and_gradients(&model, &batch) {
                Ok(v) => v,
                Err(Error::Numerics(_)) => return Err(Error::Diverged { epoch }),
                Err(e) => return Err(e),
            };
            epoch_loss += loss * chunk.len() as f64;
            adam.lr = sched.lr();
            adam.step(&mut model.params_mut(), &grads.as_slices());
        }
        let train_loss = epoch_loss / train.len() as f64;
        let monitored = if val.is_empty() {
            train_loss
        } else {
            let v = match evaluate(&model, val) {
                Ok(v) => v,
                Err(Error::Numerics(_)) => return Err(Error::Diverged { epoch }),
                Err(e) => return Err(e),
            };
            history.val.push(v);
            v
        };
        if !monitored.is_finite() || !train_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.train.push(train_loss);
        history.lr.push(sched.lr());
        sched.observe(monitored);
        if monitored < best_loss {
            best_loss = monitored;
            history.best_epoch = epoch;
            if cfg.keep_best {
                best_model = Some(model.clone());
            }
        }
        log::debug!("epoch {epoch}: train {train_loss:.3e} monitored {monitored:.3e} lr {:.2e}", sched.lr());
    }
    if let Some(m) = best_model {
        model = m;
    }
    Ok((model, history))
}
