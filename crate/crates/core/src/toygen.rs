//! Surrogate 2D spectra: class-specific Gaussian peak signatures with
//! position and amplitude jitter over folded-normal noise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::spectrum::{Dataset, Label, LabelSet, Record, Spectrum2D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub row: f64,
    pub col: f64,
    pub sigma_row: f64,
    pub sigma_col: f64,
    pub amplitude: f64,
}

impl Peak {
    pub fn new(row: f64, col: f64, sigma_row: f64, sigma_col: f64, amplitude: f64) -> Self {
        Peak {
            row,
            col,
            sigma_row,
            sigma_col,
            amplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyClassSpec {
    pub label: Label,
    pub peaks: Vec<Peak>,
    /// Standard deviation of the per-record shift of each peak centre.
    #[serde(default)]
    pub position_jitter: f64,
    /// Amplitudes are scaled by a uniform factor from this range.
    #[serde(default = "unit_range")]
    pub amplitude_jitter: (f64, f64),
    #[serde(default)]
    pub noise_sigma: f64,
}

fn unit_range() -> (f64, f64) {
    (1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyDatasetSpec {
    pub m: usize,
    pub n: usize,
    pub classes: Vec<ToyClassSpec>,
    pub records_per_class: Vec<usize>,
    pub seed: u64,
}

impl Default for ToyDatasetSpec {
    fn default() -> Self {
        let class = |name: &str, peaks: Vec<Peak>| ToyClassSpec {
            label: Label::from(name),
            peaks,
            position_jitter: 1.0,
            amplitude_jitter: (0.8, 1.2),
            noise_sigma: 0.02,
        };
        ToyDatasetSpec {
            m: 64,
            n: 48,
            classes: vec![
                class("alpha", vec![Peak::new(16.0, 12.0, 3.0, 2.0, 1.0), Peak::new(40.0, 30.0, 4.0, 3.0, 0.6)]),
                class("beta", vec![Peak::new(16.0, 30.0, 3.0, 2.0, 1.0), Peak::new(48.0, 12.0, 3.0, 3.0, 0.5)]),
                class("gamma", vec![Peak::new(32.0, 24.0, 5.0, 4.0, 0.8), Peak::new(10.0, 40.0, 2.0, 2.0, 0.4)]),
                class("delta", vec![Peak::new(50.0, 36.0, 3.0, 2.0, 0.9), Peak::new(24.0, 8.0, 3.0, 3.0, 0.7)]),
            ],
            records_per_class: vec![7, 5, 4, 4],
            seed: 7,
        }
    }
}

impl ToyDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Spec(format!("toy dims must be positive, got {}x{}", self.m, self.n)));
        }
        if self.classes.len() < 2 {
            return Err(Error::Spec("toy dataset needs at least 2 classes".into()));
        }
        if self.records_per_class.len() != self.classes.len() {
            return Err(Error::Spec(format!(
                "{} record counts for {} classes",
                self.records_per_class.len(),
                self.classes.len()
            )));
        }
        if let Some(c) = self.records_per_class.iter().find(|&&c| c < 4) {
            return Err(Error::Spec(format!("every class needs at least 4 records, got {c}")));
        }
        let distinct: LabelSet = self.classes.iter().map(|c| c.label.clone()).collect();
        if distinct.len() != self.classes.len() {
            return Err(Error::Spec("duplicate class label".into()));
        }
        for c in &self.classes {
            if !(c.noise_sigma >= 0.0) || !(c.position_jitter >= 0.0) {
                return Err(Error::Spec(format!("class {}: negative noise or jitter", c.label)));
            }
            let (lo, hi) = c.amplitude_jitter;
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Spec(format!("class {}: bad amplitude range ({lo}, {hi})", c.label)));
            }
            for p in &c.peaks {
                let inside = (0.0..=(self.m - 1) as f64).contains(&p.row) && (0.0..=(self.n - 1) as f64).contains(&p.col);
                if !inside {
                    return Err(Error::Spec(format!("class {}: peak ({}, {}) outside matrix", c.label, p.row, p.col)));
                }
                if !(p.amplitude > 0.0 && p.sigma_row > 0.0 && p.sigma_col > 0.0) {
                    return Err(Error::Spec(format!("class {}: peak amplitude and widths must be positive", c.label)));
                }
            }
        }
        Ok(())
    }
}

fn render(spec: &ToyDatasetSpec, class: &ToyClassSpec, rng: &mut Rng) -> Matrix {
    let mut data = Matrix::zeros(spec.m, spec.n);
    let (lo, hi) = class.amplitude_jitter;
    for p in &class.peaks {
        let mr = p.row + class.position_jitter * rng.normal();
        let mc = p.col + class.position_jitter * rng.normal();
        let a = p.amplitude * (lo + (hi - lo) * rng.uniform());
        let (ir, ic) = (0.5 / (p.sigma_row * p.sigma_row), 0.5 / (p.sigma_col * p.sigma_col));
        let col_profile: Vec<f64> = (0..spec.n)
            .map(|c| {
                let dc = c as f64 - mc;
                libm::exp(-dc * dc * ic)
            })
            .collect();
        for r in 0..spec.m {
            let dr = r as f64 - mr;
            let w = a * libm::exp(-dr * dr * ir);
            for (x, cp) in data.row_mut(r).iter_mut().zip(&col_profile) {
                *x += w * cp;
            }
        }
    }
    if class.noise_sigma > 0.0 {
        for x in data.as_mut_slice() {
            *x += (class.noise_sigma * rng.normal()).abs();
        }
    }
    data
}

/// Renders every record of `spec`. Record `j` of class `c` draws from
/// stream `j` of stream `c` of the seed and is named `<label>-<j:03>`.
pub fn generate(spec: &ToyDatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let root = Rng::new(spec.seed);
    let labels: LabelSet = spec.classes.iter().map(|c| c.label.clone()).collect();
    let mut records = Vec::new();
    for (ci, (class, &count)) in spec.classes.iter().zip(&spec.records_per_class).enumerate() {
        let stream = root.fork(ci as u64);
        for j in 0..count {
            let data = render(spec, class, &mut stream.fork(j as u64));
            let spectrum = Spectrum2D::new(format!("{}-{j:03}", class.label), data, Some(class.label.clone()))?;
            records.push(Record::original(spectrum));
        }
    }
    Dataset::new(labels, records)
}

/// Two abundant and two scarce classes whose signatures overlap, so a
/// classifier trained on a handful of scarce records is not perfect.
pub fn scarce_preset(seed: u64) -> ToyDatasetSpec {
    let class = |name: &str, peaks: Vec<Peak>| ToyClassSpec {
        label: Label::from(name),
        peaks,
        position_jitter: 2.0,
        amplitude_jitter: (0.6, 1.4),
        noise_sigma: 0.05,
    };
    ToyDatasetSpec {
        m: 32,
        n: 24,
        classes: vec![
            class("common-a", vec![Peak::new(10.0, 8.0, 3.0, 2.5, 1.0), Peak::new(22.0, 16.0, 3.0, 2.5, 0.5)]),
            class("common-b", vec![Peak::new(10.0, 16.0, 3.0, 2.5, 1.0), Peak::new(22.0, 8.0, 3.0, 2.5, 0.5)]),
            class("scarce-a", vec![Peak::new(12.0, 9.0, 3.0, 2.5, 1.0), Peak::new(22.0, 16.0, 3.0, 2.5, 0.9)]),
            class("scarce-b", vec![Peak::new(12.0, 15.0, 3.0, 2.5, 1.0), Peak::new(22.0, 8.0, 3.0, 2.5, 0.9)]),
        ],
        records_per_class: vec![12, 12, 4, 4],
        seed,
    }
}
