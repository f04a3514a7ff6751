//! Preprocessing chain: reactant-ion-peak removal, Haar resolution
//! reduction, cropping, and reversible `log1p` + min-max scaling.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectrum::{Dataset, ScaleState, Spectrum2D};

/// Half-open index interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    fn check_within(&self, bound: usize, what: &str) -> Result<()> {
        if self.is_empty() || self.end > bound {
            return Err(Error::Spec(format!(
                "{what} [{}, {}) is empty or exceeds bound {bound}",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

/// Region kept by [`crop`]; `None` keeps the full axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CropSpec {
    #[serde(default)]
    pub rows: Option<Span>,
    #[serde(default)]
    pub cols: Option<Span>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WaveletLevels {
    #[serde(default)]
    pub rows: usize,
    #[serde(default)]
    pub cols: usize,
}

/// Per-dataset preprocessing configuration. Coordinates in `crop` refer to
/// the matrix after RIP removal and wavelet reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    #[serde(default)]
    pub rip_cols: Option<Span>,
    #[serde(default)]
    pub wavelet_levels: WaveletLevels,
    #[serde(default)]
    pub crop: CropSpec,
    #[serde(default = "default_clamp")]
    pub clamp: bool,
}

fn default_clamp() -> bool {
    true
}

impl Default for DatasetProfile {
    fn default() -> Self {
        DatasetProfile {
            rip_cols: None,
            wavelet_levels: WaveletLevels::default(),
            crop: CropSpec::default(),
            clamp: true,
        }
    }
}

impl DatasetProfile {
    /// RIP removal, wavelet reduction and crop, in that order.
    pub fn apply_structure(&self, s: &Spectrum2D) -> Result<Spectrum2D> {
        let mut out = match self.rip_cols {
            Some(span) => remove_rip(s, span)?,
            None => s.clone(),
        };
        if self.wavelet_levels.rows > 0 || self.wavelet_levels.cols > 0 {
            out = wavelet_reduce(&out, self.wavelet_levels.rows, self.wavelet_levels.cols)?;
        }
        crop(&out, &self.crop)
    }
}

/// Deletes the columns in `rip_cols`.
pub fn remove_rip(s: &Spectrum2D, rip_cols: Span) -> Result<Spectrum2D> {
    let (m, n) = s.dims();
    rip_cols.check_within(n, "RIP column interval")?;
    if rip_cols.len() == n {
        return Err(Error::Spec("removing every column leaves an empty spectrum".into()));
    }
    let kept: Vec<usize> = (0..n).filter(|c| *c < rip_cols.start || *c >= rip_cols.end).collect();
    let data = Matrix::from_fn(m, kept.len(), |r, c| s.data()[(r, kept[c])]);
    s.replace_data(data)
}

/// One Haar analysis level keeping only the approximation band. Odd lengths
/// are extended by repeating the last sample. Each output is the pairwise
/// mean, i.e. the orthonormal scaling coefficient `(a + b) / sqrt(2)`
/// renormalised by `1 / sqrt(2)` so constants map to themselves.
fn haar_approx(x: &[f64]) -> Vec<f64> {
    let half = x.len().div_ceil(2);
    (0..half)
        .map(|i| {
            let a = x[2 * i];
            let b = x.get(2 * i + 1).copied().unwrap_or(a);
            (a + b) * 0.5
        })
        .collect()
}

/// Length of an axis after `levels` halvings.
pub fn reduced_len(mut len: usize, levels: usize) -> usize {
    for _ in 0..levels {
        len = len.div_ceil(2);
    }
    len
}

/// Separable multilevel Haar reduction. Output dims are
/// `ceil(m / 2^levels_rows) x ceil(n / 2^levels_cols)`.
pub fn wavelet_reduce(s: &Spectrum2D, levels_rows: usize, levels_cols: usize) -> Result<Spectrum2D> {
    let mut data = s.data().clone();
    for (axis, levels) in [("row", levels_rows), ("column", levels_cols)] {
        for level in 0..levels {
            let len = if axis == "row" { data.rows() } else { data.cols() };
            if len < 2 {
                return Err(Error::Spec(format!(
                    "{axis} axis exhausted at level {} of {levels}",
                    level + 1
                )));
            }
            data = if axis == "row" {
                // drift-time axis: reduce each column series
                let cols: Vec<Vec<f64>> = (0..data.cols()).map(|c| haar_approx(&data.column(c))).collect();
                Matrix::from_columns(&cols)?
            } else {
                let rows: Vec<Vec<f64>> = (0..data.rows()).map(|r| haar_approx(data.row(r))).collect();
                Matrix::from_rows(&rows)?
            };
        }
    }
    s.replace_data(data)
}

pub fn crop(s: &Spectrum2D, spec: &CropSpec) -> Result<Spectrum2D> {
    let (m, n) = s.dims();
    let rows = spec.rows.unwrap_or(Span::new(0, m));
    let cols = spec.cols.unwrap_or(Span::new(0, n));
    rows.check_within(m, "crop rows")?;
    cols.check_within(n, "crop columns")?;
    s.replace_data(s.data().submatrix(rows.start, rows.end, cols.start, cols.end))
}

/// Coefficients of the `log1p` + min-max transform, fitted on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub lo: f64,
    pub hi: f64,
    pub clamp: bool,
    /// Added to every intensity before `log1p`; non-zero only when the
    /// training data contained negative values.
    #[serde(default)]
    pub shift: f64,
}

/// Fits `lo`/`hi` as the extremes of `log1p(x + shift)` over all training
/// intensities.
pub fn fit_scaling(train: &Dataset, clamp: bool) -> Result<ScalingParams> {
    if train.is_empty() {
        return Err(Error::Spec("cannot fit scaling on an empty dataset".into()));
    }
    if train.iter().any(|r| r.spectrum.scale != ScaleState::Raw) {
        return Err(Error::Spec("scaling must be fitted on raw records".into()));
    }
    let (min, max) = train.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (lo.min(r.spectrum.data().min()), hi.max(r.spectrum.data().max()))
    });
    let shift = if min < 0.0 { -min } else { 0.0 };
    let lo = libm::log1p(min + shift);
    let hi = libm::log1p(max + shift);
    if hi <= lo {
        return Err(Error::DegenerateScale(format!(
            "training intensities are constant ({min})"
        )));
    }
    Ok(ScalingParams { lo, hi, clamp, shift })
}

pub fn apply_scaling(s: &Spectrum2D, p: &ScalingParams) -> Result<Spectrum2D> {
    if s.scale != ScaleState::Raw {
        return Err(Error::Spec(format!("spectrum {} is already scaled", s.id)));
    }
    let span = p.hi - p.lo;
    let mut out = s.data().clone();
    for v in out.as_mut_slice() {
        let x = *v + p.shift;
        if x < -1.0 {
            return Err(Error::Data(format!(
                "intensity {} in {} is below the log1p domain",
                *v, s.id
            )));
        }
        let y = (libm::log1p(x) - p.lo) / span;
        *v = if p.clamp { y.clamp(0.0, 1.0) } else { y };
    }
    Spectrum2D::with_scale(s.id.clone(), out, s.label.clone(), ScaleState::LogMinmax)
}

pub fn invert_scaling(s: &Spectrum2D, p: &ScalingParams) -> Result<Spectrum2D> {
    if s.scale != ScaleState::LogMinmax {
        return Err(Error::Spec(format!("spectrum {} is not scaled", s.id)));
    }
    let span = p.hi - p.lo;
    let data = s.data().map(|y| libm::expm1(y * span + p.lo) - p.shift);
    Spectrum2D::with_scale(s.id.clone(), data, s.label.clone(), ScaleState::Raw)
}

pub fn apply_scaling_dataset(ds: &Dataset, p: &ScalingParams) -> Result<Dataset> {
    ds.map_spectra(|s| apply_scaling(s, p))
}

pub fn invert_scaling_dataset(ds: &Dataset, p: &ScalingParams) -> Result<Dataset> {
    ds.map_spectra(|s| invert_scaling(s, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Record;
    use alloc::vec;
    use core::f64::consts::E;

    fn spectrum(rows: &[&[f64]]) -> Spectrum2D {
        Spectrum2D::new("s", Matrix::from_rows(rows).unwrap(), None).unwrap()
    }

    fn params(lo: f64, hi: f64, clamp: bool) -> ScalingParams {
        ScalingParams { lo, hi, clamp, shift: 0.0 }
    }

    #[test]
    fn rip_removal_drops_columns() {
        let s = spectrum(&[&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]]);
        let out = remove_rip(&s, Span::new(1, 2)).unwrap();
        assert_eq!(out.data().as_slice(), &[1.0, 3.0, 4.0, 5.0, 7.0, 8.0]);
        assert!(remove_rip(&s, Span::new(0, 4)).is_err());
        assert!(remove_rip(&s, Span::new(2, 2)).is_err());
        assert!(remove_rip(&s, Span::new(3, 5)).is_err());
    }

    #[test]
    fn haar_block_mean() {
        let s = spectrum(&[&[1.0, 3.0], &[5.0, 7.0]]);
        let out = wavelet_reduce(&s, 1, 1).unwrap();
        assert_eq!(out.data().as_slice(), &[4.0]);
    }

    #[test]
    fn haar_preserves_constants() {
        let data = Matrix::from_fn(13, 7, |_, _| 2.5);
        let s = Spectrum2D::new("c", data, None).unwrap();
        let out = wavelet_reduce(&s, 3, 2).unwrap();
        assert_eq!(out.dims(), (2, 2));
        assert!(out.data().as_slice().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn haar_odd_length_pads_with_last_sample() {
        let s = spectrum(&[&[1.0, 3.0, 10.0]]);
        let out = wavelet_reduce(&s, 0, 1).unwrap();
        assert_eq!(out.data().as_slice(), &[2.0, 10.0]);
    }

    #[test]
    fn reduced_lengths() {
        assert_eq!(reduced_len(6123, 3), 766);
        assert_eq!(reduced_len(3150, 3), 394);
        let s = Spectrum2D::new("z", Matrix::zeros(1, 4), None).unwrap();
        assert!(matches!(wavelet_reduce(&s, 1, 0), Err(Error::Spec(_))));
    }

    #[test]
    fn crop_ranges() {
        let s = Spectrum2D::new("m", Matrix::from_fn(3, 3, |r, c| (r * 3 + c) as f64), None).unwrap();
        assert_eq!(crop(&s, &CropSpec::default()).unwrap(), s);
        let spec = CropSpec {
            rows: Some(Span::new(0, 2)),
            cols: Some(Span::new(1, 3)),
        };
        assert_eq!(crop(&s, &spec).unwrap().data().as_slice(), &[1.0, 2.0, 4.0, 5.0]);
        let bad = CropSpec {
            rows: Some(Span::new(2, 4)),
            cols: None,
        };
        assert!(crop(&s, &bad).is_err());
    }

    #[test]
    fn fit_on_log1p_values() {
        let ds = Dataset::from_records(vec![Record::original(spectrum(&[&[0.0, E - 1.0]]))]).unwrap();
        let p = fit_scaling(&ds, true).unwrap();
        assert_eq!(p.lo, 0.0);
        assert!((p.hi - 1.0).abs() < 1e-15);
        let flat = Dataset::from_records(vec![Record::original(spectrum(&[&[3.0, 3.0]]))]).unwrap();
        assert!(matches!(fit_scaling(&flat, true), Err(Error::DegenerateScale(_))));
    }

    #[test]
    fn fit_shifts_negative_training_data() {
        let ds = Dataset::from_records(vec![Record::original(spectrum(&[&[-2.0, 5.0]]))]).unwrap();
        let p = fit_scaling(&ds, false).unwrap();
        assert_eq!(p.shift, 2.0);
        assert_eq!(p.lo, 0.0);
        let y = apply_scaling(&ds.records()[0].spectrum, &p).unwrap();
        assert_eq!(y.data().as_slice()[0], 0.0);
        assert!((y.data().as_slice()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn apply_known_points() {
        let p = params(0.0, 1.0, true);
        let y = apply_scaling(&spectrum(&[&[E - 1.0, 0.0, 100.0]]), &p).unwrap();
        let v = y.data().as_slice();
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert_eq!(v[1], 0.0);
        assert_eq!(v[2], 1.0);
        assert_eq!(y.scale, ScaleState::LogMinmax);
        assert!(apply_scaling(&y, &p).is_err());
        assert!(matches!(
            apply_scaling(&spectrum(&[&[-1.5]]), &p),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn invert_known_points() {
        let p = params(0.0, 1.0, true);
        let s = Spectrum2D::with_scale("y", Matrix::new(1, 2, vec![0.0, 1.0]).unwrap(), None, ScaleState::LogMinmax)
            .unwrap();
        let x = invert_scaling(&s, &p).unwrap();
        assert_eq!(x.data().as_slice()[0], 0.0);
        assert!((x.data().as_slice()[1] - (E - 1.0)).abs() < 1e-15);
        assert!(invert_scaling(&x, &p).is_err());
    }

    #[test]
    fn profile_chain_order() {
        let s = Spectrum2D::new("p", Matrix::from_fn(8, 10, |r, c| (r + c) as f64), None).unwrap();
        let profile = DatasetProfile {
            rip_cols: Some(Span::new(0, 2)),
            wavelet_levels: WaveletLevels { rows: 1, cols: 1 },
            crop: CropSpec {
                rows: Some(Span::new(1, 3)),
                cols: None,
            },
            clamp: true,
        };
        let out = profile.apply_structure(&s).unwrap();
        assert_eq!(out.dims(), (2, 4));
    }
}
