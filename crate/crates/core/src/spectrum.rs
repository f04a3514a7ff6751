//! Records, labels and datasets.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Class name of a record, e.g. `"EC"` or `"LB&SC"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub String);

impl Label {
    pub fn new(name: impl Into<String>) -> Self {
        Label(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label(s.into())
    }
}

/// Declared label set. Iteration order is the canonical (lexicographic)
/// order used for vote tie-breaking and per-label loops.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(BTreeSet<Label>);

impl LabelSet {
    pub fn new() -> Self {
        LabelSet(BTreeSet::new())
    }

    pub fn insert(&mut self, label: Label) -> bool {
        self.0.insert(label)
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.0.contains(label)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Label> {
        self.0.iter()
    }

    /// Position of `label` in canonical order.
    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn get(&self, index: usize) -> Option<&Label> {
        self.0.iter().nth(index)
    }

    pub fn union(&self, other: &LabelSet) -> LabelSet {
        LabelSet(self.0.union(&other.0).cloned().collect())
    }
}

impl FromIterator<Label> for LabelSet {
    fn from_iter<I: IntoIterator<Item = Label>>(iter: I) -> Self {
        LabelSet(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleState {
    #[default]
    Raw,
    LogMinmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Original,
    Reconstructed,
    Synthetic,
}

/// One 2D spectrum: `m` drift-time rows by `n` retention-time columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    pub id: String,
    data: Matrix,
    pub label: Option<Label>,
    pub scale: ScaleState,
}

impl Spectrum2D {
    /// Rejects empty or non-finite matrices.
    pub fn new(id: impl Into<String>, data: Matrix, label: Option<Label>) -> Result<Self> {
        Self::with_scale(id, data, label, ScaleState::Raw)
    }

    pub fn with_scale(
        id: impl Into<String>,
        data: Matrix,
        label: Option<Label>,
        scale: ScaleState,
    ) -> Result<Self> {
        let id = id.into();
        if data.rows() == 0 || data.cols() == 0 {
            return Err(Error::Spec(format!(
                "spectrum {id} is empty ({}x{})",
                data.rows(),
                data.cols()
            )));
        }
        if !data.all_finite() {
            return Err(Error::Data(format!("spectrum {id} has non-finite values")));
        }
        Ok(Spectrum2D {
            id,
            data,
            label,
            scale,
        })
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn into_data(self) -> Matrix {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.data.shape()
    }

    /// Same id, label and scale state around new data.
    pub fn replace_data(&self, data: Matrix) -> Result<Self> {
        Self::with_scale(self.id.clone(), data, self.label.clone(), self.scale)
    }
}

/// A spectrum together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub spectrum: Spectrum2D,
    pub provenance: Provenance,
    /// Id of the original record this one was derived from, if any.
    pub source: Option<String>,
}

impl Record {
    pub fn original(spectrum: Spectrum2D) -> Self {
        Record {
            spectrum,
            provenance: Provenance::Original,
            source: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.spectrum.id
    }

    pub fn label(&self) -> Option<&Label> {
        self.spectrum.label.as_ref()
    }
}

/// Labelled records sharing one `(m, n)` shape.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    labels: LabelSet,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(labels: LabelSet, records: Vec<Record>) -> Result<Self> {
        let ds = Dataset { labels, records };
        ds.validate()?;
        Ok(ds)
    }

    /// Label set inferred from the records.
    pub fn from_records(records: Vec<Record>) -> Result<Self> {
        let labels = records.iter().filter_map(|r| r.label().cloned()).collect();
        Self::new(labels, records)
    }

    pub fn empty(labels: LabelSet) -> Self {
        Dataset {
            labels,
            records: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let dims = self.dims();
        let mut ids = BTreeSet::new();
        for r in &self.records {
            if Some(r.spectrum.dims()) != dims {
                return Err(Error::Shape(format!(
                    "record {} is {:?}, dataset is {:?}",
                    r.id(),
                    r.spectrum.dims(),
                    dims.unwrap_or_default()
                )));
            }
            if let Some(label) = r.label() {
                if !self.labels.contains(label) {
                    return Err(Error::Spec(format!(
                        "record {} has undeclared label {label}",
                        r.id()
                    )));
                }
            }
            if !ids.insert(r.id()) {
                return Err(Error::Spec(format!("duplicate record id {}", r.id())));
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Shape shared by all records, `None` when empty.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.records.first().map(|r| r.spectrum.dims())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Record> {
        self.records.iter()
    }

    pub fn push(&mut self, record: Record) -> Result<()> {
        self.records.push(record);
        if let Err(e) = self.validate() {
            self.records.pop();
            return Err(e);
        }
        Ok(())
    }

    /// Records of `self` followed by those of `other`; label sets are merged.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        Dataset::new(self.labels.union(&other.labels), records)
    }

    /// Indices of records grouped per label, in canonical label order.
    pub fn indices_by_label(&self) -> Vec<(Label, Vec<usize>)> {
        self.labels
            .iter()
            .map(|l| {
                let idx = self
                    .records
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.label() == Some(l))
                    .map(|(i, _)| i)
                    .collect();
                (l.clone(), idx)
            })
            .collect()
    }

    /// Sub-dataset keeping the label set.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            labels: self.labels.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Indices sorted by record id.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.records.len()).collect();
        idx.sort_by(|&a, &b| self.records[a].id().cmp(self.records[b].id()));
        idx
    }

    pub fn map_spectra(&self, mut f: impl FnMut(&Spectrum2D) -> Result<Spectrum2D>) -> Result<Dataset> {
        let records = self
            .records
            .iter()
            .map(|r| {
                Ok(Record {
                    spectrum: f(&r.spectrum)?,
                    provenance: r.provenance,
                    source: r.source.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(self.labels.clone(), records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec(id: &str, label: &str, v: f64) -> Record {
        Record::original(
            Spectrum2D::new(id, Matrix::new(1, 2, vec![v, v]).unwrap(), Some(label.into())).unwrap(),
        )
    }

    #[test]
    fn spectrum_rejects_empty_and_nan() {
        assert!(matches!(
            Spectrum2D::new("a", Matrix::zeros(0, 3), None),
            Err(Error::Spec(_))
        ));
        let bad = Matrix::new(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(Spectrum2D::new("a", bad, None), Err(Error::Data(_))));
    }

    #[test]
    fn dataset_rejects_mixed_dims_and_unknown_labels() {
        let a = spec("a", "A", 1.0);
        let b = Record::original(
            Spectrum2D::new("b", Matrix::zeros(2, 2), Some("A".into())).unwrap(),
        );
        assert!(Dataset::from_records(vec![a.clone(), b]).is_err());
        let labels: LabelSet = [Label::from("B")].into_iter().collect();
        assert!(Dataset::new(labels, vec![a.clone()]).is_err());
        assert!(Dataset::from_records(vec![a.clone(), a]).is_err());
    }

    #[test]
    fn label_set_is_sorted() {
        let set: LabelSet = ["SC", "EC", "LB&SC"].into_iter().map(Label::from).collect();
        let names: Vec<&str> = set.iter().map(Label::as_str).collect();
        assert_eq!(names, ["EC", "LB&SC", "SC"]);
        assert_eq!(set.index_of(&"SC".into()), Some(2));
    }

    #[test]
    fn grouping_and_canonical_order() {
        let ds = Dataset::from_records(vec![spec("z", "B", 0.0), spec("a", "A", 1.0), spec("m", "B", 2.0)])
            .unwrap();
        let groups = ds.indices_by_label();
        assert_eq!(groups[0].1, vec![1]);
        assert_eq!(groups[1].1, vec![0, 2]);
        assert_eq!(ds.canonical_order(), vec![1, 2, 0]);
    }
}
