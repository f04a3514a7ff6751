//! JSON manifests: the label set plus one entry per record pointing at its
//! matrix file. Relative paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spectraforge_core::{Dataset, Label, LabelSet, Provenance, Record, ScaleState, Spectrum2D};

use crate::error::{require, AppError, Result};
use crate::matrix_io::{load_matrix, save_matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub label: Option<Label>,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(default)]
    pub scale: ScaleState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub labels: Vec<Label>,
    pub records: Vec<ManifestEntry>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    require(path)?;
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::format(path, e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    if dir.as_os_str().is_empty() {
        return Ok(());
    }
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

/// Turns an id into a portable file stem.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

/// Distinct file stems for `ids`, suffixing collisions with a counter.
pub fn unique_stems<'a>(ids: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut used = HashSet::new();
    ids.into_iter()
        .map(|id| {
            let base = file_stem(id);
            let mut stem = base.clone();
            let mut k = 1;
            while !used.insert(stem.clone()) {
                stem = format!("{base}~{k}");
                k += 1;
            }
            stem
        })
        .collect()
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest: Manifest = read_json(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let labels: LabelSet = manifest.labels.into_iter().collect();
    let records = manifest
        .records
        .into_iter()
        .map(|e| {
            let path = base.join(&e.path);
            require(&path)?;
            let data = load_matrix(&path)?;
            Ok(Record {
                spectrum: Spectrum2D::with_scale(e.id, data, e.label, e.scale)?,
                provenance: e.provenance,
                source: e.source,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(labels, records)?)
}

/// Writes every record as `<dir>/<subdir>/<id>.spb` and a manifest at
/// `<dir>/<name>`. Returns the manifest path.
pub fn save_dataset(ds: &Dataset, dir: &Path, name: &str, subdir: &str) -> Result<PathBuf> {
    let data_dir = dir.join(subdir);
    create_dir(&data_dir)?;
    let stems = unique_stems(ds.iter().map(Record::id));
    let mut entries = Vec::with_capacity(ds.len());
    for (r, stem) in ds.iter().zip(stems) {
        let rel = Path::new(subdir).join(format!("{stem}.spb"));
        save_matrix(&dir.join(&rel), r.spectrum.data())?;
        entries.push(ManifestEntry {
            id: r.id().to_string(),
            path: rel,
            label: r.label().cloned(),
            provenance: r.provenance,
            scale: r.spectrum.scale,
            source: r.source.clone(),
        });
    }
    let manifest = Manifest {
        labels: ds.labels().iter().cloned().collect(),
        records: entries,
    };
    let path = dir.join(name);
    write_json(&path, &manifest)?;
    Ok(path)
}
