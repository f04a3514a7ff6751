//! Record-level train/validation partitioning.
//!
//! Both partitioners first put records in canonical (id) order so that the
//! result depends only on the dataset contents and the seed, not on the order
//! in which records were loaded.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::spectrum::{Dataset, Provenance};

/// Number of validation records per class for a stratified split.
///
/// The total is `floor(val_fraction * N)` (at least one, at most `N - 1`).
/// Each class first receives `floor(val_fraction * N_c)` clamped to
/// `[1, N_c - 1]`; any shortfall is handed out one record at a time by
/// largest fractional remainder, ties going to the earlier label.
pub fn stratified_counts(class_sizes: &[usize], val_fraction: f64) -> Vec<usize> {
    let total: usize = class_sizes.iter().sum();
    let target = (libm::floor(val_fraction * total as f64) as usize).clamp(1, total.saturating_sub(1));
    let mut counts: Vec<usize> = class_sizes
        .iter()
        .map(|&n| (libm::floor(val_fraction * n as f64) as usize).clamp(1, n - 1))
        .collect();
    let mut assigned: usize = counts.iter().sum();
    while assigned < target {
        let next = class_sizes
            .iter()
            .enumerate()
            .filter(|&(i, &n)| counts[i] < n - 1)
            .map(|(i, &n)| {
                let exact = val_fraction * n as f64;
                (i, exact - counts[i] as f64)
            })
            .fold(None::<(usize, f64)>, |best, (i, rem)| match best {
                Some((_, r)) if r >= rem => best,
                _ => Some((i, rem)),
            });
        match next {
            Some((i, _)) => {
                counts[i] += 1;
                assigned += 1;
            }
            None => break,
        }
    }
    counts
}

fn check_fraction(val_fraction: f64) -> Result<()> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Spec(format!(
            "validation fraction must lie in (0, 1), got {val_fraction}"
        )));
    }
    Ok(())
}

/// Stratified split that fails when a class cannot be stratified.
pub fn split_dataset_strict(ds: &Dataset, val_fraction: f64, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    check_fraction(val_fraction)?;
    if ds.len() < 2 {
        return Err(Error::Spec(format!("cannot split {} record(s)", ds.len())));
    }
    if ds.iter().any(|r| r.label().is_none()) {
        return Err(Error::Stratify("dataset contains unlabelled records".into()));
    }
    let canonical = ds.canonical_order();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for label in ds.labels().iter() {
        let members: Vec<usize> = canonical
            .iter()
            .copied()
            .filter(|&i| ds.records()[i].label() == Some(label))
            .collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::Stratify(format!(
                "label {label} has {} record(s), need at least 2",
                members.len()
            )));
        }
        groups.push(members);
    }
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let counts = stratified_counts(&sizes, val_fraction);
    let mut val_idx = Vec::new();
    for (members, &k) in groups.iter_mut().zip(&counts) {
        rng.shuffle(members);
        val_idx.extend_from_slice(&members[..k]);
    }
    Ok(partition(ds, &canonical, &val_idx))
}

/// Stratified split, falling back to an unstratified split (with a logged
/// warning) when some class has fewer than two records.
pub fn split_dataset(ds: &Dataset, val_fraction: f64, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    match split_dataset_strict(ds, val_fraction, rng) {
        Err(Error::Stratify(reason)) => {
            log::warn!("falling back to unstratified split: {reason}");
            split_global(ds, val_fraction, rng)
        }
        other => other,
    }
}

/// Unstratified split of `floor(val_fraction * N)` validation records.
pub fn split_global(ds: &Dataset, val_fraction: f64, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    check_fraction(val_fraction)?;
    if ds.len() < 2 {
        return Err(Error::Spec(format!("cannot split {} record(s)", ds.len())));
    }
    let canonical = ds.canonical_order();
    let n_val = (libm::floor(val_fraction * ds.len() as f64) as usize).clamp(1, ds.len() - 1);
    let mut shuffled = canonical.clone();
    rng.shuffle(&mut shuffled);
    Ok(partition(ds, &canonical, &shuffled[..n_val]))
}

fn partition(ds: &Dataset, canonical: &[usize], val_idx: &[usize]) -> (Dataset, Dataset) {
    let mut is_val = alloc::vec![false; ds.len()];
    for &i in val_idx {
        is_val[i] = true;
    }
    let train: Vec<usize> = canonical.iter().copied().filter(|&i| !is_val[i]).collect();
    let val: Vec<usize> = canonical.iter().copied().filter(|&i| is_val[i]).collect();
    (ds.select(&train), ds.select(&val))
}

/// Holds out exactly `k` original-provenance records of every label.
///
/// Returns `(train, validation)`; the training half keeps every other record,
/// including all reconstructed and synthetic ones.
pub fn holdout_per_class(ds: &Dataset, k: usize, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    let canonical = ds.canonical_order();
    if k == 0 {
        return Ok((ds.select(&canonical), Dataset::empty(ds.labels().clone())));
    }
    let mut val_idx = Vec::new();
    for label in ds.labels().iter() {
        let mut originals: Vec<usize> = canonical
            .iter()
            .copied()
            .filter(|&i| {
                let r = &ds.records()[i];
                r.provenance == Provenance::Original && r.label() == Some(label)
            })
            .collect();
        if originals.len() <= k {
            return Err(Error::Holdout(format!(
                "label {label} has {} original record(s), need more than {k}",
                originals.len()
            )));
        }
        rng.shuffle(&mut originals);
        val_idx.extend_from_slice(&originals[..k]);
    }
    Ok(partition(ds, &canonical, &val_idx))
}
