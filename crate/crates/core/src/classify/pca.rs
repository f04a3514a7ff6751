use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::matrix::Matrix;

/// Principal axes retaining a target share of the sample variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x p`, one unit component per row.
    pub components: Matrix,
    /// Sample variance (divisor `N - 1`) along each component.
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }
}

/// Eigenvalues, unit eigenvectors, feature means and total variance.
pub type CovarianceSpectrum = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, f64);

/// All non-negligible eigenpairs of the sample covariance of `rows`, in
/// non-increasing order, plus the total variance.
///
/// Uses the `N x N` Gram matrix when there are fewer samples than features.
pub fn covariance_spectrum(rows: &[Vec<f64>]) -> Result<CovarianceSpectrum> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::Spec(format!("PCA needs at least 2 records, got {n}")));
    }
    let p = rows[0].len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::Shape("PCA records must share a positive length".into()));
    }
    let mut mean = vec![0.0; p];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let denom = (n - 1) as f64;
    let total: f64 = centered.iter().flatten().map(|v| v * v).sum::<f64>() / denom;
    if !(total > 0.0) {
        return Err(Error::Degenerate("all records are identical".into()));
    }
    let cutoff = 1e-12 * total;
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    if n <= p {
        let gram = Matrix::from_fn(n, n, |i, j| crate::nn::dot(&centered[i], &centered[j]));
        let (evals, evecs) = symmetric_eigen(&gram);
        for (i, &lambda) in evals.iter().enumerate() {
            let var = lambda / denom;
            if var <= cutoff {
                break;
            }
            let scale = 1.0 / libm::sqrt(lambda);
            let mut v = vec![0.0; p];
            for (s, c) in centered.iter().enumerate() {
                let w = evecs[(s, i)] * scale;
                for (vj, cj) in v.iter_mut().zip(c) {
                    *vj += w * cj;
                }
            }
            values.push(var);
            vectors.push(v);
        }
    } else {
        let mut cov = Matrix::zeros(p, p);
        for c in &centered {
            for i in 0..p {
                let row = cov.row_mut(i);
                for j in 0..p {
                    row[j] += c[i] * c[j];
                }
            }
        }
        let cov = cov.map(|v| v / denom);
        let (evals, evecs) = symmetric_eigen(&cov);
        for (i, &var) in evals.iter().enumerate() {
            if var <= cutoff {
                break;
            }
            values.push(var);
            vectors.push(evecs.column(i));
        }
    }
    for v in &mut vectors {
        // largest-magnitude coordinate positive
        let pivot = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok((values, vectors, mean, total))
}

/// Smallest `k` whose cumulative explained-variance ratio reaches `target`.
pub fn select_k(variances: &[f64], total: f64, target: f64) -> usize {
    let mut acc = 0.0;
    for (i, v) in variances.iter().enumerate() {
        acc += v;
        if acc / total >= target {
            return i + 1;
        }
    }
    variances.len()
}

pub fn pca_fit(rows: &[Vec<f64>], variance_target: f64) -> Result<PcaModel> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::Spec(format!("variance target {variance_target} outside (0, 1]")));
    }
    let (values, vectors, mean, total) = covariance_spectrum(rows)?;
    let k = select_k(&values, total, variance_target).max(1);
    let components = Matrix::from_rows(&vectors[..k])?;
    Ok(PcaModel {
        mean,
        components,
        explained_variance: values[..k].to_vec(),
        total_variance: total,
    })
}

/// Coordinates of `x` in the retained basis: `(x - mean) · components`.
pub fn pca_transform(model: &PcaModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.mean.len() {
        return Err(Error::Shape(format!(
            "record has {} features, PCA was fitted on {}",
            x.len(),
            model.mean.len()
        )));
    }
    let centered: Vec<f64> = x.iter().zip(&model.mean).map(|(a, m)| a - m).collect();
    Ok((0..model.k()).map(|i| crate::nn::dot(model.components.row(i), &centered)).collect())
}

/// `mean + y · components`.
pub fn pca_inverse(model: &PcaModel, y: &[f64]) -> Vec<f64> {
    let mut x = model.mean.clone();
    for (i, &yi) in y.iter().enumerate() {
        for (xj, cj) in x.iter_mut().zip(model.components.row(i)) {
            *xj += yi * cj;
        }
    }
    x
}
