use nalgebra::{DMatrix, SymmetricEigen};
use spectraforge_core::classify::{pca_fit, pca_transform, select_k};
use spectraforge_core::Rng;

/// Eigenvalues (descending) and eigenvectors of the full sample covariance.
fn brute_force(rows: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let (n, p) = (rows.len(), rows[0].len());
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let mean = x.row_mean();
    let mut c = x.clone();
    for mut r in c.row_iter_mut() {
        r -= &mean;
    }
    let cov = c.transpose() * &c / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(p, p, |r, k| eig.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

fn random_rows(rng: &mut Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    let scales: Vec<f64> = (0..p).map(|_| 0.1 + 3.0 * rng.uniform()).collect();
    (0..n).map(|_| scales.iter().map(|s| s * rng.normal()).collect()).collect()
}

#[test]
fn matches_brute_force_covariance_eigen() {
    let mut rng = Rng::new(31);
    for _ in 0..100 {
        let n = 2 + rng.below(49);
        let p = 1 + rng.below(30);
        let rows = random_rows(&mut rng, n, p);
        let (vals, vecs) = brute_force(&rows);
        let total: f64 = vals.iter().sum();
        let model = pca_fit(&rows, 1.0).unwrap();
        let full = model.k();
        for (i, v) in model.explained_variance.iter().enumerate() {
            assert!((v - vals[i]).abs() < 1e-8 * vals[0].max(1.0), "eigenvalue {i}: {v} vs {}", vals[i]);
        }
        assert!((model.total_variance - total).abs() < 1e-8 * total);

        let target = pca_fit(&rows, 0.9).unwrap();
        let positive: Vec<f64> = vals.iter().copied().filter(|v| *v > 1e-12 * total).collect();
        assert_eq!(target.k(), select_k(&positive, total, 0.9));

        // projector onto leading components, skipping near-degenerate cut points
        for k in 1..=full {
            if k < vals.len() && (vals[k - 1] - vals[k]).abs() < 1e-6 * vals[0] {
                continue;
            }
            let ours = DMatrix::from_fn(k, p, |r, c| model.components[(r, c)]);
            let theirs = vecs.columns(0, k).transpose();
            let diff = ours.transpose() * &ours - theirs.transpose() * &theirs;
            assert!(diff.abs().max() < 1e-6);
        }
    }
}

#[test]
fn components_orthonormal_and_ratio_monotone() {
    let mut rng = Rng::new(5);
    for _ in 0..20 {
        let (n, p) = (3 + rng.below(20), 2 + rng.below(15));
        let rows = random_rows(&mut rng, n, p);
        let model = pca_fit(&rows, 1.0).unwrap();
        for i in 0..model.k() {
            for j in 0..model.k() {
                let d: f64 = model.components.row(i).iter().zip(model.components.row(j)).map(|(a, b)| a * b).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
        let mut acc = 0.0;
        for r in model.explained_variance_ratio() {
            assert!(r >= 0.0);
            acc += r;
        }
        assert!((acc - 1.0).abs() < 1e-9);
        assert!(model.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn transform_is_isometry_on_rank_k_data() {
    let mut rng = Rng::new(12);
    let basis: Vec<Vec<f64>> = (0..3).map(|_| (0..10).map(|_| rng.normal()).collect()).collect();
    let rows: Vec<Vec<f64>> = (0..15)
        .map(|_| {
            let w: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
            (0..10).map(|j| 1.0 + (0..3).map(|b| w[b] * basis[b][j]).sum::<f64>()).collect()
        })
        .collect();
    let model = pca_fit(&rows, 1.0).unwrap();
    assert_eq!(model.k(), 3);
    let y: Vec<Vec<f64>> = rows.iter().map(|r| pca_transform(&model, r).unwrap()).collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            assert!((dist(&rows[i], &rows[j]) - dist(&y[i], &y[j])).abs() < 1e-8);
        }
    }
}
