use spectraforge_core::seqae::{LatentMatrix, LatentOrigin};
use spectraforge_core::synth::{fit_stats, sample_latent, CovarianceConfig, LabelStats};
use spectraforge_core::{Label, Matrix, Rng};

fn random_spd(p: usize, rng: &mut Rng) -> Matrix {
    let b = Matrix::from_fn(p, p, |_, _| rng.normal());
    let mut a = b.matmul(&b.transpose()).unwrap();
    for i in 0..p {
        a[(i, i)] += 0.5;
    }
    a
}

fn stats(mean: Vec<f64>, cov: Matrix, d: usize) -> LabelStats {
    LabelStats {
        label: Label::from("x"),
        d,
        mean,
        cov,
        n_samples: 10,
        ridge: 0.0,
        shrinkage: 0.0,
    }
}

fn moments(draws: &[LatentMatrix]) -> (Vec<f64>, Matrix) {
    let p = draws[0].e.as_slice().len();
    let n = draws.len() as f64;
    let mut mean = vec![0.0; p];
    for d in draws {
        for (m, v) in mean.iter_mut().zip(d.e.as_slice()) {
            *m += v / n;
        }
    }
    let mut cov = Matrix::zeros(p, p);
    for d in draws {
        let x = d.e.as_slice();
        for i in 0..p {
            for j in 0..p {
                cov[(i, j)] += (x[i] - mean[i]) * (x[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    (mean, cov)
}

#[test]
fn d4_moments_match() {
    let mut rng = Rng::new(404);
    let p = 16;
    let cov = random_spd(p, &mut rng);
    let mean: Vec<f64> = (0..p).map(|_| 3.0 * rng.normal()).collect();
    let s = stats(mean.clone(), cov.clone(), 4);
    let n = 50_000;
    let draws = sample_latent(&s, n, &mut Rng::new(1)).unwrap();
    let (m, c) = moments(&draws);
    for i in 0..p {
        let sigma = cov[(i, i)].sqrt();
        assert!((m[i] - mean[i]).abs() <= 3.0 * sigma / (n as f64).sqrt(), "coordinate {i}");
    }
    let diff: f64 = c.as_slice().iter().zip(cov.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    assert!(diff / cov.frobenius_norm() < 0.10);
}

#[test]
fn d1_scalar_gaussian() {
    let s = stats(vec![5.0], Matrix::new(1, 1, vec![4.0]).unwrap(), 1);
    let draws = sample_latent(&s, 100_000, &mut Rng::new(2)).unwrap();
    let (m, c) = moments(&draws);
    assert!((m[0] - 5.0).abs() < 3.0 * 2.0 / (100_000f64).sqrt());
    assert!((c[(0, 0)] - 4.0).abs() / 4.0 < 0.02);
}

#[test]
fn fitted_stats_match_unbiased_covariance() {
    let mut rng = Rng::new(3);
    let group: Vec<LatentMatrix> = (0..30)
        .map(|i| {
            let e = Matrix::from_fn(2, 2, |_, _| rng.normal());
            LatentMatrix::new(e, format!("s{i}"), Some(Label::from("x")), LatentOrigin::Encoded).unwrap()
        })
        .collect();
    let (mean, cov) = moments(&group);
    let s = fit_stats(&group, &CovarianceConfig::fixed(0.0)).unwrap();
    for (a, b) in s.mean.iter().zip(&mean) {
        assert!((a - b).abs() < 1e-12);
    }
    for i in 0..4 {
        for j in 0..4 {
            let ridge = if i == j { s.ridge } else { 0.0 };
            assert!((s.cov[(i, j)] - cov[(i, j)] - ridge).abs() < 1e-12);
        }
    }
}
