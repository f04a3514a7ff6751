//! Small dense factorizations: Cholesky and the cyclic Jacobi symmetric
//! eigensolver.

use alloc::vec::Vec;

use crate::matrix::Matrix;

/// Lower-triangular `L` with `a = L Lᵀ`, or `None` when `a` is not
/// numerically positive definite (some pivot is `<= 0` or non-finite).
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return None;
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = libm::sqrt(diag);
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            let (ri, rj) = (l.row(i), l.row(j));
            for k in 0..j {
                s -= ri[k] * rj[k];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// Eigen-decomposition of a symmetric matrix. Eigenvalues are returned in
/// non-increasing order; column `i` of the second result is the unit
/// eigenvector for eigenvalue `i`.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigendecomposition needs a square matrix");
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale: f64 = m.as_slice().iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_spd(n: usize, rng: &mut Rng) -> Matrix {
        let b = Matrix::from_fn(n, n, |_, _| rng.normal());
        let mut a = b.matmul(&b.transpose()).unwrap();
        for i in 0..n {
            a[(i, i)] += 0.5;
        }
        a
    }

    #[test]
    fn cholesky_reconstructs() {
        let mut rng = Rng::new(1);
        for n in 1..8 {
            let a = random_spd(n, &mut rng);
            let l = cholesky(&a).unwrap();
            let back = l.matmul(&l.transpose()).unwrap();
            for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
                assert!((x - y).abs() < 1e-10);
            }
            for r in 0..n {
                for c in r + 1..n {
                    assert_eq!(l[(r, c)], 0.0);
                }
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(cholesky(&a).is_none());
        assert!(cholesky(&Matrix::zeros(3, 3)).is_none());
    }

    #[test]
    fn eigen_of_diagonal_and_known_2x2() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a);
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let r = core::f64::consts::FRAC_1_SQRT_2;
        assert!((vecs[(0, 0)].abs() - r).abs() < 1e-14);
        assert!((vecs[(1, 0)] - vecs[(0, 0)]).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        let mut rng = Rng::new(2);
        for n in [1, 3, 6, 11] {
            let a = random_spd(n, &mut rng);
            let (vals, vecs) = symmetric_eigen(&a);
            assert!(vals.windows(2).all(|w| w[0] >= w[1]));
            let lambda = Matrix::from_fn(n, n, |r, c| if r == c { vals[r] } else { 0.0 });
            let back = vecs.matmul(&lambda).unwrap().matmul(&vecs.transpose()).unwrap();
            for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
                assert!((x - y).abs() < 1e-10 * a.frobenius_norm());
            }
            let gram = vecs.transpose().matmul(&vecs).unwrap();
            for r in 0..n {
                for c in 0..n {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!((gram[(r, c)] - want).abs() < 1e-12);
                }
            }
        }
    }
}
