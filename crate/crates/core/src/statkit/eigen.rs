#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use super::{Result, StatError};

/// Largest matrix the Jacobi solver accepts.
pub const MAX_EIGEN_DIM: usize = 32;

const SYMMETRY_TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricEigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector for `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigensolver for small symmetric matrices.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> Result<SymmetricEigen> {
    let n = a.len();
    if n == 0 {
        return Err(StatError::EmptySample);
    }
    if n > MAX_EIGEN_DIM {
        return Err(StatError::InvalidArgument(format!("dimension {n} exceeds {MAX_EIGEN_DIM}")));
    }
    if let Some(row) = a.iter().find(|r| r.len() != n) {
        return Err(StatError::ShapeError(format!("row of length {} in {n}x{n} matrix", row.len())));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((a[i][j] - a[j][i]).abs());
        }
    }
    if worst > SYMMETRY_TOLERANCE {
        return Err(StatError::NotSymmetric { deviation: worst });
    }

    let mut m: Vec<Vec<f64>> = a.to_vec();
    // symmetrise away sub-tolerance noise
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = avg;
            m[j][i] = avg;
        }
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();

    let frob2: f64 = m.iter().flatten().map(|x| x * x).sum();
    for _ in 0..MAX_SWEEPS {
        let off2: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off2 <= f64::EPSILON * f64::EPSILON * frob2 || off2 == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].total_cmp(&m[x][x]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&c| (0..n).map(|r| v[r][c]).collect()).collect();
    Ok(SymmetricEigen { values, vectors })
}

/// Apply the Jacobi rotation J(p, q, θ) as m ← Jᵀ m J and accumulate v ← v J.
fn rotate(m: &mut [Vec<f64>], v: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let n = m.len();
    for k in 0..n {
        let mkp = m[k][p];
        let mkq = m[k][q];
        m[k][p] = c * mkp - s * mkq;
        m[k][q] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[p][k];
        let mqk = m[q][k];
        m[p][k] = c * mpk - s * mqk;
        m[q][k] = s * mpk + c * mqk;
    }
    m[p][q] = 0.0;
    m[q][p] = 0.0;
    for row in v.iter_mut() {
        let vp = row[p];
        let vq = row[q];
        row[p] = c * vp - s * vq;
        row[q] = s * vp + c * vq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[i][j] = x;
                a[j][i] = x;
            }
        }
        a
    }

    fn reconstruction_error(a: &[Vec<f64>], e: &SymmetricEigen) -> f64 {
        let n = a.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let rebuilt: f64 = (0..n).map(|k| e.values[k] * e.vectors[k][i] * e.vectors[k][j]).sum();
                worst = worst.max((a[i][j] - rebuilt).abs());
            }
        }
        worst
    }

    #[test]
    fn identity() {
        let a: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| (i == j) as u8 as f64).collect()).collect();
        let e = symmetric_eigen(&a).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_is_axis_aligned() {
        let a = vec![vec![1.0, 0.0, 0.0], vec![0.0, 3.0, 0.0], vec![0.0, 0.0, 2.0]];
        let e = symmetric_eigen(&a).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(e.vectors[1], vec![0.0, 0.0, 1.0]);
        assert_eq!(e.vectors[2], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_symmetric(&mut rng, 6);
            let e = symmetric_eigen(&a).unwrap();
            assert!(reconstruction_error(&a, &e) < 1e-8);
            let trace: f64 = (0..6).map(|i| a[i][i]).sum();
            assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-9);
            for i in 0..6 {
                for j in 0..6 {
                    let dot: f64 = (0..6).map(|k| e.vectors[i][k] * e.vectors[j][k]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-9);
                }
                let av: Vec<f64> = (0..6).map(|r| (0..6).map(|c| a[r][c] * e.vectors[i][c]).sum()).collect();
                for r in 0..6 {
                    assert!((av[r] - e.values[i] * e.vectors[i][r]).abs() < 1e-9);
                }
            }
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn agrees_with_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in [2, 4, 9] {
            let a = random_symmetric(&mut rng, n);
            let ours = symmetric_eigen(&a).unwrap();
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
            let mut theirs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
            theirs.sort_by(|x, y| y.total_cmp(x));
            for (x, y) in ours.values.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let a = vec![vec![1.0, 2.0], vec![2.1, 1.0]];
        assert!(matches!(symmetric_eigen(&a), Err(StatError::NotSymmetric { .. })));
    }
}
