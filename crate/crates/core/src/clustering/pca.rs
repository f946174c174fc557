//! Principal component projection via a cyclic Jacobi eigensolver.
//!
//! When there are fewer rows than dimensions the eigenproblem is solved on
//! the n × n Gram matrix and mapped back, which keeps 768-dimensional
//! embeddings of small corpora cheap.

use alloc::vec;
use alloc::vec::Vec;

pub const DEFAULT_OUT_DIM: usize = 25;

/// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PcaError {
    #[error("no input vectors")]
    Empty,
    #[error("out_dim must be positive")]
    ZeroDim,
    #[error("row {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {0} has a non-finite value")]
    NonFinite(usize),
    #[error("data has rank {achieved}, below the requested {requested} components")]
    RankDeficient { achieved: usize, requested: usize },
}

/// Mean-centred projection onto the leading principal components.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionModel {
    pub mean: Vec<f64>,
    /// out_dim rows, each a unit vector of input dimension.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalue per retained component.
    pub explained_variance: Vec<f64>,
    /// Share of total variance per retained component.
    pub explained_variance_ratio: Vec<f64>,
    /// Total variance (sum of all covariance eigenvalues).
    pub total_variance: f64,
}

impl ProjectionModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(v).zip(&self.mean).map(|((ci, x), m)| ci * (x - m)).sum())
            .collect()
    }

    pub fn project_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.project(r)).collect()
    }

    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &z) in self.components.iter().zip(coords) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += z * ci;
            }
        }
        out
    }
}

/// Symmetric eigendecomposition. Returns eigenvalues in descending order and
/// the matching eigenvectors as rows.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    // v[i] is column i of the accumulated rotation, stored as a row
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect();
    let frob: f64 = a.iter().flatten().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off <= 1e-30 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if libm::fabs(*x) > libm::fabs(v[best]) + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn normalise(v: &mut [f64]) {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

pub fn fit_pca(rows: &[Vec<f64>], out_dim: usize) -> Result<ProjectionModel, PcaError> {
    if rows.is_empty() {
        return Err(PcaError::Empty);
    }
    if out_dim == 0 {
        return Err(PcaError::ZeroDim);
    }
    let dim = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(PcaError::DimensionMismatch {
                index: i,
                expected: dim,
                found: r.len(),
            });
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(PcaError::NonFinite(i));
        }
    }
    let n = rows.len();
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centred: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };

    let (values, mut vectors) = if n < dim {
        let gram: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| dot(&centred[i], &centred[j]) / denom).collect())
            .collect();
        let (vals, us) = symmetric_eigen(&gram);
        // v = Xᵀu / ‖Xᵀu‖
        let vs = us
            .iter()
            .map(|u| {
                let mut v = vec![0.0; dim];
                for (ui, row) in u.iter().zip(&centred) {
                    for (vj, x) in v.iter_mut().zip(row) {
                        *vj += ui * x;
                    }
                }
                normalise(&mut v);
                v
            })
            .collect::<Vec<_>>();
        (vals, vs)
    } else {
        let mut cov = vec![vec![0.0; dim]; dim];
        for r in &centred {
            for i in 0..dim {
                if r[i] == 0.0 {
                    continue;
                }
                for j in i..dim {
                    cov[i][j] += r[i] * r[j];
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                cov[i][j] /= denom;
                cov[j][i] = cov[i][j];
            }
        }
        symmetric_eigen(&cov)
    };

    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let rank = values.iter().filter(|&&l| top > 0.0 && l > RANK_TOLERANCE * top).count();
    if rank < out_dim {
        return Err(PcaError::RankDeficient {
            achieved: rank,
            requested: out_dim,
        });
    }
    let total: f64 = values.iter().map(|l| l.max(0.0)).sum();
    vectors.truncate(out_dim);
    for v in &mut vectors {
        orient(v);
    }
    let explained: Vec<f64> = values[..out_dim].to_vec();
    Ok(ProjectionModel {
        mean,
        components: vectors,
        explained_variance_ratio: explained.iter().map(|l| l / total).collect(),
        explained_variance: explained,
        total_variance: total,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// Leading eigenvalues by power iteration with deflation.
    fn power_iteration_eigenvalues(m: &[Vec<f64>], count: usize) -> Vec<f64> {
        let n = m.len();
        let mut a = m.to_vec();
        let mut out = Vec::new();
        for _ in 0..count {
            let mut v = vec![1.0; n];
            v[0] = 1.3;
            let mut lambda = 0.0;
            for _ in 0..5000 {
                let w: Vec<f64> = (0..n).map(|i| dot(&a[i], &v)).collect();
                let norm = libm::sqrt(dot(&w, &w));
                if norm == 0.0 {
                    break;
                }
                v = w.iter().map(|x| x / norm).collect();
                lambda = norm;
            }
            for i in 0..n {
                for j in 0..n {
                    a[i][j] -= lambda * v[i] * v[j];
                }
            }
            out.push(lambda);
        }
        out
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let m = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 5.0]];
        let (vals, vecs) = symmetric_eigen(&m);
        assert_abs_diff_eq!(vals[0], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(libm::fabs(vecs[1][0]), libm::sqrt(0.5), epsilon = 1e-12);
    }

    #[test]
    fn exact_subspace_reconstructs() {
        let a = [1.0, 2.0, 0.0, -1.0, 0.5];
        let b = [0.0, 1.0, 1.0, 3.0, -2.0];
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let s = i as f64 * 0.7 - 3.0;
                let t = libm::sin(i as f64);
                (0..5).map(|d| 10.0 + s * a[d] + t * b[d]).collect()
            })
            .collect();
        let m = fit_pca(&rows, 2).unwrap();
        for r in &rows {
            let back = m.reconstruct(&m.project(r));
            for (x, y) in back.iter().zip(r) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
        assert!(matches!(fit_pca(&rows, 3), Err(PcaError::RankDeficient { achieved: 2, requested: 3 })));
    }

    #[test]
    fn components_are_orthonormal_and_shaped() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| (0..768).map(|_| gaussian(&mut rng)).collect()).collect();
        let m = fit_pca(&rows, 25).unwrap();
        assert_eq!(m.output_dim(), 25);
        assert_eq!(m.project(&rows[0]).len(), 25);
        for i in 0..25 {
            for j in 0..25 {
                let d = dot(&m.components[i], &m.components[j]);
                assert_abs_diff_eq!(d, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn isotropic_ratios_are_close_and_match_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..4000).map(|_| (0..4).map(|_| gaussian(&mut rng)).collect()).collect();
        let m = fit_pca(&rows, 4).unwrap();
        for r in &m.explained_variance_ratio {
            assert!((r - 0.25).abs() < 0.03, "{r}");
        }
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..4).map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n).collect();
        let cov: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0)).collect())
            .collect();
        let oracle = power_iteration_eigenvalues(&cov, 4);
        for (a, b) in m.explained_variance.iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn reconstruction_error_equals_discarded_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scales = [3.0, 2.0, 1.0, 0.5, 0.2, 0.1];
        let rows: Vec<Vec<f64>> = (0..30).map(|_| scales.iter().map(|s| s * gaussian(&mut rng)).collect()).collect();
        let full = fit_pca(&rows, 6).unwrap();
        for k in 1..6 {
            let m = fit_pca(&rows, k).unwrap();
            let err: f64 = rows
                .iter()
                .map(|r| {
                    let back = m.reconstruct(&m.project(r));
                    back.iter().zip(r).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
                })
                .sum();
            let discarded: f64 = full.explained_variance[k..].iter().sum();
            assert_abs_diff_eq!(err / 29.0, discarded, epsilon = 1e-6);
        }
    }

    #[test]
    fn gram_and_covariance_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| gaussian(&mut rng)).collect()).collect();
        let wide: Vec<Vec<f64>> = rows[..4].to_vec();
        // 4 rows in 5 dims takes the Gram path; compare against a padded covariance solve
        let m = fit_pca(&wide, 3).unwrap();
        let n = 4.0;
        let mean: Vec<f64> = (0..5).map(|d| wide.iter().map(|r| r[d]).sum::<f64>() / n).collect();
        let cov: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| wide.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0)).collect())
            .collect();
        let (vals, vecs) = symmetric_eigen(&cov);
        for k in 0..3 {
            assert_abs_diff_eq!(m.explained_variance[k], vals[k], epsilon = 1e-9);
            let d = dot(&m.components[k], &vecs[k]).abs();
            assert_abs_diff_eq!(d, 1.0, epsilon = 1e-9);
        }
    }
}
