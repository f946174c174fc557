//! Role exposure clusters and the task taxonomy.

pub mod kmeans;
pub mod pca;
pub mod taxonomy;
pub mod text;

use alloc::vec::Vec;
use core::fmt;

use kmeans::KMeansError;

pub const EXPOSURE_CLUSTER_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExposureCluster {
    Low,
    Augmentation,
    Adaptation,
    Automation,
}

impl ExposureCluster {
    /// Ascending centroid-mean order.
    pub const ALL: [ExposureCluster; 4] = [
        ExposureCluster::Low,
        ExposureCluster::Augmentation,
        ExposureCluster::Adaptation,
        ExposureCluster::Automation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExposureCluster::Low => "Low",
            ExposureCluster::Augmentation => "Augmentation",
            ExposureCluster::Adaptation => "Adaptation",
            ExposureCluster::Automation => "Automation",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ExposureCluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExposureClusterError {
    #[error("{0} roles; at least 4 are needed")]
    TooFewRoles(usize),
    #[error("only {0} distinct (mean, std) points; cannot form 4 clusters")]
    Degenerate(usize),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureClustering {
    pub assignments: Vec<ExposureCluster>,
    /// (mean, std) centroid, indexed by [`ExposureCluster::index`].
    pub centroids: [(f64, f64); 4],
    pub sizes: [usize; 4],
    pub inertia: f64,
}

/// k = 4 on raw (weighted mean, weighted std) pairs; clusters named by
/// ascending centroid mean.
pub fn cluster_roles(points: &[(f64, f64)], seed: u64) -> Result<ExposureClustering, ExposureClusterError> {
    if points.len() < EXPOSURE_CLUSTER_COUNT {
        return Err(ExposureClusterError::TooFewRoles(points.len()));
    }
    let rows: Vec<Vec<f64>> = points.iter().map(|(m, s)| alloc::vec![*m, *s]).collect();
    let distinct = kmeans::distinct_count(&rows);
    if distinct < EXPOSURE_CLUSTER_COUNT {
        return Err(ExposureClusterError::Degenerate(distinct));
    }
    let km = kmeans::kmeans(&rows, EXPOSURE_CLUSTER_COUNT, seed)?;
    let mut order: Vec<usize> = (0..EXPOSURE_CLUSTER_COUNT).collect();
    order.sort_by(|&a, &b| {
        km.centroids[a][0]
            .total_cmp(&km.centroids[b][0])
            .then(km.centroids[a][1].total_cmp(&km.centroids[b][1]))
    });
    let mut name_of = [ExposureCluster::Low; 4];
    let mut centroids = [(0.0, 0.0); 4];
    for (rank, &c) in order.iter().enumerate() {
        name_of[c] = ExposureCluster::ALL[rank];
        centroids[rank] = (km.centroids[c][0], km.centroids[c][1]);
    }
    let assignments: Vec<ExposureCluster> = km.assignments.iter().map(|&a| name_of[a]).collect();
    let mut sizes = [0; 4];
    for a in &assignments {
        sizes[a.index()] += 1;
    }
    Ok(ExposureClustering {
        assignments,
        centroids,
        sizes,
        inertia: km.inertia,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CENTRES: [(f64, f64); 4] = [(0.381, 0.118), (0.483, 0.158), (0.586, 0.162), (0.697, 0.136)];

    #[test]
    fn recovers_generating_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (g, (m, s)) in CENTRES.iter().enumerate() {
            for _ in 0..50 {
                pts.push((m + rng.random_range(-0.01..0.01), s + rng.random_range(-0.01..0.01)));
                truth.push(ExposureCluster::ALL[g]);
            }
        }
        let c = cluster_roles(&pts, 7).unwrap();
        assert_eq!(c.assignments, truth);
        for (got, want) in c.centroids.iter().zip(CENTRES) {
            assert!((got.0 - want.0).abs() < 0.01);
        }
        assert_eq!(c.sizes, [50; 4]);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(cluster_roles(&[(0.5, 0.1); 3], 0), Err(ExposureClusterError::TooFewRoles(3)));
        assert_eq!(cluster_roles(&[(0.5, 0.1); 8], 0), Err(ExposureClusterError::Degenerate(1)));
    }

    #[test]
    fn permutation_invariant() {
        let pts = vec![
            (0.30, 0.1),
            (0.31, 0.12),
            (0.5, 0.15),
            (0.52, 0.16),
            (0.6, 0.2),
            (0.61, 0.18),
            (0.8, 0.1),
            (0.82, 0.09),
        ];
        let a = cluster_roles(&pts, 3).unwrap();
        let mut rev = pts.clone();
        rev.reverse();
        let mut b = cluster_roles(&rev, 3).unwrap();
        b.assignments.reverse();
        assert_eq!(a.assignments, b.assignments);
    }
}
