//! Seeded k-means (k-means++ initialisation, Lloyd iterations, restarts).
//!
//! Points are sorted into a canonical order before clustering so results do
//! not depend on input order. Cluster ids in the result are renumbered by
//! first appearance in that canonical order.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeric::{lex_cmp, sub_seed};

pub const DEFAULT_MAX_ITERATIONS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KMeansError {
    #[error("no points to cluster")]
    Empty,
    #[error("k must be positive")]
    ZeroK,
    #[error("k = {k} exceeds the {distinct} distinct points available")]
    TooFewPoints { k: usize, distinct: usize },
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub max_iterations: usize,
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            restarts: DEFAULT_RESTARTS.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster id per input point, in input order.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
    /// False when the best restart hit the iteration cap.
    pub converged: bool,
    /// Inertia after each Lloyd step of the winning restart.
    pub inertia_history: Vec<f64>,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        // strict < keeps the lowest index on ties
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn inertia(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum()
}

fn means(points: &[Vec<f64>], assignments: &[usize], k: usize, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(j, (s, n))| {
            if n == 0 {
                previous[j].clone()
            } else {
                s.into_iter().map(|v| v / n as f64).collect()
            }
        })
        .collect()
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc >= target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the final sum
            chosen.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            0
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Move the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &[Vec<f64>], assignments: &mut [usize], centroids: &mut [Vec<f64>]) -> bool {
    let k = centroids.len();
    let mut repaired = false;
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return repaired;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            if counts[assignments[i]] < 2 {
                continue;
            }
            let d = squared_distance(p, &centroids[assignments[i]]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { return repaired };
        assignments[i] = empty;
        centroids[empty] = points[i].clone();
        repaired = true;
    }
}

struct Run {
    assignments: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    inertia: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iterations: usize) -> Run {
    let k = centroids.len();
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    repair_empty(points, &mut assignments, &mut centroids);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        centroids = means(points, &assignments, k, &centroids);
        history.push(inertia(points, &assignments, &centroids));
        iterations += 1;
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        repair_empty(points, &mut next, &mut centroids);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    if !converged {
        centroids = means(points, &assignments, k, &centroids);
    }
    let inertia = inertia(points, &assignments, &centroids);
    Run {
        assignments,
        centroids,
        inertia,
        iterations,
        converged,
        history,
    }
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<(), KMeansError> {
    if points.is_empty() {
        return Err(KMeansError::Empty);
    }
    if k == 0 {
        return Err(KMeansError::ZeroK);
    }
    let dim = points[0].len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(KMeansError::DimensionMismatch {
                index: i,
                expected: dim,
                found: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(KMeansError::NonFinite(i));
        }
    }
    Ok(())
}

/// Number of distinct points (exact equality).
pub fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| lex_cmp(a, b));
    sorted.dedup_by(|a, b| lex_cmp(a, b).is_eq());
    sorted.len()
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult, KMeansError> {
    kmeans_with(points, k, seed, KMeansOptions::default())
}

pub fn kmeans_with(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    options: KMeansOptions,
) -> Result<KMeansResult, KMeansError> {
    validate(points, k)?;
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(KMeansError::TooFewPoints { k, distinct });
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
    let canonical: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();

    let mut best: Option<Run> = None;
    for r in 0..options.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &alloc::format!("restart-{r}")));
        let init = plus_plus_init(&canonical, k, &mut rng);
        let run = lloyd(&canonical, init, options.max_iterations.max(1));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");

    // renumber clusters by first appearance in canonical order
    let mut relabel = vec![usize::MAX; k];
    let mut next = 0;
    for &a in &run.assignments {
        if relabel[a] == usize::MAX {
            relabel[a] = next;
            next += 1;
        }
    }
    let mut centroids = vec![Vec::new(); k];
    for (old, c) in run.centroids.into_iter().enumerate() {
        centroids[relabel[old]] = c;
    }
    let mut assignments = vec![0; points.len()];
    for (pos, &orig) in order.iter().enumerate() {
        assignments[orig] = relabel[run.assignments[pos]];
    }
    Ok(KMeansResult {
        assignments,
        centroids,
        inertia: run.inertia,
        iterations: run.iterations,
        converged: run.converged,
        inertia_history: run.history,
    })
}
