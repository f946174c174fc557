//! Two-level task taxonomy: PCA projection, top-level k-means, then k-means
//! again inside each category. Labelling is left to the caller; this module
//! picks which members to show the labeller.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kmeans::{self, KMeansError};
use super::pca::{self, PcaError, ProjectionModel};
use crate::numeric::sub_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaxonomyConfig {
    pub out_dim: usize,
    pub categories: usize,
    pub subcategories: usize,
    pub label_sample: usize,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        TaxonomyConfig {
            out_dim: pca::DEFAULT_OUT_DIM,
            categories: 10,
            subcategories: 3,
            label_sample: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("{found} tasks; at least {required} are needed to fill every leaf cluster")]
    TooFewTasks { found: usize, required: usize },
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxonomyStructure {
    pub projection: ProjectionModel,
    /// Category per input task.
    pub category: Vec<usize>,
    /// Subcategory within the task's category.
    pub subcategory: Vec<usize>,
    /// Number of subcategories actually fitted per category.
    pub subcategory_counts: Vec<usize>,
    pub diagnostics: Vec<String>,
}

impl TaxonomyStructure {
    pub fn members(&self, category: usize) -> Vec<usize> {
        (0..self.category.len()).filter(|&i| self.category[i] == category).collect()
    }

    pub fn sub_members(&self, category: usize, sub: usize) -> Vec<usize> {
        (0..self.category.len())
            .filter(|&i| self.category[i] == category && self.subcategory[i] == sub)
            .collect()
    }
}

pub fn cluster_tasks(
    embeddings: &[Vec<f64>],
    config: TaxonomyConfig,
    seed: u64,
) -> Result<TaxonomyStructure, TaxonomyError> {
    let required = config.categories * config.subcategories;
    if embeddings.len() < required {
        return Err(TaxonomyError::TooFewTasks {
            found: embeddings.len(),
            required,
        });
    }
    let projection = pca::fit_pca(embeddings, config.out_dim)?;
    let projected = projection.project_all(embeddings);
    let top = kmeans::kmeans(&projected, config.categories, sub_seed(seed, "taxonomy-top"))?;

    let mut subcategory = alloc::vec![0; embeddings.len()];
    let mut subcategory_counts = Vec::with_capacity(config.categories);
    let mut diagnostics = Vec::new();
    for c in 0..config.categories {
        let idx: Vec<usize> = (0..embeddings.len()).filter(|&i| top.assignments[i] == c).collect();
        let pts: Vec<Vec<f64>> = idx.iter().map(|&i| projected[i].clone()).collect();
        let distinct = kmeans::distinct_count(&pts);
        let k = config.subcategories.min(distinct);
        if k < config.subcategories {
            diagnostics.push(format!(
                "category {c}: {distinct} distinct members, fitting {k} subcategories instead of {}",
                config.subcategories
            ));
        }
        let sub = kmeans::kmeans(&pts, k, sub_seed(seed, &format!("taxonomy-sub-{c}")))?;
        for (pos, &i) in idx.iter().enumerate() {
            subcategory[i] = sub.assignments[pos];
        }
        subcategory_counts.push(k);
    }
    Ok(TaxonomyStructure {
        projection,
        category: top.assignments,
        subcategory,
        subcategory_counts,
        diagnostics,
    })
}

/// Uniform sample of `min(max, n)` positions out of `0..n`, sorted.
pub fn sample_indices(n: usize, max: usize, seed: u64) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, max).into_vec();
    picked.sort_unstable();
    picked
}

/// Label used when the labeller fails.
pub fn placeholder_label(id: &str) -> String {
    format!("cluster-{id}")
}

pub fn category_id(category: usize) -> String {
    format!("{category}")
}

pub fn subcategory_id(category: usize, sub: usize) -> String {
    format!("{category}.{sub}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyAssignment {
    pub task_key: String,
    pub category_id: String,
    pub category_label: String,
    pub subcategory_id: String,
    pub subcategory_label: String,
}

/// Labelled taxonomy: one row per clustered task.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaskTaxonomy {
    pub assignments: Vec<TaxonomyAssignment>,
    pub labels: BTreeMap<String, String>,
}

impl TaskTaxonomy {
    /// Combine structure and labels. Missing labels fall back to the
    /// placeholder.
    pub fn assemble(keys: &[String], structure: &TaxonomyStructure, labels: &BTreeMap<String, String>) -> Self {
        let label_for = |id: &str| {
            labels
                .get(id)
                .filter(|l| !l.trim().is_empty())
                .cloned()
                .unwrap_or_else(|| placeholder_label(id))
        };
        let mut all_labels = BTreeMap::new();
        let assignments = keys
            .iter()
            .enumerate()
            .map(|(i, key)| {
                let cid = category_id(structure.category[i]);
                let sid = subcategory_id(structure.category[i], structure.subcategory[i]);
                let cl = label_for(&cid);
                let sl = label_for(&sid);
                all_labels.insert(cid.clone(), cl.clone());
                all_labels.insert(sid.clone(), sl.clone());
                TaxonomyAssignment {
                    task_key: key.clone(),
                    category_id: cid,
                    category_label: cl,
                    subcategory_id: sid,
                    subcategory_label: sl,
                }
            })
            .collect();
        TaskTaxonomy {
            assignments,
            labels: all_labels,
        }
    }
}
