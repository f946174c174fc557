//! Exposure clusters over roles, and the labelled task taxonomy.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use task_exposure_core::clustering::taxonomy::{
    category_id, cluster_tasks, sample_indices, subcategory_id, TaskTaxonomy, TaxonomyStructure,
};
use task_exposure_core::clustering::text::normalize_text;
use task_exposure_core::clustering::{cluster_roles, ExposureCluster};
use task_exposure_core::numeric::sub_seed;

use super::files::*;
use super::stages::{data_err, input};
use super::{Output, PipelineError, Stage};
use crate::artifacts::{write_json, write_jsonl, read_jsonl, StageDir};
use crate::config::PipelineConfig;
use crate::gateway::{Failure, FailureClass, Gateway, ProviderError, StructuredRequest};
use crate::prompts;
use crate::records::{CentroidRow, ExposureClusterRow, ProjectionRecord, RoleRow, TaxonomyRow, WeightedTaskRow};

const LABEL_PREFIX: &str = "label:";

fn embed_failure(key: &str, e: &ProviderError, attempts: u32) -> Failure {
    let class = match e {
        ProviderError::Transport(_) => FailureClass::Transport,
        ProviderError::FixtureMiss(_) => FailureClass::FixtureMiss,
        _ => FailureClass::Rejected,
    };
    Failure {
        request_id: format!("{key}#embed"),
        class,
        message: e.to_string(),
        attempts,
    }
}

fn exposure_clusters(cfg: &PipelineConfig, roles: &[RoleRow], dir: &StageDir, out: &mut Output) -> Result<(), PipelineError> {
    let points: Vec<(f64, f64)> = roles.iter().map(|r| (r.weighted_mean, r.weighted_std)).collect();
    let (rows, centroids) = match cluster_roles(&points, sub_seed(cfg.seed, "exposure-clusters")) {
        Ok(c) => {
            let rows: Vec<ExposureClusterRow> = roles
                .iter()
                .zip(&c.assignments)
                .map(|(r, a)| ExposureClusterRow {
                    vacancy_id: r.vacancy_id.clone(),
                    cluster: a.as_str().to_string(),
                    weighted_mean: r.weighted_mean,
                    weighted_std: r.weighted_std,
                })
                .collect();
            let centroids: Vec<CentroidRow> = ExposureCluster::ALL
                .iter()
                .map(|k| CentroidRow {
                    cluster: k.as_str().to_string(),
                    mean: c.centroids[k.index()].0,
                    std: c.centroids[k.index()].1,
                    roles: c.sizes[k.index()],
                })
                .collect();
            out.diagnostics.push(format!("exposure clusters sizes {:?}, inertia {:.4}", c.sizes, c.inertia));
            (rows, centroids)
        }
        Err(e) => {
            out.diagnostics.push(format!("exposure clustering skipped: {e}"));
            (Vec::new(), Vec::new())
        }
    };
    write_jsonl(&dir.path(EXPOSURE_CLUSTERS), &rows)?;
    write_jsonl(&dir.path(CENTROIDS), &centroids)?;
    Ok(())
}

struct Member {
    key: String,
    vacancy_id: String,
    task_number: u32,
    details: String,
    normalized: String,
}

fn label_requests(cfg: &PipelineConfig, s: &TaxonomyStructure, members: &[Member]) -> Vec<StructuredRequest> {
    let max = cfg.clusters.label_sample;
    let mut reqs = Vec::new();
    let mut push = |id: String, idx: Vec<usize>| {
        let picked = sample_indices(idx.len(), max, sub_seed(cfg.seed, &format!("label-{id}")));
        let texts: Vec<&str> = picked.iter().map(|&p| members[idx[p]].details.as_str()).collect();
        reqs.push(prompts::label_request(&format!("{LABEL_PREFIX}{id}"), &texts));
    };
    for c in 0..s.subcategory_counts.len() {
        push(category_id(c), s.members(c));
        for sub in 0..s.subcategory_counts[c] {
            push(subcategory_id(c, sub), s.sub_members(c, sub));
        }
    }
    reqs
}

fn non_empty_label(_: &StructuredRequest, v: &Value) -> Result<(), String> {
    if prompts::decode_label(v).is_empty() {
        Err("empty label".into())
    } else {
        Ok(())
    }
}

fn taxonomy(cfg: &PipelineConfig, tasks: &[WeightedTaskRow], gw: &Gateway, dir: &StageDir, out: &mut Output) -> Result<(), PipelineError> {
    let mut candidates = Vec::new();
    for t in tasks {
        let n = normalize_text(&t.task_details);
        let key = format!("{}#{}", t.vacancy_id, t.task_number);
        if n.empty {
            out.diagnostics.push(format!("{key}: nothing left after normalisation; not clustered"));
            continue;
        }
        candidates.push(Member {
            key,
            vacancy_id: t.vacancy_id.clone(),
            task_number: t.task_number,
            details: t.task_details.clone(),
            normalized: n.text,
        });
    }
    let texts: Vec<String> = candidates.iter().map(|m| m.normalized.clone()).collect();
    let mut members = Vec::new();
    let mut vectors = Vec::new();
    for (m, r) in candidates.into_iter().zip(gw.embed(&texts)) {
        match r {
            Ok(v) => {
                members.push(m);
                vectors.push(v);
            }
            Err(e) => out.failures.push(embed_failure(&m.key, &e, gw.policy().max_attempts)),
        }
    }

    let tcfg = cfg.clusters.taxonomy();
    let required = tcfg.categories * tcfg.subcategories;
    let mut rows: Vec<TaxonomyRow> = Vec::new();
    let mut labels = BTreeMap::new();
    let mut projection: Option<ProjectionRecord> = None;
    if members.len() < required {
        out.diagnostics.push(format!(
            "taxonomy skipped: {} embedded tasks, {required} needed for {} x {} clusters",
            members.len(),
            tcfg.categories,
            tcfg.subcategories
        ));
    } else {
        let s = cluster_tasks(&vectors, tcfg, sub_seed(cfg.seed, "taxonomy")).map_err(|e| data_err(Stage::Cluster, e))?;
        out.diagnostics.extend(s.diagnostics.iter().cloned());
        let reqs = label_requests(cfg, &s, &members);
        let outcome = gw.submit_batch(&reqs, &non_empty_label).map_err(|e| data_err(Stage::Cluster, e))?;
        for r in outcome.results {
            match r {
                Ok(resp) => {
                    let id = resp.request_id.trim_start_matches(LABEL_PREFIX).to_string();
                    labels.insert(id, prompts::decode_label(&resp.payload));
                }
                Err(f) => out.failures.push(f),
            }
        }
        let keys: Vec<String> = members.iter().map(|m| m.key.clone()).collect();
        let tax = TaskTaxonomy::assemble(&keys, &s, &labels);
        labels = tax.labels.clone();
        rows = members
            .iter()
            .zip(tax.assignments)
            .map(|(m, a)| TaxonomyRow {
                task_key: a.task_key,
                vacancy_id: m.vacancy_id.clone(),
                task_number: m.task_number,
                normalized: m.normalized.clone(),
                category_id: a.category_id,
                category_label: a.category_label,
                subcategory_id: a.subcategory_id,
                subcategory_label: a.subcategory_label,
            })
            .collect();
        let p = &s.projection;
        out.diagnostics.push(format!(
            "taxonomy over {} tasks; {} components explain {:.1}% of variance",
            members.len(),
            p.output_dim(),
            100.0 * p.explained_variance_ratio.iter().sum::<f64>()
        ));
        projection = Some(ProjectionRecord {
            input_dim: p.input_dim(),
            mean: p.mean.clone(),
            components: p.components.clone(),
            explained_variance: p.explained_variance.clone(),
            explained_variance_ratio: p.explained_variance_ratio.clone(),
        });
    }
    write_jsonl(&dir.path(TAXONOMY), &rows)?;
    write_json(&dir.path(LABELS), &labels)?;
    write_json(&dir.path(PROJECTION), &projection)?;
    Ok(())
}

pub(crate) fn run(cfg: &PipelineConfig, root: &Path, dir: &StageDir, gw: &Gateway) -> Result<Output, PipelineError> {
    let roles: Vec<RoleRow> = read_jsonl(&input(root, Stage::Weight, ROLES))?;
    let tasks: Vec<WeightedTaskRow> = read_jsonl(&input(root, Stage::Weight, TASK_WEIGHTS))?;
    let mut out = Output {
        files: vec![EXPOSURE_CLUSTERS, CENTROIDS, TAXONOMY, LABELS, PROJECTION],
        ..Output::default()
    };
    exposure_clusters(cfg, &roles, dir, &mut out)?;
    taxonomy(cfg, &tasks, gw, dir, &mut out)?;
    Ok(out)
}
