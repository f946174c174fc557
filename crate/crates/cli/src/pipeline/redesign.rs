//! Redesign plans for a stratified sample of eligible roles.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use task_exposure_core::exposure::{TaskRecord, WEEKLY_HOURS};
use task_exposure_core::numeric::{self, sub_seed};
use task_exposure_core::redesign::{
    apply_augment_reorder, apply_focus, apply_new_tasks, automated_tasks, check_focus, forced_focus, freed_share,
    is_eligible, original_category_shares, plan_category_shares, proportional_baseline, stratified_sample,
    surviving_tasks, time_shift_report, PlanTask, PlanVariant, RedesignError, RoleTimeShift, ThemeSet,
    TimeShiftColumn,
};

use super::files::*;
use super::stages::{data_err, group_tasks, input, RoleTasks};
use super::{Output, PipelineError, Stage};
use crate::artifacts::{read_jsonl, write_jsonl, StageDir};
use crate::config::PipelineConfig;
use crate::corpus::Vacancy;
use crate::gateway::{Gateway, StructuredRequest};
use crate::prompts;
use crate::records::{
    PlanRow, PlanTaskRow, RedesignSampleRow, RoleRow, RoleWeightRow, TaxonomyRow, TimeShiftRow, WeightedTaskRow,
};

const FOCUS: &str = "focus";
const AUGMENT: &str = "augment";
const NEW_TASKS: &str = "new_tasks";
const THEMES: &str = "themes";

fn request_id(vacancy_id: &str, kind: &str) -> String {
    format!("{vacancy_id}#{kind}")
}

fn split_id(request_id: &str) -> (&str, &str) {
    request_id.rsplit_once('#').unwrap_or((request_id, ""))
}

fn numbered(tasks: &[TaskRecord], keep: &[u32]) -> Vec<(i64, String)> {
    tasks
        .iter()
        .filter(|t| keep.contains(&t.task_number))
        .map(|t| (i64::from(t.task_number), t.task_details.clone()))
        .collect()
}

fn borrowed(list: &[(i64, String)]) -> Vec<(i64, &str)> {
    list.iter().map(|(n, s)| (*n, s.as_str())).collect()
}

/// Structural check of a redesign answer against the role it was asked about.
fn check_answer(tasks: &RoleTasks, delta: f64, req: &StructuredRequest, v: &Value) -> Result<(), String> {
    let (id, kind) = split_id(&req.request_id);
    let Some((t, _)) = tasks.get(id) else {
        return Err(format!("unknown role `{id}`"));
    };
    let r: Result<(), RedesignError> = match kind {
        FOCUS => check_focus(t, prompts::decode_focus(v).0).map(|_| ()),
        AUGMENT => prompts::decode_augment(v).and_then(|items| apply_augment_reorder(t, &items, delta)).map(|_| ()),
        NEW_TASKS => prompts::decode_new_tasks(v).and_then(|items| apply_new_tasks(t, &items, delta)).map(|_| ()),
        THEMES => prompts::decode_themes(v).map(|_| ()),
        _ => Ok(()),
    };
    r.map_err(|e| e.to_string())
}

fn plan_rows(tasks: &[PlanTask]) -> Vec<PlanTaskRow> {
    tasks
        .iter()
        .map(|t| PlanTaskRow {
            task_number: t.task_number,
            task_details: t.task_details.clone(),
            weight: t.weight,
            label: t.label.map(|l| l.as_str().to_string()),
            category: t.category.map(|c| c.as_str().to_string()),
        })
        .collect()
}

pub(crate) fn run(cfg: &PipelineConfig, root: &Path, dir: &StageDir, gw: &Gateway) -> Result<Output, PipelineError> {
    let vacancies: Vec<Vacancy> = read_jsonl(&input(root, Stage::Ingest, VACANCIES))?;
    let roles: Vec<RoleRow> = read_jsonl(&input(root, Stage::Weight, ROLES))?;
    let task_rows: Vec<WeightedTaskRow> = read_jsonl(&input(root, Stage::Weight, TASK_WEIGHTS))?;
    let taxonomy: Vec<TaxonomyRow> = read_jsonl(&input(root, Stage::Cluster, TAXONOMY))?;
    let weights: Vec<RoleWeightRow> = read_jsonl(&input(root, Stage::Rake, ROLE_WEIGHTS))?;

    let vacancy: BTreeMap<&str, &Vacancy> = vacancies.iter().map(|v| (v.vacancy_id.as_str(), v)).collect();
    let pop: BTreeMap<&str, f64> = weights.iter().map(|w| (w.vacancy_id.as_str(), w.population_weight)).collect();
    let tasks = group_tasks(&task_rows);
    let mut category_of: BTreeMap<&str, BTreeMap<i64, String>> = BTreeMap::new();
    for t in &taxonomy {
        category_of
            .entry(t.vacancy_id.as_str())
            .or_default()
            .insert(i64::from(t.task_number), t.category_label.clone());
    }
    let (theta, delta) = (cfg.model.theta, cfg.model.delta);
    let rc = &cfg.redesign;
    let err = |e: RedesignError| data_err(Stage::Redesign, e);

    let eligible: Vec<&RoleRow> = roles
        .iter()
        .filter(|r| pop.contains_key(r.vacancy_id.as_str()) && is_eligible(&tasks[&r.vacancy_id].0, r.high_share, theta))
        .collect();
    let strata: Vec<(String, String)> = eligible.iter().map(|r| (r.department.clone(), r.grade.clone())).collect();
    let picks = if eligible.is_empty() {
        Vec::new()
    } else {
        stratified_sample(&strata, rc.sample_fraction, sub_seed(cfg.seed, "redesign-sample")).map_err(err)?
    };
    let sampled: Vec<&RoleRow> = picks.iter().map(|&i| eligible[i]).collect();
    let sample_rows: Vec<RedesignSampleRow> = sampled
        .iter()
        .map(|r| RedesignSampleRow {
            vacancy_id: r.vacancy_id.clone(),
            department: r.department.clone(),
            grade: r.grade.clone(),
            high_share: r.high_share,
        })
        .collect();

    let mut out = Output {
        files: vec![SAMPLE, PLANS, TIME_SHIFT],
        ..Output::default()
    };
    let mut reqs = Vec::new();
    let mut focus: BTreeMap<String, (u32, Option<String>)> = BTreeMap::new();
    for r in &sampled {
        let id = r.vacancy_id.as_str();
        let t = &tasks[id].0;
        let v = vacancy[id];
        let survivors = numbered(t, &surviving_tasks(t));
        let automated = numbered(t, &automated_tasks(t));
        let context_source = if v.job_description.trim().is_empty() { &v.job_summary } else { &v.job_description };
        let context = prompts::truncate_chars(context_source, rc.max_context_chars);
        if rc.focus {
            match forced_focus(t) {
                Some(only) => {
                    focus.insert(id.to_string(), (only, None));
                }
                None => reqs.push(prompts::focus_request(&request_id(id, FOCUS), &v.title, &borrowed(&survivors))),
            }
        }
        if rc.augment_reorder {
            reqs.push(prompts::augment_request(&request_id(id, AUGMENT), &v.title, &borrowed(&survivors), context));
        }
        if rc.new_tasks {
            reqs.push(prompts::new_tasks_request(
                &request_id(id, NEW_TASKS),
                &v.title,
                &v.department,
                context,
                &borrowed(&automated),
                &borrowed(&survivors),
            ));
        }
    }
    let check = |req: &StructuredRequest, v: &Value| check_answer(&tasks, delta, req, v);
    let batch = gw.submit_batch(&reqs, &check).map_err(|e| data_err(Stage::Redesign, e))?;
    let mut augment: BTreeMap<String, Vec<PlanTask>> = BTreeMap::new();
    let mut new_tasks: BTreeMap<String, Vec<PlanTask>> = BTreeMap::new();
    for r in batch.results {
        let resp = match r {
            Ok(resp) => resp,
            Err(f) => {
                out.failures.push(f);
                continue;
            }
        };
        let (id, kind) = split_id(&resp.request_id);
        let t = &tasks[id].0;
        match kind {
            FOCUS => {
                let (n, reasoning) = prompts::decode_focus(&resp.payload);
                focus.insert(id.to_string(), (check_focus(t, n).map_err(err)?, Some(reasoning)));
            }
            AUGMENT => {
                let items = prompts::decode_augment(&resp.payload).map_err(err)?;
                augment.insert(id.to_string(), apply_augment_reorder(t, &items, delta).map_err(err)?);
            }
            NEW_TASKS => {
                let items = prompts::decode_new_tasks(&resp.payload).map_err(err)?;
                new_tasks.insert(id.to_string(), apply_new_tasks(t, &items, delta).map_err(err)?);
            }
            _ => {}
        }
    }

    let theme_reqs: Vec<StructuredRequest> = focus
        .iter()
        .filter_map(|(id, (_, reasoning))| {
            reasoning
                .as_deref()
                .filter(|r| !r.is_empty())
                .map(|r| prompts::theme_request(&request_id(id, THEMES), r))
        })
        .collect();
    let batch = gw.submit_batch(&theme_reqs, &check).map_err(|e| data_err(Stage::Redesign, e))?;
    let mut themes: BTreeMap<String, ThemeSet> = BTreeMap::new();
    for r in batch.results {
        match r {
            Ok(resp) => {
                let (id, _) = split_id(&resp.request_id);
                themes.insert(id.to_string(), prompts::decode_themes(&resp.payload).map_err(err)?);
            }
            Err(f) => out.failures.push(f),
        }
    }

    let mut plans = Vec::new();
    let mut shifts = Vec::new();
    let mut freed = Vec::new();
    for r in &sampled {
        let id = r.vacancy_id.as_str();
        let (t, w) = &tasks[id];
        let automated = automated_tasks(t);
        let fs = freed_share(t, w);
        freed.push(fs);
        let empty = BTreeMap::new();
        let cats = category_of.get(id).unwrap_or(&empty);
        let mut shift = RoleTimeShift {
            weight: pop[id],
            columns: BTreeMap::new(),
        };
        shift.columns.insert(TimeShiftColumn::Pre, original_category_shares(t, w, cats));
        let baseline = proportional_baseline(t, w).map_err(err)?;
        shift.columns.insert(TimeShiftColumn::Proportional, plan_category_shares(&baseline, cats));
        let plan = |variant: PlanVariant, focus_task: Option<u32>, reasoning: Option<String>, themes: Vec<String>, tasks: &[PlanTask]| PlanRow {
            vacancy_id: id.to_string(),
            variant: variant.as_str().to_string(),
            automated: automated.clone(),
            freed_share: fs,
            focus_task,
            reasoning,
            themes,
            tasks: plan_rows(tasks),
        };
        if let Some((f, reasoning)) = focus.get(id) {
            let post = apply_focus(t, w, *f).map_err(err)?;
            let names = themes
                .get(id)
                .map(|s| s.themes().iter().map(|t| t.key().to_string()).collect())
                .unwrap_or_default();
            plans.push(plan(PlanVariant::Focus, Some(*f), reasoning.clone(), names, &post));
            shift.columns.insert(TimeShiftColumn::Focus, plan_category_shares(&post, cats));
        }
        if let Some(post) = augment.get(id) {
            plans.push(plan(PlanVariant::AugmentReorder, None, None, Vec::new(), post));
            shift.columns.insert(TimeShiftColumn::AugmentReorder, plan_category_shares(post, cats));
        }
        if let Some(post) = new_tasks.get(id) {
            plans.push(plan(PlanVariant::NewTasks, None, None, Vec::new(), post));
            shift.columns.insert(TimeShiftColumn::NewTasks, plan_category_shares(post, cats));
        }
        shifts.push(shift);
    }
    let report = time_shift_report(&shifts, WEEKLY_HOURS);
    let mut ts_rows = Vec::new();
    for cat in &report.categories {
        for &col in &report.columns {
            ts_rows.push(TimeShiftRow {
                category: cat.clone(),
                column: col.as_str().to_string(),
                share: report.share(cat, col),
                minutes: report.minutes(cat, col),
                delta_minutes: report.delta_minutes(cat, col),
            });
        }
    }

    write_jsonl(&dir.path(SAMPLE), &sample_rows)?;
    write_jsonl(&dir.path(PLANS), &plans)?;
    write_jsonl(&dir.path(TIME_SHIFT), &ts_rows)?;
    out.diagnostics.push(format!(
        "{} eligible roles at theta {theta}, {} sampled; {} focus, {} augment, {} new-task plans; {} themed",
        eligible.len(),
        sampled.len(),
        focus.len(),
        augment.len(),
        new_tasks.len(),
        themes.len()
    ));
    if let Some(m) = numeric::median(&freed) {
        out.diagnostics.push(format!("median freed share {m:.3}"));
    }
    Ok(out)
}
