//! Provider-free stages plus extraction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};

use task_exposure_core::exposure::{decay_weights, role_exposure, TaskRecord};
use task_exposure_core::numeric;
use task_exposure_core::raking::{
    append_other_depts, rake as ipf, scale_to_population, MarginalSet, RakeError, RakeOptions, SampleRow,
    WeightedSample, OTHER_DEPTS,
};
use task_exposure_core::savings::{decay_sensitivity, role_savings, sweep, RawRole, SavingsRole, SweepPoint};

use super::files::*;
use super::{Output, PipelineError, Stage};
use crate::artifacts::{read_jsonl, write_json, write_jsonl, StageDir};
use crate::config::PipelineConfig;
use crate::corpus::{join_salary, read_vacancies, ReferenceTables, SalaryLookup, Vacancy, Vocabulary};
use crate::extract::{extract_roles, ExtractConfig};
use crate::gateway::Gateway;
use crate::records::{
    ExtractStatus, RakeSummary, RoleRow, RoleSavingsRow, RoleWeightRow, SweepRow, TaskRow, WeightRow, WeightedTaskRow,
};

pub(crate) fn input(root: &Path, stage: Stage, file: &str) -> PathBuf {
    root.join(stage.as_str()).join(file)
}

pub(crate) fn data_err(stage: Stage, e: impl Display) -> PipelineError {
    PipelineError::Data {
        stage,
        message: e.to_string(),
    }
}

pub(crate) fn vocabulary(cfg: &PipelineConfig) -> Result<Vocabulary, PipelineError> {
    Ok(match &cfg.paths.vocabulary {
        Some(p) => Vocabulary::load(p)?,
        None => Vocabulary::default(),
    })
}

pub(crate) fn reference_tables(cfg: &PipelineConfig) -> Result<ReferenceTables, PipelineError> {
    let vocab = vocabulary(cfg)?;
    let p = &cfg.paths;
    Ok(ReferenceTables::load(&p.fte, &p.salary, &p.professions, cfg.raking.population_total, &vocab)?)
}

/// Ordered tasks and their decay weights per role, in file order.
pub(crate) type RoleTasks = BTreeMap<String, (Vec<TaskRecord>, Vec<f64>)>;

pub(crate) fn group_tasks(rows: &[WeightedTaskRow]) -> RoleTasks {
    let mut out: RoleTasks = BTreeMap::new();
    for r in rows {
        let e = out.entry(r.vacancy_id.clone()).or_default();
        e.0.push(TaskRecord {
            task_number: r.task_number,
            task_details: r.task_details.clone(),
            exposure: r.exposure,
            band: task_exposure_core::exposure::ExposureBand::parse(&r.band).expect("band written by this tool"),
            high: r.high,
        });
        e.1.push(r.weight);
    }
    out
}

pub(crate) fn ingest(cfg: &PipelineConfig, dir: &StageDir) -> Result<Output, PipelineError> {
    let grades = vocabulary(cfg)?.grade_map()?;
    let parsed = read_vacancies(&cfg.paths.corpus, &grades)?;
    if parsed.vacancies.is_empty() {
        return Err(data_err(Stage::Ingest, "no usable vacancies in the corpus"));
    }
    write_jsonl(&dir.path(VACANCIES), &parsed.vacancies)?;
    write_jsonl(&dir.path(INGEST_DIAGNOSTICS), &parsed.diagnostics)?;
    let unmapped = parsed.vacancies.iter().filter(|v| !v.grade.is_mapped()).count();
    Ok(Output {
        files: vec![VACANCIES, INGEST_DIAGNOSTICS],
        failures: Vec::new(),
        diagnostics: vec![format!(
            "{} vacancies kept, {} lines skipped, {unmapped} with unmapped grade",
            parsed.vacancies.len(),
            parsed.diagnostics.len()
        )],
    })
}

pub(crate) fn extract(cfg: &PipelineConfig, root: &Path, dir: &StageDir, gw: &Gateway) -> Result<Output, PipelineError> {
    let vacancies: Vec<Vacancy> = read_jsonl(&input(root, Stage::Ingest, VACANCIES))?;
    let ecfg = ExtractConfig {
        max_chars: cfg.model.max_description_chars,
        min_tasks: cfg.model.min_tasks,
    };
    let r = extract_roles(gw, &vacancies, ecfg).map_err(|e| data_err(Stage::Extract, e))?;
    write_jsonl(&dir.path(TASKS), &r.tasks)?;
    write_jsonl(&dir.path(OUTCOMES), &r.outcomes)?;
    let count = |s: ExtractStatus| r.outcomes.iter().filter(|o| o.status == s).count();
    let fallback = r.outcomes.iter().filter(|o| o.source.as_deref() == Some("summary")).count();
    Ok(Output {
        files: vec![TASKS, OUTCOMES],
        diagnostics: vec![
            format!(
                "{} roles extracted ({fallback} from summary), {} dropped, {} failed; {} tasks",
                count(ExtractStatus::Ok),
                count(ExtractStatus::Dropped),
                count(ExtractStatus::Failed),
                r.tasks.len()
            ),
            format!(
                "requests: {} submitted, {} provider calls, {} cache hits, {} input / {} output tokens",
                r.report.submitted,
                r.report.provider_calls,
                r.report.cache_hits,
                r.report.usage.input_tokens,
                r.report.usage.output_tokens
            ),
        ],
        failures: r.failures,
    })
}

fn salary_status(s: SalaryLookup) -> &'static str {
    match s {
        SalaryLookup::Found(_) => "found",
        SalaryLookup::Suppressed => "suppressed",
        SalaryLookup::Missing => "missing",
        SalaryLookup::UnmappedGrade => "unmapped_grade",
    }
}

pub(crate) fn weight(cfg: &PipelineConfig, root: &Path, dir: &StageDir) -> Result<Output, PipelineError> {
    let vacancies: Vec<Vacancy> = read_jsonl(&input(root, Stage::Ingest, VACANCIES))?;
    let tasks: Vec<TaskRow> = read_jsonl(&input(root, Stage::Extract, TASKS))?;
    let tables = reference_tables(cfg)?;
    let mut by_role: BTreeMap<&str, Vec<TaskRecord>> = BTreeMap::new();
    for t in &tasks {
        by_role.entry(&t.vacancy_id).or_default().push(t.to_record());
    }
    let delta = cfg.model.delta;
    let mut task_rows = Vec::new();
    let mut roles = Vec::new();
    let mut statuses: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &vacancies {
        let Some(records) = by_role.get(v.vacancy_id.as_str()) else {
            continue;
        };
        let lookup = join_salary(v, &tables);
        let salary = lookup.amount();
        let dw = decay_weights(records.len(), delta).map_err(|e| data_err(Stage::Weight, e))?;
        let e = role_exposure(records, &dw, salary).map_err(|e| data_err(Stage::Weight, format!("{}: {e}", v.vacancy_id)))?;
        for (i, t) in records.iter().enumerate() {
            task_rows.push(WeightedTaskRow {
                vacancy_id: v.vacancy_id.clone(),
                task_number: t.task_number,
                task_details: t.task_details.clone(),
                exposure: t.exposure,
                band: t.band.as_str().to_string(),
                high: t.high,
                weight: dw.normalized[i],
                hours: e.hours_per_task[i],
                value: e.value_per_task.as_ref().map(|v| v[i]),
            });
        }
        *statuses.entry(salary_status(lookup)).or_default() += 1;
        roles.push(RoleRow {
            vacancy_id: v.vacancy_id.clone(),
            title: v.title.clone(),
            department: v.department.clone(),
            grade: v.grade.as_str().to_string(),
            profession: v.profession.clone(),
            n_tasks: records.len(),
            weighted_mean: e.weighted_mean,
            weighted_std: e.weighted_std,
            high_share: e.high_share,
            medium_share: e.medium_share,
            salary,
            salary_status: salary_status(lookup).to_string(),
        });
    }
    if roles.is_empty() {
        return Err(data_err(Stage::Weight, "no role has extracted tasks"));
    }
    write_jsonl(&dir.path(TASK_WEIGHTS), &task_rows)?;
    write_jsonl(&dir.path(ROLES), &roles)?;
    let statuses: Vec<String> = statuses.iter().map(|(k, n)| format!("{k}={n}")).collect();
    Ok(Output {
        files: vec![TASK_WEIGHTS, ROLES],
        failures: Vec::new(),
        diagnostics: vec![format!("{} roles at delta {delta}; salary {}", roles.len(), statuses.join(" "))],
    })
}

fn rake_err(e: RakeError) -> PipelineError {
    let hint = if matches!(e, RakeError::EmptyCell { .. }) {
        "; merge the category into a neighbour in the reference tables or widen the sample"
    } else {
        ""
    };
    data_err(Stage::Rake, format!("{e}{hint}"))
}

pub(crate) fn rake(cfg: &PipelineConfig, root: &Path, dir: &StageDir) -> Result<Output, PipelineError> {
    let roles: Vec<RoleRow> = read_jsonl(&input(root, Stage::Weight, ROLES))?;
    let tables = reference_tables(cfg)?;
    let dept_totals = tables.department_totals();
    let grade_totals = tables.grade_totals();
    let prof_totals = tables.professions.clone();

    let mut dept_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &roles {
        *dept_counts.entry(&r.department).or_default() += 1;
    }
    let small: BTreeSet<&str> = dept_counts
        .into_iter()
        .filter(|(_, c)| *c < cfg.raking.min_department_vacancies)
        .map(|(d, _)| d)
        .collect();

    let mut excluded = Vec::new();
    let mut rows = Vec::new();
    for r in &roles {
        let reason = if r.grade == task_exposure_core::grade::GradeBucket::Unmapped.as_str() {
            Some("unmapped grade")
        } else if !dept_totals.contains_key(&r.department) {
            Some("department not in the FTE table")
        } else if small.contains(r.department.as_str()) {
            Some("department below min_department_vacancies")
        } else if !prof_totals.contains_key(&r.profession) {
            Some("profession not in the profession table")
        } else {
            None
        };
        match reason {
            Some(why) => excluded.push((r.vacancy_id.clone(), why.to_string())),
            None => rows.push(SampleRow::new(&r.vacancy_id, &r.department, &r.grade, &r.profession)),
        }
    }
    if rows.is_empty() {
        return Err(data_err(Stage::Rake, "every role was excluded from the sample"));
    }
    let sampled: BTreeSet<&str> = rows.iter().map(|r| r.department.as_str()).collect();
    let mut dept = BTreeMap::new();
    let mut other = 0.0;
    for (d, t) in &dept_totals {
        if sampled.contains(d.as_str()) {
            dept.insert(d.clone(), *t);
        } else {
            other += t;
        }
    }
    dept.insert(OTHER_DEPTS.to_string(), other);
    let n = tables.population_total;
    let marginals = MarginalSet::from_totals(dept, grade_totals, prof_totals, n).map_err(rake_err)?;
    let sample = append_other_depts(WeightedSample::new(rows), &marginals);
    let outcome = ipf(
        sample,
        &marginals,
        RakeOptions {
            tolerance: cfg.raking.tolerance,
            max_iterations: cfg.raking.max_iterations,
        },
    )
    .map_err(rake_err)?;
    let history = outcome.sample.history.clone();
    let scaled = scale_to_population(outcome.sample, n).map_err(rake_err)?;

    let mut cell_synthetic: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut cell_observed: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for r in &scaled.rows {
        let target = if r.synthetic { &mut cell_synthetic } else { &mut cell_observed };
        *target.entry((r.grade.as_str(), r.profession.as_str())).or_default() += r.weight;
    }
    let role_weights: Vec<RoleWeightRow> = scaled
        .rows
        .iter()
        .filter(|r| !r.synthetic)
        .map(|r| {
            let cell = (r.grade.as_str(), r.profession.as_str());
            let observed = cell_observed[&cell];
            let extra = cell_synthetic.get(&cell).copied().unwrap_or(0.0);
            let population_weight = if observed > 0.0 {
                r.weight + extra * r.weight / observed
            } else {
                r.weight
            };
            RoleWeightRow {
                vacancy_id: r.key.clone(),
                raked_weight: r.weight,
                population_weight,
            }
        })
        .collect();
    let weights: Vec<WeightRow> = scaled
        .rows
        .iter()
        .map(|r| WeightRow {
            key: r.key.clone(),
            department: r.department.clone(),
            grade: r.grade.clone(),
            profession: r.profession.clone(),
            weight: r.weight,
            synthetic: r.synthetic,
        })
        .collect();
    let summary = RakeSummary {
        iterations: outcome.iterations,
        converged: outcome.converged,
        last_change: outcome.last_change,
        marginal_residual: outcome.marginal_residual,
        history,
        population_total: n,
        total_weight: scaled.total_weight(),
        excluded,
    };
    write_jsonl(&dir.path(WEIGHTS), &weights)?;
    write_jsonl(&dir.path(ROLE_WEIGHTS), &role_weights)?;
    write_json(&dir.path(RAKE_SUMMARY), &summary)?;
    let mut diagnostics = vec![format!(
        "{} roles raked ({} excluded) in {} iterations, residual {:.2e}",
        role_weights.len(),
        summary.excluded.len(),
        summary.iterations,
        summary.marginal_residual
    )];
    if !summary.converged {
        diagnostics.push(format!(
            "did not converge within {} iterations (last change {:.2e})",
            cfg.raking.max_iterations, summary.last_change
        ));
    }
    Ok(Output {
        files: vec![WEIGHTS, ROLE_WEIGHTS, RAKE_SUMMARY],
        failures: Vec::new(),
        diagnostics,
    })
}

fn sweep_row(delta: f64, p: &SweepPoint) -> SweepRow {
    SweepRow {
        delta,
        theta: p.theta,
        cost_reduction: p.cost_reduction,
        productivity_gain: p.productivity_gain,
        productivity_upper: p.productivity_upper,
        ratio: p.ratio.to_string(),
        freed_hours: p.freed_hours,
        n_cost: p.n_cost,
        n_productivity: p.n_productivity,
        n_no_impact: p.n_no_impact,
        n_missing_salary: p.n_missing_salary,
    }
}

pub(crate) fn savings(cfg: &PipelineConfig, root: &Path, dir: &StageDir) -> Result<Output, PipelineError> {
    let roles: Vec<RoleRow> = read_jsonl(&input(root, Stage::Weight, ROLES))?;
    let task_rows: Vec<WeightedTaskRow> = read_jsonl(&input(root, Stage::Weight, TASK_WEIGHTS))?;
    let weights: Vec<RoleWeightRow> = read_jsonl(&input(root, Stage::Rake, ROLE_WEIGHTS))?;
    let pop: BTreeMap<&str, f64> = weights.iter().map(|w| (w.vacancy_id.as_str(), w.population_weight)).collect();
    let tasks = group_tasks(&task_rows);
    let theta = cfg.model.theta;
    let err = |e: task_exposure_core::savings::SavingsError| data_err(Stage::Savings, e);

    let weighted: Vec<(&RoleRow, f64)> = roles
        .iter()
        .filter_map(|r| pop.get(r.vacancy_id.as_str()).map(|w| (r, *w)))
        .collect();
    let sroles: Vec<SavingsRole> = weighted
        .iter()
        .map(|(r, _)| SavingsRole::new(r.vacancy_id.clone(), r.high_share, r.medium_share, r.salary))
        .collect();
    let w: Vec<f64> = weighted.iter().map(|(_, w)| *w).collect();
    let curve = sweep(&sroles, &w, &cfg.model.theta_grid).map_err(err)?;
    let sweep_rows: Vec<SweepRow> = curve.points.iter().map(|p| sweep_row(cfg.model.delta, p)).collect();

    let mut role_rows = Vec::new();
    for (r, weight) in &weighted {
        let s = role_savings(r.high_share, r.medium_share, r.salary, theta).map_err(err)?;
        role_rows.push(RoleSavingsRow {
            vacancy_id: r.vacancy_id.clone(),
            weight: *weight,
            high_share: r.high_share,
            medium_share: r.medium_share,
            salary: r.salary,
            class: s.class.as_str().to_string(),
            cost_reduction: s.cost_reduction,
            productivity_gain: s.productivity_gain,
            productivity_upper: s.productivity_upper,
            freed_hours: s.freed_hours,
        });
    }

    let raw: Vec<RawRole> = weighted
        .iter()
        .map(|(r, weight)| RawRole {
            key: r.vacancy_id.clone(),
            tasks: tasks[&r.vacancy_id].0.clone(),
            salary: r.salary,
            weight: *weight,
        })
        .collect();
    let mut thetas = cfg.model.theta_grid.clone();
    if !thetas.iter().any(|t| (t - theta).abs() < 1e-12) {
        thetas.push(theta);
        thetas.sort_by(f64::total_cmp);
    }
    let curves = decay_sensitivity(&raw, &cfg.model.sensitivity_deltas, &thetas).map_err(err)?;
    let sensitivity: Vec<SweepRow> = curves
        .iter()
        .flat_map(|(d, c)| c.points.iter().map(move |p| sweep_row(*d, p)))
        .collect();

    write_jsonl(&dir.path(ROLE_SAVINGS), &role_rows)?;
    write_jsonl(&dir.path(SWEEP), &sweep_rows)?;
    write_jsonl(&dir.path(SENSITIVITY), &sensitivity)?;
    let at = role_rows.iter().filter(|r| r.class == "cost_reduction").count();
    let c = numeric::sum(role_rows.iter().map(|r| r.weight * r.cost_reduction.unwrap_or(0.0)));
    let p = numeric::sum(role_rows.iter().map(|r| r.weight * r.productivity_gain.unwrap_or(0.0)));
    Ok(Output {
        files: vec![ROLE_SAVINGS, SWEEP, SENSITIVITY],
        failures: Vec::new(),
        diagnostics: vec![format!(
            "theta {theta}: {at} of {} roles cost-reduction; C = {c:.0}, P = {p:.0} ({} roles without raking weight left out)",
            role_rows.len(),
            roles.len() - weighted.len()
        )],
    })
}
