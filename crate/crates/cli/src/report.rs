//! Delimited tables and plot-ready series built from stage artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use task_exposure_core::clustering::ExposureCluster;
use task_exposure_core::exposure::ExposureBand;
use task_exposure_core::numeric;
use task_exposure_core::redesign::{decile_cutpoints, decile_of, Theme, TimeShiftColumn, UNCATEGORIZED};

use crate::artifacts::{read_json, read_jsonl, ArtifactError, StageDir};
use crate::config::PipelineConfig;
use crate::pipeline::files::*;
use crate::pipeline::{PipelineError, Stage};
use crate::records::{
    ExposureClusterRow, PlanRow, RakeSummary, RoleRow, RoleWeightRow, SweepRow, TaxonomyRow, TimeShiftRow,
    WeightedTaskRow,
};

pub const EXPOSURE_HISTOGRAM: &str = "exposure_histogram.csv";
pub const TASK_BANDS: &str = "task_bands.csv";
pub const ROLE_EXPOSURE: &str = "role_exposure.csv";
pub const CLUSTER_SUMMARY: &str = "cluster_summary.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const DECAY_SENSITIVITY: &str = "decay_sensitivity.csv";
pub const DECAY_CURVES: &str = "decay_curves.csv";
pub const TIME_SHIFT_CSV: &str = "time_shift.csv";
pub const TIME_SHIFT_MINUTES: &str = "time_shift_minutes.csv";
pub const THEMES_CSV: &str = "themes.csv";
pub const TAXONOMY_CSV: &str = "taxonomy.csv";
pub const FOCUS_DECILES: &str = "focus_deciles.csv";
pub const RAKE_HISTORY: &str = "rake_history.csv";

pub const TIME_SHIFT_HEADER: [&str; 6] = [
    "Task Category",
    "Pre-automation",
    "Post-automation",
    "Focus Task",
    "Augment + Reorder",
    "New Tasks Added",
];

pub const CLUSTER_HEADER: [&str; 6] = [
    "Cluster",
    "Mean Exposure",
    "Mean Std Exposure",
    "Highest Exposure",
    "Lowest Exposure",
    "Roles",
];

fn write_csv(dir: &StageDir, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), PipelineError> {
    let path = dir.path(name);
    let io = |e: csv::Error| ArtifactError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn money(x: f64) -> String {
    format!("{x:.0}")
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn load<T: serde::de::DeserializeOwned>(root: &Path, stage: Stage, file: &str) -> Result<Vec<T>, PipelineError> {
    Ok(read_jsonl(&root.join(stage.as_str()).join(file))?)
}

fn exposure_tables(dir: &StageDir, tasks: &[WeightedTaskRow]) -> Result<(), PipelineError> {
    let mut bins = [0usize; 10];
    for t in tasks {
        bins[((t.exposure * 10.0).floor() as usize).min(9)] += 1;
    }
    let n = tasks.len().max(1) as f64;
    let rows: Vec<Vec<String>> = bins
        .iter()
        .enumerate()
        .map(|(i, c)| vec![format!("{:.1}", i as f64 / 10.0), format!("{:.1}", (i + 1) as f64 / 10.0), c.to_string(), f6(*c as f64 / n)])
        .collect();
    write_csv(dir, EXPOSURE_HISTOGRAM, &["bin_lower", "bin_upper", "tasks", "share"], &rows)?;

    let bands = [ExposureBand::VeryLow, ExposureBand::Low, ExposureBand::Medium, ExposureBand::High];
    let roles: BTreeSet<&str> = tasks.iter().map(|t| t.vacancy_id.as_str()).collect();
    let rows: Vec<Vec<String>> = bands
        .iter()
        .map(|b| {
            let of_band: Vec<&WeightedTaskRow> = tasks.iter().filter(|t| t.band == b.as_str()).collect();
            let time = numeric::sum(of_band.iter().map(|t| t.weight)) / roles.len().max(1) as f64;
            vec![b.as_str().to_string(), of_band.len().to_string(), f6(of_band.len() as f64 / n), f6(time)]
        })
        .collect();
    write_csv(dir, TASK_BANDS, &["band", "tasks", "task_share", "mean_time_share"], &rows)
}

fn role_tables(
    dir: &StageDir,
    roles: &[RoleRow],
    clusters: &[ExposureClusterRow],
    weights: &BTreeMap<&str, f64>,
) -> Result<(), PipelineError> {
    let cluster_of: BTreeMap<&str, &str> = clusters.iter().map(|c| (c.vacancy_id.as_str(), c.cluster.as_str())).collect();
    let rows: Vec<Vec<String>> = roles
        .iter()
        .map(|r| {
            vec![
                r.vacancy_id.clone(),
                r.department.clone(),
                r.grade.clone(),
                r.profession.clone(),
                r.n_tasks.to_string(),
                f6(r.weighted_mean),
                f6(r.weighted_std),
                f6(r.high_share),
                f6(r.medium_share),
                cluster_of.get(r.vacancy_id.as_str()).unwrap_or(&"").to_string(),
                weights.get(r.vacancy_id.as_str()).map(|w| f6(*w)).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        dir,
        ROLE_EXPOSURE,
        &[
            "vacancy_id",
            "department",
            "grade",
            "profession",
            "n_tasks",
            "weighted_mean",
            "weighted_std",
            "high_share",
            "medium_share",
            "cluster",
            "population_weight",
        ],
        &rows,
    )?;

    let mut rows = Vec::new();
    for k in ExposureCluster::ALL {
        let members: Vec<&ExposureClusterRow> = clusters.iter().filter(|c| c.cluster == k.as_str()).collect();
        if members.is_empty() {
            continue;
        }
        let n = members.len() as f64;
        let means: Vec<f64> = members.iter().map(|c| c.weighted_mean).collect();
        rows.push(vec![
            k.as_str().to_string(),
            f6(numeric::sum(means.iter().copied()) / n),
            f6(numeric::sum(members.iter().map(|c| c.weighted_std)) / n),
            f6(means.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            f6(means.iter().copied().fold(f64::INFINITY, f64::min)),
            members.len().to_string(),
        ]);
    }
    write_csv(dir, CLUSTER_SUMMARY, &CLUSTER_HEADER, &rows)
}

fn sweep_cells(s: &SweepRow) -> Vec<String> {
    vec![
        format!("{:.2}", s.theta),
        money(s.cost_reduction),
        money(s.productivity_gain),
        money(s.productivity_upper),
        s.ratio.clone(),
        s.n_cost.to_string(),
        s.n_productivity.to_string(),
        s.n_no_impact.to_string(),
        format!("{:.2}", s.freed_hours),
        s.n_missing_salary.to_string(),
    ]
}

const SWEEP_HEADER: [&str; 10] = [
    "theta",
    "C",
    "P",
    "P_upper",
    "ratio",
    "n_cost",
    "n_prod",
    "n_noimpact",
    "freed_hours",
    "n_missing_salary",
];

fn delta_label(d: f64, baseline: f64) -> String {
    if (d - baseline).abs() < 1e-12 {
        format!("{d} (Baseline)")
    } else if (d - 1.0).abs() < 1e-12 {
        format!("{d} (Equal)")
    } else if d < baseline {
        format!("{d} (High)")
    } else {
        format!("{d} (Low)")
    }
}

fn change(new: f64, base: f64) -> String {
    if base == 0.0 {
        "n/a".into()
    } else {
        pct((new - base) / base)
    }
}

fn savings_tables(dir: &StageDir, cfg: &PipelineConfig, sweep: &[SweepRow], sensitivity: &[SweepRow]) -> Result<(), PipelineError> {
    let rows: Vec<Vec<String>> = sweep.iter().map(sweep_cells).collect();
    write_csv(dir, SWEEP_CSV, &SWEEP_HEADER, &rows)?;

    let mut header = vec!["delta".to_string()];
    header.extend(SWEEP_HEADER.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = sensitivity
        .iter()
        .map(|s| {
            let mut r = vec![s.delta.to_string()];
            r.extend(sweep_cells(s));
            r
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(dir, DECAY_CURVES, &header_refs, &rows)?;

    let theta = cfg.model.theta;
    let baseline = cfg.model.delta;
    let at = |d: f64| {
        sensitivity
            .iter()
            .find(|s| (s.delta - d).abs() < 1e-12 && (s.theta - theta).abs() < 1e-12)
    };
    let mut deltas: Vec<f64> = Vec::new();
    for s in sensitivity {
        if !deltas.iter().any(|d| (d - s.delta).abs() < 1e-12) {
            deltas.push(s.delta);
        }
    }
    let Some(base) = at(baseline) else {
        // Without the baseline δ in the sensitivity set there is nothing to compare against.
        return write_csv(dir, DECAY_SENSITIVITY, &["Saving Type"], &[]);
    };
    let others: Vec<f64> = deltas.into_iter().filter(|d| (d - baseline).abs() >= 1e-12).collect();
    let mut header = vec!["Saving Type".to_string(), delta_label(baseline, baseline)];
    for d in &others {
        header.push(delta_label(*d, baseline));
        header.push("% change".into());
    }
    let mut rows = Vec::new();
    for (name, get) in [
        ("Potential Cost Reduction", (|s: &SweepRow| s.cost_reduction) as fn(&SweepRow) -> f64),
        ("Productivity Gain", |s: &SweepRow| s.productivity_gain),
    ] {
        let mut row = vec![name.to_string(), money(get(base))];
        for d in &others {
            let v = at(*d).map(get).unwrap_or(f64::NAN);
            row.push(money(v));
            row.push(change(v, get(base)));
        }
        rows.push(row);
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(dir, DECAY_SENSITIVITY, &header_refs, &rows)
}

fn column_of(name: &str) -> Option<TimeShiftColumn> {
    TimeShiftColumn::ALL.into_iter().find(|c| c.as_str() == name)
}

fn time_shift_tables(dir: &StageDir, shift: &[TimeShiftRow]) -> Result<(), PipelineError> {
    let mut categories: Vec<&str> = Vec::new();
    for r in shift {
        if !categories.contains(&r.category.as_str()) {
            categories.push(&r.category);
        }
    }
    let mut rows = Vec::new();
    for cat in &categories {
        let mut row = vec![cat.to_string()];
        for col in TimeShiftColumn::ALL {
            let cell = shift
                .iter()
                .find(|r| r.category == *cat && column_of(&r.column) == Some(col))
                .map(|r| pct(r.share))
                .unwrap_or_default();
            row.push(cell);
        }
        rows.push(row);
    }
    write_csv(dir, TIME_SHIFT_CSV, &TIME_SHIFT_HEADER, &rows)?;
    let rows: Vec<Vec<String>> = shift
        .iter()
        .map(|r| {
            vec![
                r.category.clone(),
                r.column.clone(),
                format!("{:.0}", r.minutes),
                format!("{:.0}", r.delta_minutes),
            ]
        })
        .collect();
    write_csv(dir, TIME_SHIFT_MINUTES, &["category", "column", "minutes_per_week", "delta_minutes"], &rows)
}

fn theme_table(dir: &StageDir, plans: &[PlanRow]) -> Result<(), PipelineError> {
    let tagged: Vec<&PlanRow> = plans.iter().filter(|p| !p.themes.is_empty()).collect();
    let n = tagged.len();
    let rows: Vec<Vec<String>> = Theme::ALL
        .iter()
        .map(|t| {
            let c = tagged.iter().filter(|p| p.themes.iter().any(|k| k == t.key())).count();
            let share = if n == 0 { 0.0 } else { c as f64 / n as f64 };
            vec![t.title().to_string(), c.to_string(), pct(share)]
        })
        .collect();
    write_csv(dir, THEMES_CSV, &["Theme", "Roles", "Share (%)"], &rows)
}

fn taxonomy_table(dir: &StageDir, taxonomy: &[TaxonomyRow]) -> Result<(), PipelineError> {
    let mut counts: BTreeMap<(&str, &str, &str, &str), usize> = BTreeMap::new();
    for t in taxonomy {
        *counts
            .entry((&t.category_id, &t.category_label, &t.subcategory_id, &t.subcategory_label))
            .or_default() += 1;
    }
    let rows: Vec<Vec<String>> = counts
        .iter()
        .map(|((c, cl, s, sl), n)| vec![c.to_string(), cl.to_string(), s.to_string(), sl.to_string(), n.to_string()])
        .collect();
    write_csv(dir, TAXONOMY_CSV, &["category_id", "category_label", "subcategory_id", "subcategory_label", "tasks"], &rows)
}

/// Focus-task categories by salary decile of the weighted sample.
fn focus_decile_table(
    dir: &StageDir,
    roles: &[RoleRow],
    weights: &BTreeMap<&str, f64>,
    plans: &[PlanRow],
    taxonomy: &[TaxonomyRow],
) -> Result<(), PipelineError> {
    let salaried: Vec<(&RoleRow, f64, f64)> = roles
        .iter()
        .filter_map(|r| Some((r, r.salary?, *weights.get(r.vacancy_id.as_str())?)))
        .collect();
    let salaries: Vec<f64> = salaried.iter().map(|s| s.1).collect();
    let w: Vec<f64> = salaried.iter().map(|s| s.2).collect();
    let mut rows = Vec::new();
    if let Some(cuts) = decile_cutpoints(&salaries, &w) {
        let category: BTreeMap<(&str, i64), &str> = taxonomy
            .iter()
            .map(|t| ((t.vacancy_id.as_str(), i64::from(t.task_number)), t.category_label.as_str()))
            .collect();
        let info: BTreeMap<&str, (f64, f64)> = salaried.iter().map(|(r, s, w)| (r.vacancy_id.as_str(), (*s, *w))).collect();
        let mut cells: BTreeMap<(usize, &str), f64> = BTreeMap::new();
        let mut totals: BTreeMap<usize, f64> = BTreeMap::new();
        for p in plans.iter().filter(|p| p.variant == "focus") {
            let (Some(f), Some((salary, weight))) = (p.focus_task, info.get(p.vacancy_id.as_str())) else {
                continue;
            };
            let d = decile_of(*salary, &cuts);
            let cat = category.get(&(p.vacancy_id.as_str(), i64::from(f))).copied().unwrap_or(UNCATEGORIZED);
            *cells.entry((d, cat)).or_default() += weight;
            *totals.entry(d).or_default() += weight;
        }
        for ((d, cat), w) in &cells {
            rows.push(vec![d.to_string(), cat.to_string(), f6(*w), pct(w / totals[d])]);
        }
    }
    write_csv(dir, FOCUS_DECILES, &["decile", "focus_category", "weight", "share_of_decile (%)"], &rows)
}

pub(crate) fn run(cfg: &PipelineConfig, root: &Path, dir: &StageDir) -> Result<crate::pipeline::Output, PipelineError> {
    let tasks: Vec<WeightedTaskRow> = load(root, Stage::Weight, TASK_WEIGHTS)?;
    let roles: Vec<RoleRow> = load(root, Stage::Weight, ROLES)?;
    let clusters: Vec<ExposureClusterRow> = load(root, Stage::Cluster, EXPOSURE_CLUSTERS)?;
    let taxonomy: Vec<TaxonomyRow> = load(root, Stage::Cluster, TAXONOMY)?;
    let role_weights: Vec<RoleWeightRow> = load(root, Stage::Rake, ROLE_WEIGHTS)?;
    let summary: RakeSummary = read_json(&root.join(Stage::Rake.as_str()).join(RAKE_SUMMARY))?;
    let sweep: Vec<SweepRow> = load(root, Stage::Savings, SWEEP)?;
    let sensitivity: Vec<SweepRow> = load(root, Stage::Savings, SENSITIVITY)?;
    let plans: Vec<PlanRow> = load(root, Stage::Redesign, PLANS)?;
    let shift: Vec<TimeShiftRow> = load(root, Stage::Redesign, TIME_SHIFT)?;
    let weights: BTreeMap<&str, f64> = role_weights.iter().map(|w| (w.vacancy_id.as_str(), w.population_weight)).collect();

    exposure_tables(dir, &tasks)?;
    role_tables(dir, &roles, &clusters, &weights)?;
    savings_tables(dir, cfg, &sweep, &sensitivity)?;
    time_shift_tables(dir, &shift)?;
    theme_table(dir, &plans)?;
    taxonomy_table(dir, &taxonomy)?;
    focus_decile_table(dir, &roles, &weights, &plans, &taxonomy)?;
    let rows: Vec<Vec<String>> = summary
        .history
        .iter()
        .enumerate()
        .map(|(i, c)| vec![(i + 1).to_string(), format!("{c:e}")])
        .collect();
    write_csv(dir, RAKE_HISTORY, &["iteration", "max_relative_change"], &rows)?;
    Ok(crate::pipeline::Output {
        files: vec![
            EXPOSURE_HISTOGRAM,
            TASK_BANDS,
            ROLE_EXPOSURE,
            CLUSTER_SUMMARY,
            SWEEP_CSV,
            DECAY_SENSITIVITY,
            DECAY_CURVES,
            TIME_SHIFT_CSV,
            TIME_SHIFT_MINUTES,
            THEMES_CSV,
            TAXONOMY_CSV,
            FOCUS_DECILES,
            RAKE_HISTORY,
        ],
        failures: Vec::new(),
        diagnostics: vec![format!("{} plans, {} sweep points reported", plans.len(), sweep.len())],
    })
}
