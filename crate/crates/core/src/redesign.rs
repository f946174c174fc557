//! Role redesign plans and the checks applied to provider answers.
//!
//! Every variant starts from a role's ordered tasks and its positional
//! weights. High-exposure tasks are treated as automated; the variants differ
//! in where the freed time goes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exposure::{self, ExposureError, TaskRecord, WEEKLY_HOURS};
use crate::numeric::{self, sub_seed, CompensatedSum};

pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.10;
pub const MAX_THEMES: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RedesignError {
    #[error("role has no automated tasks")]
    NothingAutomated,
    #[error("role has no surviving tasks")]
    NothingSurvives,
    #[error("task {0} does not exist in the role")]
    UnknownTask(i64),
    #[error("task {0} is automated and cannot be kept")]
    AutomatedTask(i64),
    #[error("task {0} appears more than once")]
    DuplicateTask(i64),
    #[error("surviving tasks missing from the answer: {0:?}")]
    MissingTasks(Vec<u32>),
    #[error("{proposed} new tasks proposed, at most {cap} allowed")]
    TooManyNewTasks { proposed: usize, cap: usize },
    #[error("new task number {0} must be negative")]
    NewTaskNotNegative(i64),
    #[error("{0} themes set; between 1 and 3 are allowed")]
    ThemeCount(usize),
    #[error("unknown task category `{0}`")]
    UnknownCategory(String),
    #[error("unknown augmentation label `{0}`")]
    UnknownLabel(String),
    #[error("sample fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error(transparent)]
    Exposure(#[from] ExposureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Theme {
    StrategicLeadershipAndVision,
    StakeholderManagementAndCommunication,
    RiskAndQualityManagement,
    InnovationAndProcessExcellence,
    HumanCentricLeadership,
    ComplexProblemResolution,
}

impl Theme {
    pub const ALL: [Theme; 6] = [
        Theme::StrategicLeadershipAndVision,
        Theme::StakeholderManagementAndCommunication,
        Theme::RiskAndQualityManagement,
        Theme::InnovationAndProcessExcellence,
        Theme::HumanCentricLeadership,
        Theme::ComplexProblemResolution,
    ];

    /// Field name used in provider answers.
    pub fn key(self) -> &'static str {
        match self {
            Theme::StrategicLeadershipAndVision => "strategic_leadership_and_vision",
            Theme::StakeholderManagementAndCommunication => "stakeholder_management_and_communication",
            Theme::RiskAndQualityManagement => "risk_and_quality_management",
            Theme::InnovationAndProcessExcellence => "innovation_and_process_excellence",
            Theme::HumanCentricLeadership => "human_centric_leadership",
            Theme::ComplexProblemResolution => "complex_problem_resolution",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Theme::StrategicLeadershipAndVision => "Strategic Leadership and Vision",
            Theme::StakeholderManagementAndCommunication => "Stakeholder Management and Communication",
            Theme::RiskAndQualityManagement => "Risk and Quality Management",
            Theme::InnovationAndProcessExcellence => "Innovation and Process Excellence",
            Theme::HumanCentricLeadership => "Human-Centric Leadership",
            Theme::ComplexProblemResolution => "Complex Problem Resolution",
        }
    }
}

/// One to three reasoning themes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThemeSet([bool; 6]);

impl ThemeSet {
    pub fn from_flags(flags: [bool; 6]) -> Result<Self, RedesignError> {
        let n = flags.iter().filter(|f| **f).count();
        if n == 0 || n > MAX_THEMES {
            return Err(RedesignError::ThemeCount(n));
        }
        Ok(ThemeSet(flags))
    }

    pub fn from_themes(themes: &[Theme]) -> Result<Self, RedesignError> {
        let mut flags = [false; 6];
        for t in themes {
            flags[*t as usize] = true;
        }
        Self::from_flags(flags)
    }

    pub fn flags(&self) -> [bool; 6] {
        self.0
    }

    pub fn contains(&self, theme: Theme) -> bool {
        self.0[theme as usize]
    }

    pub fn themes(&self) -> Vec<Theme> {
        Theme::ALL.iter().copied().filter(|t| self.contains(*t)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|f| **f).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Share of tagged reasonings carrying each theme. Shares can sum past 1
/// since a reasoning may carry several themes.
pub fn theme_shares(sets: &[ThemeSet]) -> [f64; 6] {
    let mut out = [0.0; 6];
    if sets.is_empty() {
        return out;
    }
    for s in sets {
        for (o, f) in out.iter_mut().zip(s.0) {
            if f {
                *o += 1.0;
            }
        }
    }
    for o in &mut out {
        *o /= sets.len() as f64;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskCategory {
    PolicyDevelopment,
    RecordsManagement,
    AdminSupport,
    TeamLeadership,
    PerformancePlanning,
    StakeholderEngagement,
    RiskManagement,
    DataAnalysis,
    ServiceDelivery,
    PrisonManagement,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 10] = [
        TaskCategory::PolicyDevelopment,
        TaskCategory::RecordsManagement,
        TaskCategory::AdminSupport,
        TaskCategory::TeamLeadership,
        TaskCategory::PerformancePlanning,
        TaskCategory::StakeholderEngagement,
        TaskCategory::RiskManagement,
        TaskCategory::DataAnalysis,
        TaskCategory::ServiceDelivery,
        TaskCategory::PrisonManagement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskCategory::PolicyDevelopment => "policy_development",
            TaskCategory::RecordsManagement => "records_management",
            TaskCategory::AdminSupport => "admin_support",
            TaskCategory::TeamLeadership => "team_leadership",
            TaskCategory::PerformancePlanning => "performance_planning",
            TaskCategory::StakeholderEngagement => "stakeholder_engagement",
            TaskCategory::RiskManagement => "risk_management",
            TaskCategory::DataAnalysis => "data_analysis",
            TaskCategory::ServiceDelivery => "service_delivery",
            TaskCategory::PrisonManagement => "prison_management",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TaskCategory::PolicyDevelopment => "Policy Development",
            TaskCategory::RecordsManagement => "Records Management",
            TaskCategory::AdminSupport => "Admin Support",
            TaskCategory::TeamLeadership => "Team Leadership",
            TaskCategory::PerformancePlanning => "Performance Planning",
            TaskCategory::StakeholderEngagement => "Stakeholder Engagement",
            TaskCategory::RiskManagement => "Risk Management",
            TaskCategory::DataAnalysis => "Data Analysis",
            TaskCategory::ServiceDelivery => "Service Delivery",
            TaskCategory::PrisonManagement => "Prison Management",
        }
    }

    pub fn parse(s: &str) -> Result<Self, RedesignError> {
        TaskCategory::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| RedesignError::UnknownCategory(s.to_string()))
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentLabel {
    NoChange,
    Augmented,
}

impl AugmentLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AugmentLabel::NoChange => "No change",
            AugmentLabel::Augmented => "Augmented",
        }
    }

    pub fn parse(s: &str) -> Result<Self, RedesignError> {
        match s {
            "No change" => Ok(AugmentLabel::NoChange),
            "Augmented" => Ok(AugmentLabel::Augmented),
            other => Err(RedesignError::UnknownLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlanVariant {
    Focus,
    AugmentReorder,
    NewTasks,
}

impl PlanVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanVariant::Focus => "focus",
            PlanVariant::AugmentReorder => "augment_reorder",
            PlanVariant::NewTasks => "new_tasks",
        }
    }
}

/// One task in a post-redesign role. New tasks have negative numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanTask {
    pub task_number: i64,
    pub task_details: String,
    pub weight: f64,
    pub label: Option<AugmentLabel>,
    pub category: Option<TaskCategory>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedesignPlan {
    pub role_key: String,
    pub variant: PlanVariant,
    pub automated: Vec<u32>,
    pub freed_share: f64,
    pub focus_task: Option<u32>,
    pub reasoning: Option<String>,
    pub themes: Option<ThemeSet>,
    /// Post-redesign tasks in order, with their shares.
    pub tasks: Vec<PlanTask>,
}

impl RedesignPlan {
    pub fn weight_sum(&self) -> f64 {
        numeric::sum(self.tasks.iter().map(|t| t.weight))
    }

    pub fn new_task_count(&self) -> usize {
        self.tasks.iter().filter(|t| t.task_number < 0).count()
    }
}

pub fn automated_tasks(tasks: &[TaskRecord]) -> Vec<u32> {
    tasks.iter().filter(|t| t.high).map(|t| t.task_number).collect()
}

pub fn surviving_tasks(tasks: &[TaskRecord]) -> Vec<u32> {
    tasks.iter().filter(|t| !t.high).map(|t| t.task_number).collect()
}

pub fn freed_share(tasks: &[TaskRecord], weights: &[f64]) -> f64 {
    numeric::sum(tasks.iter().zip(weights).filter(|(t, _)| t.high).map(|(_, w)| *w))
}

/// At least one automated task and H_j below θ.
pub fn is_eligible(tasks: &[TaskRecord], high_share: f64, theta: f64) -> bool {
    tasks.iter().any(|t| t.high) && high_share < theta
}

fn plan_task(t: &TaskRecord, weight: f64) -> PlanTask {
    PlanTask {
        task_number: i64::from(t.task_number),
        task_details: t.task_details.clone(),
        weight,
        label: None,
        category: None,
    }
}

pub fn check_focus(tasks: &[TaskRecord], focus: i64) -> Result<u32, RedesignError> {
    let t = tasks
        .iter()
        .find(|t| i64::from(t.task_number) == focus)
        .ok_or(RedesignError::UnknownTask(focus))?;
    if t.high {
        return Err(RedesignError::AutomatedTask(focus));
    }
    Ok(t.task_number)
}

/// The only surviving task, when there is exactly one.
pub fn forced_focus(tasks: &[TaskRecord]) -> Option<u32> {
    match surviving_tasks(tasks).as_slice() {
        [only] => Some(*only),
        _ => None,
    }
}

/// All freed time moves to the focus task; original positions are kept and
/// automated tasks carry weight 0.
pub fn apply_focus(tasks: &[TaskRecord], weights: &[f64], focus: u32) -> Result<Vec<PlanTask>, RedesignError> {
    check_lengths(tasks, weights)?;
    check_focus(tasks, i64::from(focus))?;
    let freed = freed_share(tasks, weights);
    Ok(tasks
        .iter()
        .zip(weights)
        .map(|(t, &w)| {
            let post = if t.high {
                0.0
            } else if t.task_number == focus {
                w + freed
            } else {
                w
            };
            plan_task(t, post)
        })
        .collect())
}

/// Baseline: automated weights dropped and survivors rescaled proportionally.
pub fn proportional_baseline(tasks: &[TaskRecord], weights: &[f64]) -> Result<Vec<PlanTask>, RedesignError> {
    check_lengths(tasks, weights)?;
    let kept = numeric::sum(tasks.iter().zip(weights).filter(|(t, _)| !t.high).map(|(_, w)| *w));
    if !(kept > 0.0) {
        return Err(RedesignError::NothingSurvives);
    }
    Ok(tasks
        .iter()
        .zip(weights)
        .map(|(t, &w)| plan_task(t, if t.high { 0.0 } else { w / kept }))
        .collect())
}

fn check_lengths(tasks: &[TaskRecord], weights: &[f64]) -> Result<(), RedesignError> {
    if tasks.len() != weights.len() {
        return Err(ExposureError::LengthMismatch {
            tasks: tasks.len(),
            weights: weights.len(),
        }
        .into());
    }
    Ok(())
}

/// Provider answer row for the augment-and-reorder variant.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentItem {
    pub task_number: i64,
    pub label: AugmentLabel,
    pub new_task_details: String,
}

/// Checks that `numbers` lists each surviving task exactly once. When
/// `allow_new` is set, negative numbers pass through as new tasks.
fn check_survivor_order(tasks: &[TaskRecord], numbers: &[i64], allow_new: bool) -> Result<(), RedesignError> {
    let mut seen = BTreeSet::new();
    for &n in numbers {
        if !seen.insert(n) {
            return Err(RedesignError::DuplicateTask(n));
        }
        if n < 0 && allow_new {
            continue;
        }
        match tasks.iter().find(|t| i64::from(t.task_number) == n) {
            None => return Err(RedesignError::UnknownTask(n)),
            Some(t) if t.high => return Err(RedesignError::AutomatedTask(n)),
            Some(_) => {}
        }
    }
    let missing: Vec<u32> = surviving_tasks(tasks)
        .into_iter()
        .filter(|n| !seen.contains(&i64::from(*n)))
        .collect();
    if !missing.is_empty() {
        return Err(RedesignError::MissingTasks(missing));
    }
    Ok(())
}

/// Survivors relabelled and reordered; decay weights follow the new order.
pub fn apply_augment_reorder(
    tasks: &[TaskRecord],
    items: &[AugmentItem],
    delta: f64,
) -> Result<Vec<PlanTask>, RedesignError> {
    let numbers: Vec<i64> = items.iter().map(|i| i.task_number).collect();
    check_survivor_order(tasks, &numbers, false)?;
    if items.is_empty() {
        return Err(RedesignError::NothingSurvives);
    }
    let dw = exposure::decay_weights(items.len(), delta)?;
    Ok(items
        .iter()
        .zip(&dw.normalized)
        .map(|(item, &w)| {
            let original = tasks.iter().find(|t| i64::from(t.task_number) == item.task_number).unwrap();
            let details = if item.label == AugmentLabel::Augmented && !item.new_task_details.trim().is_empty() {
                item.new_task_details.clone()
            } else {
                original.task_details.clone()
            };
            PlanTask {
                task_number: item.task_number,
                task_details: details,
                weight: w,
                label: Some(item.label),
                category: None,
            }
        })
        .collect())
}

/// Provider answer row for the new-task variant.
#[derive(Debug, Clone, PartialEq)]
pub struct NewTaskItem {
    pub task_number: i64,
    pub task_details: String,
    pub category: TaskCategory,
}

/// Survivors plus up to |automated| new tasks, in the returned order.
pub fn apply_new_tasks(
    tasks: &[TaskRecord],
    items: &[NewTaskItem],
    delta: f64,
) -> Result<Vec<PlanTask>, RedesignError> {
    let cap = automated_tasks(tasks).len();
    if cap == 0 {
        return Err(RedesignError::NothingAutomated);
    }
    let numbers: Vec<i64> = items.iter().map(|i| i.task_number).collect();
    let proposed = numbers.iter().filter(|n| **n < 0).count();
    if proposed > cap {
        return Err(RedesignError::TooManyNewTasks { proposed, cap });
    }
    if let Some(&z) = numbers.iter().find(|n| **n == 0) {
        return Err(RedesignError::NewTaskNotNegative(z));
    }
    check_survivor_order(tasks, &numbers, true)?;
    if items.is_empty() {
        return Err(RedesignError::NothingSurvives);
    }
    let dw = exposure::decay_weights(items.len(), delta)?;
    Ok(items
        .iter()
        .zip(&dw.normalized)
        .map(|(item, &w)| PlanTask {
            task_number: item.task_number,
            task_details: item.task_details.clone(),
            weight: w,
            label: None,
            category: Some(item.category),
        })
        .collect())
}

/// Sample `round(fraction · n)` roles per stratum, at least one from every
/// non-empty stratum. Returns sorted input positions.
pub fn stratified_sample(strata: &[(String, String)], fraction: f64, seed: u64) -> Result<Vec<usize>, RedesignError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(RedesignError::InvalidFraction(fraction));
    }
    let mut groups: BTreeMap<&(String, String), Vec<usize>> = BTreeMap::new();
    for (i, s) in strata.iter().enumerate() {
        groups.entry(s).or_default().push(i);
    }
    let mut out = Vec::new();
    for ((dept, grade), members) in groups {
        let n = members.len();
        let take = (libm::round(fraction * n as f64) as usize).clamp(1, n);
        if take == n {
            out.extend(members);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("stratum|{dept}|{grade}")));
        for j in rand::seq::index::sample(&mut rng, n, take) {
            out.push(members[j]);
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeShiftColumn {
    Pre,
    Proportional,
    Focus,
    AugmentReorder,
    NewTasks,
}

impl TimeShiftColumn {
    pub const ALL: [TimeShiftColumn; 5] = [
        TimeShiftColumn::Pre,
        TimeShiftColumn::Proportional,
        TimeShiftColumn::Focus,
        TimeShiftColumn::AugmentReorder,
        TimeShiftColumn::NewTasks,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TimeShiftColumn::Pre => "pre",
            TimeShiftColumn::Proportional => "post_proportional",
            TimeShiftColumn::Focus => "focus",
            TimeShiftColumn::AugmentReorder => "augment_reorder",
            TimeShiftColumn::NewTasks => "new_tasks",
        }
    }
}

pub const UNCATEGORIZED: &str = "uncategorized";

/// Per-role category shares for each column that was run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoleTimeShift {
    pub weight: f64,
    /// (category, share) pairs per column; `None` category means unassigned.
    pub columns: BTreeMap<TimeShiftColumn, Vec<(Option<String>, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeShiftReport {
    pub columns: Vec<TimeShiftColumn>,
    pub categories: Vec<String>,
    /// Weighted share per (category, column); columns sum to 1.
    pub shares: BTreeMap<(String, TimeShiftColumn), f64>,
    pub hours_per_week: f64,
}

impl TimeShiftReport {
    pub fn share(&self, category: &str, column: TimeShiftColumn) -> f64 {
        self.shares.get(&(category.to_string(), column)).copied().unwrap_or(0.0)
    }

    pub fn minutes(&self, category: &str, column: TimeShiftColumn) -> f64 {
        self.share(category, column) * self.hours_per_week * 60.0
    }

    /// Minutes per week relative to the pre-redesign column.
    pub fn delta_minutes(&self, category: &str, column: TimeShiftColumn) -> f64 {
        self.minutes(category, column) - self.minutes(category, TimeShiftColumn::Pre)
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Population-weighted category shares per column. Each column averages over
/// the roles that have it.
pub fn time_shift_report(roles: &[RoleTimeShift], hours_per_week: f64) -> TimeShiftReport {
    let mut sums: BTreeMap<(String, TimeShiftColumn), CompensatedSum> = BTreeMap::new();
    let mut totals: BTreeMap<TimeShiftColumn, CompensatedSum> = BTreeMap::new();
    let mut categories = BTreeSet::new();
    for r in roles {
        for (col, entries) in &r.columns {
            let mut role_total = CompensatedSum::new();
            for (_, s) in entries {
                role_total.add(*s);
            }
            let role_total = role_total.total();
            if !(role_total > 0.0) {
                continue;
            }
            totals.entry(*col).or_default().add(r.weight);
            for (cat, s) in entries {
                let cat = cat.clone().unwrap_or_else(|| UNCATEGORIZED.to_string());
                categories.insert(cat.clone());
                sums.entry((cat, *col)).or_default().add(r.weight * s / role_total);
            }
        }
    }
    let columns: Vec<TimeShiftColumn> = TimeShiftColumn::ALL
        .iter()
        .copied()
        .filter(|c| totals.get(c).is_some_and(|t| t.total() > 0.0))
        .collect();
    let mut shares = BTreeMap::new();
    for cat in &categories {
        for col in &columns {
            let total = totals[col].total();
            let s = sums.get(&(cat.clone(), *col)).map_or(0.0, |s| s.total());
            shares.insert((cat.clone(), *col), s / total);
        }
    }
    TimeShiftReport {
        columns,
        categories: categories.into_iter().collect(),
        shares,
        hours_per_week,
    }
}

/// Category shares of one plan's tasks, looking up categories by task number
/// for original tasks and using the plan category for new ones.
pub fn plan_category_shares(
    plan_tasks: &[PlanTask],
    category_of: &BTreeMap<i64, String>,
) -> Vec<(Option<String>, f64)> {
    plan_tasks
        .iter()
        .filter(|t| t.weight > 0.0)
        .map(|t| {
            let cat = match t.category {
                Some(c) if t.task_number < 0 => Some(c.label().to_string()),
                _ => category_of.get(&t.task_number).cloned(),
            };
            (cat, t.weight)
        })
        .collect()
}

/// Pre-redesign shares for a role's original tasks.
pub fn original_category_shares(
    tasks: &[TaskRecord],
    weights: &[f64],
    category_of: &BTreeMap<i64, String>,
) -> Vec<(Option<String>, f64)> {
    tasks
        .iter()
        .zip(weights)
        .map(|(t, &w)| (category_of.get(&i64::from(t.task_number)).cloned(), w))
        .collect()
}

pub fn weekly_minutes(share: f64) -> f64 {
    share * WEEKLY_HOURS * 60.0
}

/// Nine weighted-quantile cutpoints splitting salaries into deciles.
pub fn decile_cutpoints(salaries: &[f64], weights: &[f64]) -> Option<[f64; 9]> {
    let mut cuts = [0.0; 9];
    for (i, c) in cuts.iter_mut().enumerate() {
        *c = numeric::weighted_quantile(salaries, weights, (i + 1) as f64 / 10.0)?;
    }
    Some(cuts)
}

/// Decile 1..=10 for a salary given the cutpoints.
pub fn decile_of(salary: f64, cuts: &[f64; 9]) -> usize {
    1 + cuts.iter().filter(|&&c| salary > c).count()
}
