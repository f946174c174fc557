//! Row types persisted between stages.

use serde::{Deserialize, Serialize};

use task_exposure_core::exposure::{ExposureBand, TaskRecord};

/// One extracted task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub vacancy_id: String,
    pub task_number: u32,
    pub task_details: String,
    pub exposure: f64,
    pub band: String,
    pub high: bool,
    /// `description` or `summary`.
    pub source: String,
}

impl TaskRow {
    pub fn from_record(vacancy_id: &str, t: &TaskRecord, source: &str) -> Self {
        TaskRow {
            vacancy_id: vacancy_id.to_string(),
            task_number: t.task_number,
            task_details: t.task_details.clone(),
            exposure: t.exposure,
            band: t.band.as_str().to_string(),
            high: t.high,
            source: source.to_string(),
        }
    }

    pub fn to_record(&self) -> TaskRecord {
        TaskRecord {
            task_number: self.task_number,
            task_details: self.task_details.clone(),
            exposure: self.exposure,
            band: ExposureBand::parse(&self.band).expect("band written by this tool"),
            high: self.high,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractStatus {
    Ok,
    /// Fewer than the minimum tasks from both description and summary.
    Dropped,
    /// Provider or schema failure.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractOutcome {
    pub vacancy_id: String,
    pub status: ExtractStatus,
    pub source: Option<String>,
    pub n_tasks: usize,
    pub message: Option<String>,
}

/// A task with its decay weight and allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTaskRow {
    pub vacancy_id: String,
    pub task_number: u32,
    pub task_details: String,
    pub exposure: f64,
    pub band: String,
    pub high: bool,
    pub weight: f64,
    pub hours: f64,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleRow {
    pub vacancy_id: String,
    pub title: String,
    pub department: String,
    pub grade: String,
    pub profession: String,
    pub n_tasks: usize,
    pub weighted_mean: f64,
    pub weighted_std: f64,
    pub high_share: f64,
    pub medium_share: f64,
    pub salary: Option<f64>,
    pub salary_status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureClusterRow {
    pub vacancy_id: String,
    pub cluster: String,
    pub weighted_mean: f64,
    pub weighted_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidRow {
    pub cluster: String,
    pub mean: f64,
    pub std: f64,
    pub roles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyRow {
    pub task_key: String,
    pub vacancy_id: String,
    pub task_number: u32,
    pub normalized: String,
    pub category_id: String,
    pub category_label: String,
    pub subcategory_id: String,
    pub subcategory_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub input_dim: usize,
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub key: String,
    pub department: String,
    pub grade: String,
    pub profession: String,
    pub weight: f64,
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RakeSummary {
    pub iterations: usize,
    pub converged: bool,
    pub last_change: f64,
    pub marginal_residual: f64,
    pub history: Vec<f64>,
    pub population_total: f64,
    pub total_weight: f64,
    /// Roles left out of the sample, with the reason.
    pub excluded: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleSavingsRow {
    pub vacancy_id: String,
    pub weight: f64,
    pub high_share: f64,
    pub medium_share: f64,
    pub salary: Option<f64>,
    pub class: String,
    pub cost_reduction: Option<f64>,
    pub productivity_gain: Option<f64>,
    pub productivity_upper: Option<f64>,
    pub freed_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub theta: f64,
    pub cost_reduction: f64,
    pub productivity_gain: f64,
    pub productivity_upper: f64,
    /// Number, `inf` or `n/a`.
    pub ratio: String,
    pub freed_hours: f64,
    pub n_cost: usize,
    pub n_productivity: usize,
    pub n_no_impact: usize,
    pub n_missing_salary: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTaskRow {
    pub task_number: i64,
    pub task_details: String,
    pub weight: f64,
    pub label: Option<String>,
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub vacancy_id: String,
    pub variant: String,
    pub automated: Vec<u32>,
    pub freed_share: f64,
    pub focus_task: Option<u32>,
    pub reasoning: Option<String>,
    pub themes: Vec<String>,
    pub tasks: Vec<PlanTaskRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeShiftRow {
    pub category: String,
    pub column: String,
    pub share: f64,
    pub minutes: f64,
    pub delta_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedesignSampleRow {
    pub vacancy_id: String,
    pub department: String,
    pub grade: String,
    pub high_share: f64,
}

/// Raked weight of an observed role, and the same weight after the
/// OTHER_DEPTS mass of its (grade, profession) cell is spread over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleWeightRow {
    pub vacancy_id: String,
    pub raked_weight: f64,
    pub population_weight: f64,
}
