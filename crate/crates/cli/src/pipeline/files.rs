//! Artifact file names, by producing stage.

// ingest
pub const VACANCIES: &str = "vacancies.jsonl";
pub const INGEST_DIAGNOSTICS: &str = "diagnostics.jsonl";

// extract
pub const TASKS: &str = "tasks.jsonl";
pub const OUTCOMES: &str = "outcomes.jsonl";

// weight
pub const TASK_WEIGHTS: &str = "task_weights.jsonl";
pub const ROLES: &str = "roles.jsonl";

// cluster
pub const EXPOSURE_CLUSTERS: &str = "exposure_clusters.jsonl";
pub const CENTROIDS: &str = "centroids.jsonl";
pub const TAXONOMY: &str = "taxonomy.jsonl";
pub const LABELS: &str = "labels.json";
pub const PROJECTION: &str = "projection.json";

// rake
pub const WEIGHTS: &str = "weights.jsonl";
pub const ROLE_WEIGHTS: &str = "role_weights.jsonl";
pub const RAKE_SUMMARY: &str = "rake_summary.json";

// savings
pub const ROLE_SAVINGS: &str = "role_savings.jsonl";
pub const SWEEP: &str = "sweep.jsonl";
pub const SENSITIVITY: &str = "sensitivity.jsonl";

// redesign
pub const SAMPLE: &str = "sample.jsonl";
pub const PLANS: &str = "plans.jsonl";
pub const TIME_SHIFT: &str = "time_shift.jsonl";
