//! Pipeline configuration loaded from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use task_exposure_core::clustering::taxonomy::TaxonomyConfig;
use task_exposure_core::exposure::DEFAULT_DECAY;
use task_exposure_core::raking::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use task_exposure_core::redesign::DEFAULT_SAMPLE_FRACTION;
use task_exposure_core::savings::{theta_grid, DEFAULT_THETA, SENSITIVITY_DELTAS};

use crate::gateway::remote::RemoteConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub fte: PathBuf,
    pub salary: PathBuf,
    pub professions: PathBuf,
    #[serde(default)]
    pub vocabulary: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Mock fixture table (fingerprint → payloads).
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub delta: f64,
    pub theta: f64,
    pub theta_grid: Vec<f64>,
    pub sensitivity_deltas: Vec<f64>,
    /// Descriptions longer than this are cut before prompting.
    pub max_description_chars: usize,
    pub min_tasks: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            delta: DEFAULT_DECAY,
            theta: DEFAULT_THETA,
            theta_grid: theta_grid(),
            sensitivity_deltas: SENSITIVITY_DELTAS.to_vec(),
            max_description_chars: 12_000,
            min_tasks: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub pca_dim: usize,
    pub categories: usize,
    pub subcategories: usize,
    pub label_sample: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let t = TaxonomyConfig::default();
        ClusterConfig {
            pca_dim: t.out_dim,
            categories: t.categories,
            subcategories: t.subcategories,
            label_sample: t.label_sample,
        }
    }
}

impl ClusterConfig {
    pub fn taxonomy(&self) -> TaxonomyConfig {
        TaxonomyConfig {
            out_dim: self.pca_dim,
            categories: self.categories,
            subcategories: self.subcategories,
            label_sample: self.label_sample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RakingConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Defaults to the FTE table total.
    pub population_total: Option<f64>,
    /// Departments with fewer sampled vacancies are left out of the sample
    /// and their population mass goes to OTHER_DEPTS.
    pub min_department_vacancies: usize,
}

impl Default for RakingConfig {
    fn default() -> Self {
        RakingConfig {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            population_total: None,
            min_department_vacancies: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RedesignConfig {
    pub sample_fraction: f64,
    pub focus: bool,
    pub augment_reorder: bool,
    pub new_tasks: bool,
    pub max_context_chars: usize,
}

impl Default for RedesignConfig {
    fn default() -> Self {
        RedesignConfig {
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            focus: true,
            augment_reorder: true,
            new_tasks: true,
            max_context_chars: 4_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Mock,
    Remote,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::Mock => "mock",
            ProviderKind::Remote => "remote",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockMiss {
    Strict,
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub mock_miss: MockMiss,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub remote: RemoteConfig,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            mock_miss: MockMiss::Strict,
            max_in_flight: 8,
            max_attempts: 3,
            backoff_ms: 500,
            remote: RemoteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub clusters: ClusterConfig,
    #[serde(default)]
    pub raking: RakingConfig,
    #[serde(default)]
    pub redesign: RedesignConfig,
    #[serde(default)]
    pub provider: ProviderConfig,
}

fn default_seed() -> u64 {
    20_240_601
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub delta: Option<f64>,
    pub theta: Option<f64>,
    pub seed: Option<u64>,
    pub provider: Option<ProviderKind>,
}

impl PipelineConfig {
    /// Parse TOML; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: base.display().to_string(),
            message: e.to_string(),
        })?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        PipelineConfig::from_toml(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        fix(&mut paths.corpus);
        fix(&mut paths.fte);
        fix(&mut paths.salary);
        fix(&mut paths.professions);
        fix(&mut paths.output_dir);
        for p in [&mut paths.vocabulary, &mut paths.cache_dir, &mut paths.fixtures].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(d) = o.delta {
            self.model.delta = d;
        }
        if let Some(t) = o.theta {
            self.model.theta = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = o.provider {
            self.provider.kind = p;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        let unit_delta = |d: f64| d > 0.0 && d <= 1.0;
        if !unit_delta(m.delta) {
            return Err(ConfigError::Invalid(format!("delta {} is outside (0, 1]", m.delta)));
        }
        if let Some(d) = m.sensitivity_deltas.iter().find(|d| !unit_delta(**d)) {
            return Err(ConfigError::Invalid(format!("sensitivity delta {d} is outside (0, 1]")));
        }
        if !(0.0..=1.0).contains(&m.theta) {
            return Err(ConfigError::Invalid(format!("theta {} is outside [0, 1]", m.theta)));
        }
        if m.theta_grid.is_empty() || m.theta_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(ConfigError::Invalid("theta_grid must be a non-empty subset of [0, 1]".into()));
        }
        if m.min_tasks == 0 {
            return Err(ConfigError::Invalid("min_tasks must be at least 1".into()));
        }
        let c = &self.clusters;
        if c.categories == 0 || c.subcategories == 0 || c.pca_dim == 0 || c.label_sample == 0 {
            return Err(ConfigError::Invalid("cluster counts must be positive".into()));
        }
        let f = self.redesign.sample_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(ConfigError::Invalid(format!("sample_fraction {f} is outside (0, 1]")));
        }
        if !(self.raking.tolerance > 0.0) || self.raking.max_iterations == 0 {
            return Err(ConfigError::Invalid("raking tolerance and max_iterations must be positive".into()));
        }
        if self.provider.max_attempts == 0 || self.provider.max_in_flight == 0 {
            return Err(ConfigError::Invalid("provider max_attempts and max_in_flight must be positive".into()));
        }
        let p = &self.paths;
        let mut required: Vec<(&str, &Path)> = vec![
            ("corpus", &p.corpus),
            ("fte", &p.fte),
            ("salary", &p.salary),
            ("professions", &p.professions),
        ];
        if let Some(v) = &p.vocabulary {
            required.push(("vocabulary", v));
        }
        if let Some(f) = &p.fixtures {
            required.push(("fixtures", f));
        }
        for (name, path) in required {
            if !path.is_file() {
                return Err(ConfigError::Invalid(format!("paths.{name}: {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.paths.cache_dir.clone().unwrap_or_else(|| self.paths.output_dir.join("cache"))
    }
}
