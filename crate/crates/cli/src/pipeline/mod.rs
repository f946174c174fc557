//! Stage driver: fingerprints, upstream checks, no-op reruns.

mod cluster;
pub mod files;
mod redesign;
mod stages;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};

use crate::artifacts::{sha256_bytes, sha256_file, ArtifactError, Manifest, StageDir, StageStatus, SCHEMA_VERSION};
use crate::config::{ConfigError, MockMiss, PipelineConfig, ProviderKind};
use crate::corpus::CorpusError;
use crate::gateway::batch::BatchPolicy;
use crate::gateway::cache::DiskCache;
use crate::gateway::mock::{MissPolicy, MockProvider};
use crate::gateway::remote::RemoteProvider;
use crate::gateway::{Failure, Gateway, Provider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Stage {
    Ingest,
    Extract,
    Weight,
    Cluster,
    Rake,
    Savings,
    Redesign,
    Report,
}

impl Stage {
    /// Topological order.
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Weight,
        Stage::Cluster,
        Stage::Rake,
        Stage::Savings,
        Stage::Redesign,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Weight => "weight",
            Stage::Cluster => "cluster",
            Stage::Rake => "rake",
            Stage::Savings => "savings",
            Stage::Redesign => "redesign",
            Stage::Report => "report",
        }
    }

    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Extract => &[Stage::Ingest],
            Stage::Weight => &[Stage::Ingest, Stage::Extract],
            Stage::Cluster => &[Stage::Weight],
            Stage::Rake => &[Stage::Weight],
            Stage::Savings => &[Stage::Weight, Stage::Rake],
            Stage::Redesign => &[Stage::Ingest, Stage::Weight, Stage::Cluster, Stage::Rake],
            Stage::Report => &[Stage::Weight, Stage::Cluster, Stage::Rake, Stage::Savings, Stage::Redesign],
        }
    }

    pub fn uses_provider(self) -> bool {
        matches!(self, Stage::Extract | Stage::Cluster | Stage::Redesign)
    }

    /// Every stage that reads this one, directly or not.
    pub fn downstream(self) -> Vec<Stage> {
        let mut out: Vec<Stage> = Vec::new();
        for s in Stage::ALL {
            if s.upstream().iter().any(|u| *u == self || out.contains(u)) {
                out.push(s);
            }
        }
        out
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("stage `{stage}` needs `{upstream}`, which has not been run")]
    MissingUpstream { stage: Stage, upstream: Stage },
    #[error("stage `{stage}`: upstream `{upstream}` is stale ({reason}); rerun `{upstream}` first or use `all`")]
    StaleUpstream { stage: Stage, upstream: Stage, reason: String },
    #[error("{stage}: {message}")]
    Data { stage: Stage, message: String },
    #[error("provider: {0}")]
    Provider(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Provider(_) => 3,
            _ => 2,
        }
    }
}

/// What one stage invocation did.
#[derive(Debug, Clone)]
pub struct StageRun {
    pub stage: Stage,
    /// Fingerprint matched and files verified; nothing was recomputed.
    pub skipped: bool,
    pub manifest: Manifest,
}

impl StageRun {
    pub fn is_partial(&self) -> bool {
        self.manifest.status == StageStatus::Partial
    }
}

/// Files and notes produced by a stage body.
#[derive(Debug, Default)]
pub(crate) struct Output {
    pub files: Vec<&'static str>,
    pub failures: Vec<Failure>,
    pub diagnostics: Vec<String>,
}

/// Identity of the configured provider, without building it. Mock identity
/// includes the fixture file hash so new fixtures invalidate the cache and
/// downstream stages.
pub fn provider_identity(config: &PipelineConfig) -> Result<String, PipelineError> {
    let p = &config.provider;
    Ok(match p.kind {
        ProviderKind::Mock => {
            let fixtures = match &config.paths.fixtures {
                Some(f) => sha256_file(f)?,
                None => "none".to_string(),
            };
            let miss = match p.mock_miss {
                MockMiss::Strict => "strict",
                MockMiss::Default => "default",
            };
            format!("mock:{miss}:{}", &fixtures[..fixtures.len().min(16)])
        }
        ProviderKind::Remote => {
            let r = &p.remote;
            format!(
                "remote:{}:{}:{}:t{}:m{}",
                r.base_url, r.chat_model, r.embed_model, r.temperature, r.max_tokens
            )
        }
    })
}

pub fn batch_policy(config: &PipelineConfig) -> BatchPolicy {
    BatchPolicy {
        max_in_flight: config.provider.max_in_flight,
        max_attempts: config.provider.max_attempts,
        backoff: Duration::from_millis(config.provider.backoff_ms),
        ..BatchPolicy::default()
    }
}

/// Build the configured provider behind a disk cache.
pub fn build_gateway(config: &PipelineConfig) -> Result<Gateway, PipelineError> {
    let identity = provider_identity(config)?;
    let provider: Box<dyn Provider> = match config.provider.kind {
        ProviderKind::Mock => {
            let miss = match config.provider.mock_miss {
                MockMiss::Strict => MissPolicy::Strict,
                MockMiss::Default => MissPolicy::SchemaDefault,
            };
            let mock = MockProvider::new(miss).with_model_id(identity);
            if let Some(f) = &config.paths.fixtures {
                let n = mock.load_fixtures(f).map_err(PipelineError::Provider)?;
                log::info!("loaded {n} fixture entries from {}", f.display());
            }
            Box::new(mock)
        }
        ProviderKind::Remote => {
            Box::new(RemoteProvider::from_env(config.provider.remote.clone()).map_err(|e| PipelineError::Provider(e.to_string()))?)
        }
    };
    let cache_dir = config.cache_dir();
    let cache = DiskCache::open(&cache_dir).map_err(|source| ArtifactError::Io {
        path: cache_dir.display().to_string(),
        source,
    })?;
    Ok(Gateway::new(provider, Some(cache), batch_policy(config)))
}

pub struct Pipeline {
    config: PipelineConfig,
    gateway: Option<Gateway>,
    provider_id: Option<String>,
}

impl Pipeline {
    /// The gateway is built on first use by a provider stage.
    pub fn new(config: PipelineConfig) -> Self {
        Pipeline {
            config,
            gateway: None,
            provider_id: None,
        }
    }

    /// Use a ready-made gateway; its model id stands in for the provider
    /// identity in fingerprints.
    pub fn with_gateway(config: PipelineConfig, gateway: Gateway) -> Self {
        let id = gateway.provider().model_id();
        Pipeline {
            config,
            gateway: Some(gateway),
            provider_id: Some(id),
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn root(&self) -> &Path {
        &self.config.paths.output_dir
    }

    pub fn stage_dir(&self, stage: Stage) -> StageDir {
        StageDir::new(self.root(), stage.as_str())
    }

    fn provider_id(&self) -> Result<String, PipelineError> {
        match &self.provider_id {
            Some(id) => Ok(id.clone()),
            None => provider_identity(&self.config),
        }
    }

    fn stage_config(&self, stage: Stage) -> Result<Value, PipelineError> {
        let c = &self.config;
        Ok(match stage {
            Stage::Ingest => json!({}),
            Stage::Extract => json!({
                "max_description_chars": c.model.max_description_chars,
                "min_tasks": c.model.min_tasks,
                "provider": self.provider_id()?,
            }),
            Stage::Weight => json!({ "delta": c.model.delta }),
            Stage::Cluster => json!({
                "seed": c.seed,
                "clusters": c.clusters,
                "provider": self.provider_id()?,
            }),
            Stage::Rake => json!({ "raking": c.raking }),
            Stage::Savings => json!({
                "theta": c.model.theta,
                "theta_grid": c.model.theta_grid,
                "sensitivity_deltas": c.model.sensitivity_deltas,
            }),
            Stage::Redesign => json!({
                "seed": c.seed,
                "theta": c.model.theta,
                "delta": c.model.delta,
                "redesign": c.redesign,
                "provider": self.provider_id()?,
            }),
            Stage::Report => json!({ "theta": c.model.theta }),
        })
    }

    fn input_files(&self, stage: Stage) -> Vec<(&'static str, PathBuf)> {
        let p = &self.config.paths;
        let mut out = match stage {
            Stage::Ingest => vec![("corpus", p.corpus.clone())],
            Stage::Weight => vec![("salary", p.salary.clone())],
            Stage::Rake => vec![("fte", p.fte.clone()), ("professions", p.professions.clone())],
            _ => Vec::new(),
        };
        if matches!(stage, Stage::Ingest | Stage::Weight | Stage::Rake) {
            if let Some(v) = &p.vocabulary {
                out.push(("vocabulary", v.clone()));
            }
        }
        out
    }

    /// Fingerprint of `stage` under the current config and the upstream
    /// artifacts now on disk.
    pub fn fingerprint(&self, stage: Stage) -> Result<(String, BTreeMap<String, String>), PipelineError> {
        let mut upstream = BTreeMap::new();
        for &u in stage.upstream() {
            let m = self
                .stage_dir(u)
                .read_manifest()
                .ok_or(PipelineError::MissingUpstream { stage, upstream: u })?;
            upstream.insert(u.as_str().to_string(), m.content_hash);
        }
        let mut inputs = BTreeMap::new();
        for (name, path) in self.input_files(stage) {
            inputs.insert(name, sha256_file(&path)?);
        }
        let desc = json!({
            "stage": stage.as_str(),
            "schema_version": SCHEMA_VERSION,
            "config": self.stage_config(stage)?,
            "inputs": inputs,
            "upstream": upstream,
        });
        Ok((sha256_bytes(desc.to_string().as_bytes()), upstream))
    }

    /// Why `stage`'s artifact cannot be trusted as input, if it cannot.
    pub fn staleness(&self, stage: Stage) -> Result<Option<String>, PipelineError> {
        let dir = self.stage_dir(stage);
        let Some(m) = dir.read_manifest() else {
            return Ok(Some("not run".into()));
        };
        if m.schema_version != SCHEMA_VERSION {
            return Ok(Some(format!("schema version {} != {SCHEMA_VERSION}", m.schema_version)));
        }
        let expected = match self.fingerprint(stage) {
            Ok((fp, _)) => fp,
            Err(PipelineError::MissingUpstream { upstream, .. }) => {
                return Ok(Some(format!("its upstream `{upstream}` is missing")));
            }
            Err(e) => return Err(e),
        };
        if m.fingerprint != expected {
            return Ok(Some("its configuration, inputs or upstream changed".into()));
        }
        let bad = dir.verify(&m);
        if !bad.is_empty() {
            return Ok(Some(format!("files modified since it ran: {}", bad.join(", "))));
        }
        Ok(None)
    }

    fn check_upstream(&self, stage: Stage) -> Result<(), PipelineError> {
        for &u in stage.upstream() {
            if self.stage_dir(u).read_manifest().is_none() {
                return Err(PipelineError::MissingUpstream { stage, upstream: u });
            }
            if let Some(reason) = self.staleness(u)? {
                return Err(PipelineError::StaleUpstream {
                    stage,
                    upstream: u,
                    reason,
                });
            }
        }
        Ok(())
    }

    fn ensure_gateway(&mut self) -> Result<(), PipelineError> {
        if self.gateway.is_none() {
            self.gateway = Some(build_gateway(&self.config)?);
        }
        Ok(())
    }

    /// Run one stage. Refuses when an upstream artifact is missing or stale;
    /// a no-op when this stage's fingerprint and files already match.
    pub fn run_stage(&mut self, stage: Stage) -> Result<StageRun, PipelineError> {
        self.check_upstream(stage)?;
        let (fingerprint, upstream) = self.fingerprint(stage)?;
        let dir = self.stage_dir(stage);
        if let Some(m) = dir.read_manifest() {
            if m.fingerprint == fingerprint
                && m.schema_version == SCHEMA_VERSION
                && m.status == StageStatus::Complete
                && dir.verify(&m).is_empty()
            {
                log::info!("{stage}: up to date");
                return Ok(StageRun {
                    stage,
                    skipped: true,
                    manifest: m,
                });
            }
        }
        if stage.uses_provider() {
            self.ensure_gateway()?;
        }
        log::info!("{stage}: running");
        dir.reset()?;
        let root = self.root().to_path_buf();
        let cfg = &self.config;
        let out = match stage {
            Stage::Ingest => stages::ingest(cfg, &dir)?,
            Stage::Extract => stages::extract(cfg, &root, &dir, self.gateway.as_ref().expect("gateway built"))?,
            Stage::Weight => stages::weight(cfg, &root, &dir)?,
            Stage::Cluster => cluster::run(cfg, &root, &dir, self.gateway.as_ref().expect("gateway built"))?,
            Stage::Rake => stages::rake(cfg, &root, &dir)?,
            Stage::Savings => stages::savings(cfg, &root, &dir)?,
            Stage::Redesign => redesign::run(cfg, &root, &dir, self.gateway.as_ref().expect("gateway built"))?,
            Stage::Report => crate::report::run(cfg, &root, &dir)?,
        };
        for d in &out.diagnostics {
            log::info!("{stage}: {d}");
        }
        if !out.failures.is_empty() {
            log::warn!("{stage}: {} provider request(s) failed; artifact is partial", out.failures.len());
        }
        let manifest = dir.seal(stage.as_str(), &fingerprint, upstream, &out.files, out.failures, out.diagnostics)?;
        Ok(StageRun {
            stage,
            skipped: false,
            manifest,
        })
    }

    /// Every stage in order; unchanged stages are no-ops.
    pub fn run_all(&mut self) -> Result<Vec<StageRun>, PipelineError> {
        Stage::ALL.iter().map(|&s| self.run_stage(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dag_is_topological_and_acyclic() {
        for (i, s) in Stage::ALL.iter().enumerate() {
            for u in s.upstream() {
                let j = Stage::ALL.iter().position(|x| x == u).unwrap();
                assert!(j < i, "{s} reads {u}, which comes later");
                assert_ne!(u, s);
            }
        }
    }

    #[test]
    fn weight_change_invalidates_everything_after_it() {
        assert_eq!(
            Stage::Weight.downstream(),
            vec![Stage::Cluster, Stage::Rake, Stage::Savings, Stage::Redesign, Stage::Report]
        );
        assert!(Stage::Report.downstream().is_empty());
        assert_eq!(Stage::Ingest.downstream().len(), 7);
    }
}
