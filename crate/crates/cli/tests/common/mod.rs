#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use task_exposure::config::PipelineConfig;
use task_exposure::demo;
use task_exposure::pipeline::{Pipeline, StageRun};

/// Demo inputs and recorded fixtures in a fresh directory.
pub fn demo_dir() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo::write_demo(dir.path()).unwrap();
    (dir, cfg)
}

pub fn load(cfg: &Path) -> PipelineConfig {
    PipelineConfig::load(cfg).unwrap()
}

pub fn run_all(cfg: PipelineConfig) -> Vec<StageRun> {
    Pipeline::new(cfg).run_all().unwrap()
}

/// Every file under `root` (relative path → bytes), with the wall-clock
/// `produced_at` field dropped from manifests.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            let mut bytes = std::fs::read(&p).unwrap();
            if rel.ends_with("manifest.json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("produced_at");
                bytes = serde_json::to_vec(&v).unwrap();
            }
            out.insert(rel, bytes);
        }
    }
    out
}
