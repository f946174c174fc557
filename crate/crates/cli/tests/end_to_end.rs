mod common;

use task_exposure::pipeline::{Pipeline, PipelineError, Stage};

#[test]
fn rerun_is_a_no_op() {
    let (dir, cfg) = common::demo_dir();
    common::run_all(common::load(&cfg));
    let before = common::snapshot(&dir.path().join("out"));
    let runs = common::run_all(common::load(&cfg));
    assert!(runs.iter().all(|r| r.skipped), "every stage should be up to date");
    assert_eq!(common::snapshot(&dir.path().join("out")), before);
}

#[test]
fn stale_upstream_is_refused() {
    let (_dir, cfg) = common::demo_dir();
    common::run_all(common::load(&cfg));
    let mut changed = common::load(&cfg);
    changed.model.delta = 0.5;
    let err = Pipeline::new(changed).run_stage(Stage::Savings).unwrap_err();
    assert!(
        matches!(err, PipelineError::StaleUpstream { upstream: Stage::Weight, .. }),
        "{err}"
    );
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn missing_upstream_is_refused() {
    let (_dir, cfg) = common::demo_dir();
    let err = Pipeline::new(common::load(&cfg)).run_stage(Stage::Weight).unwrap_err();
    assert!(matches!(err, PipelineError::MissingUpstream { .. }), "{err}");
}

#[test]
fn delta_change_reruns_weight_and_everything_after_it() {
    let (_dir, cfg) = common::demo_dir();
    common::run_all(common::load(&cfg));
    let mut changed = common::load(&cfg);
    changed.model.delta = 0.5;
    let runs = common::run_all(changed);
    for r in &runs {
        let expect_skip = matches!(r.stage, Stage::Ingest | Stage::Extract);
        assert_eq!(r.skipped, expect_skip, "stage {}", r.stage);
        assert!(!r.is_partial(), "stage {}", r.stage);
    }
}

#[test]
fn strict_replay_without_fixtures_is_partial() {
    let (dir, cfg) = common::demo_dir();
    std::fs::write(dir.path().join("fixtures.json"), "{}").unwrap();
    let mut p = Pipeline::new(common::load(&cfg));
    p.run_stage(Stage::Ingest).unwrap();
    let run = p.run_stage(Stage::Extract).unwrap();
    assert!(run.is_partial());
    assert!(run.manifest.failures.iter().all(|f| f.class.as_str() == "FixtureMiss"));
}

#[test]
fn report_tables_parse_as_csv() {
    let (dir, cfg) = common::demo_dir();
    common::run_all(common::load(&cfg));
    let report = dir.path().join("out").join("report");
    let mut seen = 0;
    for e in std::fs::read_dir(&report).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv") {
            let mut rdr = csv::Reader::from_path(&p).unwrap();
            let width = rdr.headers().unwrap().len();
            let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
            assert!(rows.iter().all(|r| r.len() == width), "{}", p.display());
            seen += 1;
        }
    }
    assert!(seen >= 10);
    let sweep = std::fs::read_to_string(report.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 22);
}

#[test]
fn demo_copy_in_repo_matches_generator() {
    let repo = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join("demo");
    let (dir, _) = common::demo_dir();
    for f in ["vacancies.jsonl", "fte.csv", "salary.csv", "professions.csv", "config.toml", "fixtures.json"] {
        let want = std::fs::read(dir.path().join(f)).unwrap();
        let got = std::fs::read(repo.join(f)).unwrap_or_default();
        assert!(got == want, "{f} is out of date; regenerate with `task-exposure demo crates/cli/tests/fixtures/demo`");
    }
}
