use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use task_exposure::agreement::{summarise, Ratings};
use task_exposure::config::{Overrides, PipelineConfig, ProviderKind};
use task_exposure::demo;
use task_exposure::extract::score_task_list;
use task_exposure::pipeline::{build_gateway, Pipeline, PipelineError, Stage, StageRun};
use task_exposure_core::exposure::Weighting;

#[derive(Parser)]
#[command(name = "task-exposure", version, about = "Task-level exposure of job adverts to generative AI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Decay factor for task weights.
    #[arg(long)]
    delta: Option<f64>,
    /// Automation threshold on the high-exposure time share.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    provider: Option<ProviderKind>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            delta: self.delta,
            theta: self.theta,
            seed: self.seed,
            provider: self.provider,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Equal,
    Decay,
}

#[derive(Subcommand)]
enum Command {
    /// Read the vacancy corpus.
    Ingest(RunArgs),
    /// Extract and score tasks for each vacancy.
    Extract(RunArgs),
    /// Task weights and role-level exposure.
    Weight(RunArgs),
    /// Exposure clusters and the task taxonomy.
    Cluster(RunArgs),
    /// Rake the sample to workforce totals.
    Rake(RunArgs),
    /// Cost and productivity savings across thresholds.
    Savings(RunArgs),
    /// Post-automation role redesign.
    Redesign(RunArgs),
    /// Tables for the write-up.
    Report(RunArgs),
    /// Every stage in order; up-to-date stages are skipped.
    All(RunArgs),
    /// Agreement between raters in a CSV (one column per rater, blanks allowed).
    Agreement { csv: PathBuf },
    /// Score an ordered task list, one task per line.
    ScoreTasks {
        file: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "decay")]
        weighting: WeightingArg,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_enum)]
        provider: Option<ProviderKind>,
    },
    /// Write a small corpus, reference tables, config and fixtures to DIR.
    Demo { dir: PathBuf },
}

struct Failed {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failed {
    fn from(e: PipelineError) -> Self {
        Failed {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn data_error(e: impl std::fmt::Display) -> Failed {
    Failed {
        code: 2,
        message: e.to_string(),
    }
}

fn load_config(path: &Path, o: Overrides) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::load(path)?;
    cfg.apply(o);
    cfg.validate()?;
    Ok(cfg)
}

fn report_runs(runs: &[StageRun]) -> u8 {
    let mut code = 0;
    for r in runs {
        let state = if r.skipped {
            "up to date"
        } else if r.is_partial() {
            code = 3;
            "partial"
        } else {
            "complete"
        };
        println!("{:<9} {state}", r.stage.as_str());
        for f in &r.manifest.failures {
            println!("  failed {} ({}): {}", f.request_id, f.class.as_str(), f.message);
        }
    }
    code
}

fn run_stages(args: &RunArgs, stage: Option<Stage>) -> Result<u8, Failed> {
    let cfg = load_config(&args.config, args.overrides())?;
    let mut p = Pipeline::new(cfg);
    let stages = match stage {
        Some(s) => vec![s],
        None => Stage::ALL.to_vec(),
    };
    let mut runs = Vec::new();
    for s in stages {
        match p.run_stage(s) {
            Ok(r) => runs.push(r),
            Err(e) => {
                report_runs(&runs);
                // a later failure caused by missing provider answers is a
                // provider failure, not a data error
                let after_partial = runs.iter().any(StageRun::is_partial);
                let code = if after_partial { 3 } else { e.exit_code() as u8 };
                return Err(Failed {
                    code,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(report_runs(&runs))
}

fn run(cli: Cli) -> Result<u8, Failed> {
    let stage = |s: Stage, a: &RunArgs| run_stages(a, Some(s));
    match &cli.command {
        Command::Ingest(a) => stage(Stage::Ingest, a),
        Command::Extract(a) => stage(Stage::Extract, a),
        Command::Weight(a) => stage(Stage::Weight, a),
        Command::Cluster(a) => stage(Stage::Cluster, a),
        Command::Rake(a) => stage(Stage::Rake, a),
        Command::Savings(a) => stage(Stage::Savings, a),
        Command::Redesign(a) => stage(Stage::Redesign, a),
        Command::Report(a) => stage(Stage::Report, a),
        Command::All(a) => run_stages(a, None),
        Command::Agreement { csv } => {
            let r = Ratings::read(csv).map_err(data_error)?;
            let s = summarise(&r).map_err(data_error)?;
            println!("raters            {}", r.raters.len());
            println!("units             {}", r.rows.len());
            println!("mean spearman     {:.6}", s.mean_spearman);
            println!("mean pearson      {:.6}", s.mean_pearson);
            println!("krippendorff alpha {:.6}", s.alpha);
            Ok(0)
        }
        Command::ScoreTasks {
            file,
            config,
            weighting,
            delta,
            provider,
        } => {
            let cfg = load_config(
                config,
                Overrides {
                    delta: *delta,
                    provider: *provider,
                    ..Overrides::default()
                },
            )?;
            let text = std::fs::read_to_string(file).map_err(|e| data_error(format!("{}: {e}", file.display())))?;
            let tasks: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect();
            let w = match weighting {
                WeightingArg::Equal => Weighting::Equal,
                WeightingArg::Decay => Weighting::Decay(cfg.model.delta),
            };
            let gw = build_gateway(&cfg)?;
            let s = score_task_list(&gw, &tasks, w).map_err(|e| Failed {
                code: if matches!(e, task_exposure::extract::ScoreError::Provider(_)) { 3 } else { 2 },
                message: e.to_string(),
            })?;
            for (t, sc) in tasks.iter().zip(&s.scores) {
                println!("{sc:.3}\t{t}");
            }
            println!("mean {:.6}\tstd {:.6}", s.mean, s.std);
            Ok(0)
        }
        Command::Demo { dir } => {
            let cfg = demo::write_demo(dir)?;
            println!("wrote demo inputs; run: task-exposure all --config {}", cfg.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
