//! Task extraction with summary fallback, and scoring of external task lists.

use serde_json::Value;

use task_exposure_core::exposure::{weighted_mean_std, ExposureError, TaskRecord, Weighting};

use crate::corpus::Vacancy;
use crate::gateway::batch::{no_check, GatewayError};
use crate::gateway::{BatchReport, Failure, FailureClass, Gateway, StructuredRequest};
use crate::prompts;
use crate::records::{ExtractOutcome, ExtractStatus, TaskRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    pub max_chars: usize,
    pub min_tasks: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            max_chars: 12_000,
            min_tasks: 2,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExtractionResult {
    pub tasks: Vec<TaskRow>,
    pub outcomes: Vec<ExtractOutcome>,
    pub failures: Vec<Failure>,
    pub report: BatchReport,
}

/// Tasks in returned order, renumbered 1..=T; blank details are dropped.
pub fn tasks_from_payload(payload: &Value) -> Result<Vec<TaskRecord>, ExposureError> {
    let items = prompts::decode_extraction(payload);
    TaskRecord::from_ordered(
        items
            .into_iter()
            .filter(|t| !t.task_details.is_empty())
            .map(|t| (t.task_details, t.exposure_score)),
    )
}

enum Pass {
    Accepted(Vec<TaskRecord>),
    TooFew(usize),
    Failed(Failure),
}

fn run_pass(gateway: &Gateway, requests: &[StructuredRequest], min_tasks: usize, report: &mut BatchReport) -> Result<Vec<Pass>, GatewayError> {
    let out = gateway.submit_batch(requests, &no_check)?;
    report.merge(&out.report);
    Ok(out
        .results
        .into_iter()
        .map(|r| match r {
            Err(f) => Pass::Failed(f),
            Ok(resp) => match tasks_from_payload(&resp.payload) {
                Ok(tasks) if tasks.len() >= min_tasks => Pass::Accepted(tasks),
                Ok(tasks) => Pass::TooFew(tasks.len()),
                Err(e) => Pass::Failed(Failure {
                    request_id: resp.request_id,
                    class: FailureClass::SchemaInvalid,
                    message: e.to_string(),
                    attempts: resp.attempts,
                }),
            },
        })
        .collect())
}

/// Description first; the summary is tried when the description yields too
/// few tasks (or is empty). Provider failures are not retried on the summary.
pub fn extract_roles(gateway: &Gateway, vacancies: &[Vacancy], cfg: ExtractConfig) -> Result<ExtractionResult, GatewayError> {
    let mut result = ExtractionResult::default();
    let mut state: Vec<Option<(ExtractStatus, Option<&str>, Vec<TaskRecord>, Option<String>)>> = vec![None; vacancies.len()];

    let first: Vec<usize> = (0..vacancies.len())
        .filter(|&i| !vacancies[i].job_description.trim().is_empty())
        .collect();
    let reqs: Vec<StructuredRequest> = first
        .iter()
        .map(|&i| {
            let v = &vacancies[i];
            prompts::extraction_request(
                &format!("{}#description", v.vacancy_id),
                prompts::truncate_chars(&v.job_description, cfg.max_chars),
            )
        })
        .collect();
    let mut too_few_first = vec![None; vacancies.len()];
    for (&i, pass) in first.iter().zip(run_pass(gateway, &reqs, cfg.min_tasks, &mut result.report)?) {
        match pass {
            Pass::Accepted(t) => state[i] = Some((ExtractStatus::Ok, Some("description"), t, None)),
            Pass::TooFew(n) => too_few_first[i] = Some(n),
            Pass::Failed(f) => {
                state[i] = Some((ExtractStatus::Failed, None, Vec::new(), Some(format!("{}: {}", f.class.as_str(), f.message))));
                result.failures.push(f);
            }
        }
    }

    let second: Vec<usize> = (0..vacancies.len())
        .filter(|&i| state[i].is_none() && !vacancies[i].job_summary.trim().is_empty())
        .collect();
    let reqs: Vec<StructuredRequest> = second
        .iter()
        .map(|&i| {
            let v = &vacancies[i];
            prompts::extraction_request(
                &format!("{}#summary", v.vacancy_id),
                prompts::truncate_chars(&v.job_summary, cfg.max_chars),
            )
        })
        .collect();
    for (&i, pass) in second.iter().zip(run_pass(gateway, &reqs, cfg.min_tasks, &mut result.report)?) {
        state[i] = Some(match pass {
            Pass::Accepted(t) => (ExtractStatus::Ok, Some("summary"), t, None),
            Pass::TooFew(n) => (
                ExtractStatus::Dropped,
                None,
                Vec::new(),
                Some(format!(
                    "{} task(s) from description, {n} from summary",
                    too_few_first[i].unwrap_or(0)
                )),
            ),
            Pass::Failed(f) => {
                let msg = format!("{}: {}", f.class.as_str(), f.message);
                result.failures.push(f);
                (ExtractStatus::Failed, None, Vec::new(), Some(msg))
            }
        });
    }

    for ((v, s), few) in vacancies.iter().zip(state).zip(too_few_first) {
        let (status, source, tasks, message) = s.unwrap_or_else(|| {
            let msg = format!("{} task(s) from description, no summary", few.unwrap_or(0));
            (ExtractStatus::Dropped, None, Vec::new(), Some(msg))
        });
        if status != ExtractStatus::Ok {
            log::info!("{}: {:?} ({})", v.vacancy_id, status, message.as_deref().unwrap_or(""));
        }
        result.outcomes.push(ExtractOutcome {
            vacancy_id: v.vacancy_id.clone(),
            status,
            source: source.map(str::to_string),
            n_tasks: tasks.len(),
            message,
        });
        let source = source.unwrap_or("");
        result.tasks.extend(tasks.iter().map(|t| TaskRow::from_record(&v.vacancy_id, t, source)));
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskListScore {
    pub scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("task list is empty")]
    Empty,
    #[error("scoring failed ({class}): {message}", class = .0.class.as_str(), message = .0.message)]
    Provider(Failure),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Exposure(#[from] ExposureError),
}

/// Score an ordered external task list in one request and aggregate under
/// `weighting`. Every position must receive a score.
pub fn score_task_list(gateway: &Gateway, tasks: &[String], weighting: Weighting) -> Result<TaskListScore, ScoreError> {
    if tasks.is_empty() {
        return Err(ScoreError::Empty);
    }
    let n = tasks.len();
    let req = prompts::scoring_request("task-list", tasks);
    let complete = |_: &StructuredRequest, v: &Value| {
        let missing: Vec<usize> = prompts::decode_scores(v, n)
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| i + 1)
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(format!("no score for task(s) {missing:?}"))
        }
    };
    let out = gateway.submit_batch(std::slice::from_ref(&req), &complete)?;
    let resp = out.results.into_iter().next().expect("one result").map_err(ScoreError::Provider)?;
    let scores: Vec<f64> = prompts::decode_scores(&resp.payload, n).into_iter().map(|s| s.expect("checked")).collect();
    let (mean, std) = weighted_mean_std(&scores, &weighting.weights(n)?)?;
    Ok(TaskListScore { scores, mean, std })
}
