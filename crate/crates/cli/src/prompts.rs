//! Prompt templates, output schemas and payload decoding.

use serde_json::Value;

use task_exposure_core::redesign::{AugmentItem, AugmentLabel, NewTaskItem, TaskCategory, Theme, ThemeSet};

use crate::gateway::{Field, FieldType, Schema, StructuredRequest};

pub const EXTRACT_SYSTEM: &str =
    "You are an expert in extracting skills from job descriptions and assessing their potential automation with GPT technology.";

pub const EXTRACT_USER: &str = "Extract a list of tasks from the job advert in the provided format. Do not include tasks which concern the recruitment process, the onboarding process, working hours, or working conditions.<job_description>{job_description}</job_description>";

pub const SCORE_SYSTEM: &str = "You are an expert in assessing their assessing job tasks' potential automation with GPT technology.";

pub const SCORE_USER: &str = "Use the tool provided to assign each of these tasks a score of range 0-1 of potential automation of the task with GPT technology: <tasks>{formatted_tasks}</tasks>";

pub const LABEL_SYSTEM: &str = "You are an expert in giving human-interpretable labels to clusters of job tasks.";

pub const LABEL_USER: &str =
    "Provide a short descriptive label for this cluster of tasks: <tasks>{task_list}</tasks>. Provide no other text.";

pub const FOCUS_USER: &str = "A person working as a {job_title} has had parts of their role augmented by AI, freeing up time for other tasks. Given the remaining responsibilities:{task_details} where should they focus their efforts to maximize productivity? Reply with the task number and your reasoning using the schema.";

pub const THEME_DISCOVERY_USER: &str = "You are an expert in picking out key themes from text. AI has automated some tasks of workers. From their remaining tasks, someone has picked what they believe as the most important task to focus their freed up time on.  Your job is to identify key themes in the reasonings provided below. These might (but not necessarily include) synergies, human-centered work, unlocking the value of others' work etc. Reasonings:{reasonings_formatted}. Reply using the provided tool.";

pub const THEME_USER: &str = "You are an expert at classifying the reasoning behind the choice of tasks to focus on. AI has automated the task of a worker. From the worker's remaining tasks, they have picked what they believe as the most important task to focus their freed up time on. Accompanying their choice of best-alternative task to focus on, they have provided their reasoning. You must review the categories of reasoning below and indicate which are present in their reasoning with a 1, or not (a 0).
{consolidated_themes}
Be selective and apply the most relevant categories: choose at least one category but no more than three.
Their reasoning is:
{reasoning}
Reply using only the provided tool.";

pub const AUGMENT_SYSTEM: &str =
    "You are an expert in understanding how workforce tasks might change following digital and AI transformation.";

pub const AUGMENT_USER: &str = "A person working as a {job_title} has had parts of their role augmented by AI. Your task is to consider how the rest of their role might be re-imagined to maximize the worker's productivity. Specifically, you must consider how their remaining tasks might be augmented or remain unchanged following the use of generative AI tools. You are to take things in two steps.

In the first step, consider each task in turn. If the task has little or no scope to change, label it with 'No change.' Otherwise, return 'augmented'. If the task is labelled with no change, retain its original details. Otherwise, give a new task detail of the redesigned (augmented) task. The second step is that, once you've done step one for all tasks, return the tasks in order of importance, the most important being first etc.
<tasks>{task_details}</tasks>

Use the following context on the job role to consider how the tasks should be ordered by importance: <job_context>{job_context}</job_context>. Reply with each task number, its label, and its new task details, in order of task importance, using the schema.";

pub const NEW_TASKS_SYSTEM: &str = "You are an expert in helping UK civil servants manage the impacts of AI use in the workplace.";

pub const NEW_TASKS_USER: &str = "AI is transforming the role of {job_title} in the {dept_key} department of the UK Civil Service. Your assignment is to assess how the role's tasks could look after the transformation. To do this, you must follow a series of steps:

INSTRUCTIONS:
1. Review the context of the role to build a picture of what it entails.
2. Note which tasks have been automated away. These will not be part of the final role.
3. **Consolidate All Potential Tasks:** First, create a single conceptual pool of all tasks for the redesigned role. This includes both the essential tasks from the <remaining_tasks> list and any high-impact new tasks you identify (you may suggest up to {n_automated_tasks} new tasks).
4. **Rank the Consolidated List:** Finally, sort this entire pool of tasks strictly by their strategic importance for the future role. The final order in your output must reflect this holistic ranking.

RULES:
- Each task must have a unique integer ID, description, and category. For new tasks you put forward, you must assign a negative task number.
- Give no new tasks if none are forthcoming. Do not suggest new tasks merely for the sake of it.
- Ensure any new tasks proposed are suitable for the role's seniority.
- Categories assigned to tasks MUST follow the task categories set out in the schema. No other values are acceptable.
- Your final output MUST be a single JSON object with one top-level key: 'tasks'. The value of 'tasks' must be a list of the task objects.
- Respond using only the provided tool, wrapped in <tool_code> tags.

INFORMATION:
<role_context>{job_context}</role_context>
<automated_tasks>{automated_tasks}</automated_tasks>
<remaining_tasks>{not_automated_tasks_csv}</remaining_tasks>";

/// Replace `{name}` placeholders. Unknown placeholders are left in place.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// Cut `text` to at most `max_chars` characters on a char boundary.
pub fn truncate_chars(text: &str, max_chars: usize) -> &str {
    match text.char_indices().nth(max_chars) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

/// `"\n1. first\n2. second"`.
pub fn numbered_list<'a>(tasks: impl IntoIterator<Item = (i64, &'a str)>) -> String {
    tasks.into_iter().map(|(n, t)| format!("\n{n}. {t}")).collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `task_number,task_details` rows with a header.
pub fn task_csv<'a>(tasks: impl IntoIterator<Item = (i64, &'a str)>) -> String {
    let mut out = String::from("task_number,task_details");
    for (n, t) in tasks {
        out.push('\n');
        out.push_str(&format!("{n},{}", csv_field(t)));
    }
    out
}

pub fn extraction_schema() -> Schema {
    Schema::new(
        "TaskOutput",
        "",
        vec![Field::new(
            "tasks",
            FieldType::list(FieldType::Object(vec![
                Field::new("task_number", FieldType::int()).describe("A unique task number"),
                Field::new("task_details", FieldType::String).describe("the text extract which describes the task"),
                Field::new("exposure_score", FieldType::unit_interval())
                    .describe("a score of range 0-1 of potential automation of the task with GPT technology"),
            ])),
        )
        .describe("A list of tasks extracted from job_advert")],
    )
}

pub fn scoring_schema() -> Schema {
    Schema::new(
        "AutomationScores",
        "A tool for structuring automation scores from a list of tasks.",
        vec![Field::new("scores", FieldType::Map(Box::new(FieldType::unit_interval())))
            .describe("A dictionary mapping each task ID to its automation exposure score (0.0 to 1.0)")],
    )
}

pub fn label_schema() -> Schema {
    Schema::new("ClusterLabel", "", vec![Field::new("label", FieldType::String)])
}

pub fn focus_schema() -> Schema {
    Schema::new(
        "TasktoFocus",
        "",
        vec![
            Field::new("task_number", FieldType::int()),
            Field::new("reasoning", FieldType::String).describe("Briefly, why should they focus on this task?"),
        ],
    )
}

pub fn theme_discovery_schema() -> Schema {
    Schema::new(
        "TaskReasonings",
        "Collection of key themes in reasonings",
        vec![Field::new(
            "query_output",
            FieldType::list(FieldType::Object(vec![
                Field::new("label", FieldType::String).describe("A short label for the theme"),
                Field::new("description", FieldType::String).describe("A brief description of the theme"),
            ])),
        )
        .describe("List of key themes and their labels")],
    )
}

pub fn theme_description(theme: Theme) -> &'static str {
    match theme {
        Theme::StrategicLeadershipAndVision => "Tasks involving setting strategic direction, developing policies, and leading organizational transformation, including decision-making that influences long-term outcomes and establishes foundational frameworks.",
        Theme::StakeholderManagementAndCommunication => "Tasks focused on building and maintaining relationships with stakeholders, including complex communication, knowledge transfer, and effective engagement across different audiences.",
        Theme::RiskAndQualityManagement => "Tasks involving risk assessment, security oversight, compliance monitoring, and quality assurance to maintain operational integrity and safety standards.",
        Theme::InnovationAndProcessExcellence => "Tasks centered on continuous improvement, modernization, and transformation of systems and processes, with emphasis on maximizing value and creating multiplier effects across the organization.",
        Theme::HumanCentricLeadership => "Tasks requiring uniquely human capabilities including team development, mentoring, empathy, and providing personalized services that cannot be automated.",
        Theme::ComplexProblemResolution => "Tasks requiring sophisticated analysis, investigation, and critical thinking to solve multifaceted problems, particularly in high-stakes situations that demand human judgment.",
    }
}

pub fn theme_schema() -> Schema {
    Schema::new(
        "ThemeApplication",
        "",
        Theme::ALL
            .iter()
            .map(|t| Field::new(t.key(), FieldType::IntEnum(vec![0, 1])).describe(theme_description(*t)))
            .collect(),
    )
}

/// The codebook as shown to the classifier.
pub fn consolidated_themes() -> String {
    Theme::ALL
        .iter()
        .map(|t| format!("- {}: {}", t.key(), theme_description(*t)))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn augment_schema() -> Schema {
    Schema::new(
        "Tasks",
        "",
        vec![Field::new(
            "tasks",
            FieldType::list(FieldType::Object(vec![
                Field::new("task_number", FieldType::int()).describe("The provided task number."),
                Field::new(
                    "label",
                    FieldType::enumeration(&[AugmentLabel::NoChange.as_str(), AugmentLabel::Augmented.as_str()]),
                )
                .describe("Whether the task is unchanged from AI or can be augmented."),
                Field::new("new_task_details", FieldType::String).describe("A description of the task."),
            ])),
        )
        .describe("A list of tasks in order of importance, the most important being first.")],
    )
}

pub fn new_tasks_schema() -> Schema {
    let cats: Vec<&str> = TaskCategory::ALL.iter().map(|c| c.as_str()).collect();
    Schema::new(
        "LLMTaskOutput",
        "A simple model that matches the LLM's direct output.",
        vec![Field::new(
            "tasks",
            FieldType::list(FieldType::Object(vec![
                Field::new("task_number", FieldType::int()),
                Field::new("task_details", FieldType::String),
                Field::new("task_category", FieldType::enumeration(&cats)),
            ])),
        )],
    )
}

pub fn extraction_request(id: &str, text: &str) -> StructuredRequest {
    StructuredRequest::new(
        id,
        EXTRACT_SYSTEM,
        render(EXTRACT_USER, &[("job_description", text)]),
        extraction_schema(),
    )
}

pub fn scoring_request(id: &str, tasks: &[String]) -> StructuredRequest {
    let formatted: String = tasks.iter().enumerate().map(|(i, t)| format!("\n{}: {t}", i + 1)).collect();
    StructuredRequest::new(
        id,
        SCORE_SYSTEM,
        render(SCORE_USER, &[("formatted_tasks", &formatted)]),
        scoring_schema(),
    )
}

pub fn label_request(id: &str, tasks: &[&str]) -> StructuredRequest {
    let list: String = tasks.iter().map(|t| format!("\n- {t}")).collect();
    StructuredRequest::new(id, LABEL_SYSTEM, render(LABEL_USER, &[("task_list", &list)]), label_schema())
}

pub fn focus_request(id: &str, job_title: &str, surviving: &[(i64, &str)]) -> StructuredRequest {
    let details = numbered_list(surviving.iter().copied());
    StructuredRequest::new(
        id,
        "",
        render(FOCUS_USER, &[("job_title", job_title), ("task_details", &details)]),
        focus_schema(),
    )
}

pub fn theme_request(id: &str, reasoning: &str) -> StructuredRequest {
    StructuredRequest::new(
        id,
        "",
        render(THEME_USER, &[("consolidated_themes", &consolidated_themes()), ("reasoning", reasoning)]),
        theme_schema(),
    )
}

pub fn theme_discovery_request(id: &str, reasonings: &[&str]) -> StructuredRequest {
    let formatted: String = reasonings.iter().map(|r| format!("\n- {r}")).collect();
    StructuredRequest::new(
        id,
        "",
        render(THEME_DISCOVERY_USER, &[("reasonings_formatted", &formatted)]),
        theme_discovery_schema(),
    )
}

pub fn augment_request(id: &str, job_title: &str, surviving: &[(i64, &str)], job_context: &str) -> StructuredRequest {
    let details = numbered_list(surviving.iter().copied());
    StructuredRequest::new(
        id,
        AUGMENT_SYSTEM,
        render(
            AUGMENT_USER,
            &[("job_title", job_title), ("task_details", &details), ("job_context", job_context)],
        ),
        augment_schema(),
    )
}

pub fn new_tasks_request(
    id: &str,
    job_title: &str,
    department: &str,
    job_context: &str,
    automated: &[(i64, &str)],
    surviving: &[(i64, &str)],
) -> StructuredRequest {
    let n = automated.len().to_string();
    let automated_text = numbered_list(automated.iter().copied());
    let remaining = task_csv(surviving.iter().copied());
    StructuredRequest::new(
        id,
        NEW_TASKS_SYSTEM,
        render(
            NEW_TASKS_USER,
            &[
                ("job_title", job_title),
                ("dept_key", department),
                ("n_automated_tasks", &n),
                ("job_context", job_context),
                ("automated_tasks", &automated_text),
                ("not_automated_tasks_csv", &remaining),
            ],
        ),
        new_tasks_schema(),
    )
}

// Decoders assume the payload already validated against its schema.

fn int(v: &Value) -> i64 {
    v.as_i64().unwrap_or_else(|| v.as_f64().unwrap_or(0.0) as i64)
}

fn text(v: &Value) -> String {
    v.as_str().unwrap_or_default().trim().to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedTask {
    pub task_number: i64,
    pub task_details: String,
    pub exposure_score: f64,
}

pub fn decode_extraction(payload: &Value) -> Vec<ExtractedTask> {
    payload["tasks"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|t| ExtractedTask {
                    task_number: int(&t["task_number"]),
                    task_details: text(&t["task_details"]),
                    exposure_score: t["exposure_score"].as_f64().unwrap_or(0.0),
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Scores keyed by 1-based position; `None` where the key is absent.
pub fn decode_scores(payload: &Value, count: usize) -> Vec<Option<f64>> {
    (1..=count).map(|i| payload["scores"][i.to_string()].as_f64()).collect()
}

pub fn decode_label(payload: &Value) -> String {
    text(&payload["label"])
}

pub fn decode_focus(payload: &Value) -> (i64, String) {
    (int(&payload["task_number"]), text(&payload["reasoning"]))
}

pub fn decode_theme_flags(payload: &Value) -> [bool; 6] {
    let mut flags = [false; 6];
    for (f, t) in flags.iter_mut().zip(Theme::ALL) {
        *f = int(&payload[t.key()]) == 1;
    }
    flags
}

pub fn decode_themes(payload: &Value) -> Result<ThemeSet, task_exposure_core::redesign::RedesignError> {
    ThemeSet::from_flags(decode_theme_flags(payload))
}

pub fn decode_augment(payload: &Value) -> Result<Vec<AugmentItem>, task_exposure_core::redesign::RedesignError> {
    payload["tasks"]
        .as_array()
        .map(|a| a.as_slice())
        .unwrap_or_default()
        .iter()
        .map(|t| {
            Ok(AugmentItem {
                task_number: int(&t["task_number"]),
                label: AugmentLabel::parse(t["label"].as_str().unwrap_or_default())?,
                new_task_details: text(&t["new_task_details"]),
            })
        })
        .collect()
}

pub fn decode_new_tasks(payload: &Value) -> Result<Vec<NewTaskItem>, task_exposure_core::redesign::RedesignError> {
    payload["tasks"]
        .as_array()
        .map(|a| a.as_slice())
        .unwrap_or_default()
        .iter()
        .map(|t| {
            Ok(NewTaskItem {
                task_number: int(&t["task_number"]),
                task_details: text(&t["task_details"]),
                category: TaskCategory::parse(t["task_category"].as_str().unwrap_or_default())?,
            })
        })
        .collect()
}
