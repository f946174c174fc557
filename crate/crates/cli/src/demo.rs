//! A small self-contained corpus with reference tables, a keyword-driven
//! stand-in for the language model, and a recorder that turns its answers
//! into a strict fixture file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use task_exposure_core::redesign::{AugmentLabel, TaskCategory, Theme};

use crate::artifacts::ArtifactError;
use crate::config::PipelineConfig;
use crate::gateway::mock::{MissPolicy, MockProvider, Responder};
use crate::gateway::{Gateway, StructuredRequest};
use crate::pipeline::{batch_policy, Pipeline, PipelineError};

pub const CONFIG_FILE: &str = "config.toml";
pub const CORPUS_FILE: &str = "vacancies.jsonl";
pub const FTE_FILE: &str = "fte.csv";
pub const SALARY_FILE: &str = "salary.csv";
pub const PROFESSIONS_FILE: &str = "professions.csv";
pub const FIXTURES_FILE: &str = "fixtures.json";

struct Advert {
    id: &'static str,
    title: &'static str,
    department: &'static str,
    grade: &'static str,
    profession: &'static str,
    intro: &'static str,
    tasks: &'static [&'static str],
    summary: &'static str,
}

const ADVERTS: &[Advert] = &[
    Advert {
        id: "V001",
        title: "Policy Adviser, Immigration",
        department: "HO",
        grade: "Higher Executive Officer",
        profession: "Policy",
        intro: "You will join a busy policy team working on the asylum system.",
        tasks: &[
            "Draft ministerial submissions and briefing notes on asylum policy",
            "Analyse migration statistics to inform policy options",
            "Engage stakeholders across government and the voluntary sector",
            "Develop proposals for changes to immigration legislation",
            "Prepare responses to parliamentary questions and correspondence",
            "Manage risks to delivery of the policy programme",
        ],
        summary: "Policy adviser on asylum reform.",
    },
    Advert {
        id: "V002",
        title: "Casework Officer",
        department: "HO",
        grade: "EO",
        profession: "Operational Delivery",
        intro: "Our casework directorate decides visa applications from across the world.",
        tasks: &[
            "Process visa casework applications against published guidance",
            "Update case records on the caseworking database",
            "Respond to customer enquiries by phone and email",
            "Draft decision letters for applicants",
            "Identify fraud indicators and refer suspicious applications",
            "Share knowledge with colleagues through peer review",
        ],
        summary: "Visa casework decisions.",
    },
    Advert {
        id: "V003",
        title: "Administrative Officer",
        department: "DfE",
        grade: "AO",
        profession: "Other",
        intro: "A varied support role in the school funding directorate.",
        tasks: &[
            "Carry out data entry of school funding returns",
            "Maintain the electronic filing system for the unit",
            "Schedule meetings and keep diaries up to date",
            "Take minutes at project board meetings",
            "Collate weekly management information returns",
            "Answer general enquiries from schools",
        ],
        summary: "Administrative support for school funding.",
    },
    Advert {
        id: "V004",
        title: "Data Analyst",
        department: "DfE",
        grade: "SEO",
        profession: "Digital",
        intro: "Help us turn pupil data into evidence for decisions.",
        tasks: &[
            "Build dashboards to monitor pupil attainment",
            "Write SQL queries to extract records from the pupil database",
            "Produce statistical summaries for publication",
            "Quality check analysis produced by other analysts",
            "Present findings to policy colleagues",
            "Coach junior analysts on coding standards",
        ],
        summary: "Analyst for pupil attainment data.",
    },
    Advert {
        id: "V005",
        title: "Prison Operations Manager",
        department: "MoJ",
        grade: "Grade 7",
        profession: "Operational Delivery",
        intro: "Run day-to-day operations in a busy local prison.",
        tasks: &[
            "Lead the operational management of a category B prison wing",
            "Line manage a group of custodial managers",
            "Oversee safety and security risk assessments",
            "Compile daily operational logs and incident records",
            "Manage the residential unit budget",
            "Work with probation partners on resettlement plans",
        ],
        summary: "Operations manager for a prison wing.",
    },
    Advert {
        id: "V006",
        title: "Deputy Director, Justice Reform",
        department: "MoJ",
        grade: "SCS Pay Band 1",
        profession: "Policy",
        intro: "A senior leadership role at the heart of the reform programme.",
        tasks: &[
            "Set the strategic direction for courts reform",
            "Represent the department at cross-government boards",
            "Head a directorate of around 120 staff",
            "Negotiate spending settlements with HM Treasury",
            "Account to ministers for delivery of reform objectives",
            "Hold senior leaders to account for programme risk",
        ],
        summary: "Senior leader for justice reform.",
    },
    Advert {
        id: "V007",
        title: "Finance Business Partner",
        department: "HMRC",
        grade: "Grade 7",
        profession: "Finance",
        intro: "Partner with budget holders to get the most from public money.",
        tasks: &[
            "Prepare monthly budget forecasts for the business area",
            "Reconcile ledger entries and post accruals",
            "Advise budget holders on financial performance",
            "Produce variance analysis for the executive committee",
            "Support the annual business planning round",
            "Challenge spending decisions against value for money criteria",
        ],
        summary: "Finance partner for a business area.",
    },
    Advert {
        id: "V008",
        title: "Digital Service Designer",
        department: "HMRC",
        grade: "HEO",
        profession: "Digital",
        intro: "Design online tax services that work for everyone.",
        tasks: &[
            "Map user journeys through the online tax service",
            "Run research sessions with taxpayers",
            "Prototype changes with developers and content designers",
            "Write up design decisions in a shared design log",
            "Draft content for online guidance pages",
            "Facilitate workshops with stakeholders across the department",
        ],
        summary: "Service designer for online tax.",
    },
    Advert {
        id: "V009",
        title: "Correspondence Officer",
        department: "HO",
        grade: "AA",
        profession: "Other",
        intro: "Join our correspondence team.",
        tasks: &["Handle incoming post"],
        summary: "Main duties:\n- Log incoming correspondence on the tracking system\n- Draft standard replies using approved templates\n- Allocate complex letters to policy teams\n- Chase overdue responses with business areas\n- File closed cases in the archive\n- Escalate complaints from members of the public",
    },
    Advert {
        id: "V010",
        title: "Management Accountant",
        department: "DfE",
        grade: "Executive Officer",
        profession: "Finance",
        intro: "Keep the department's accounts accurate and on time.",
        tasks: &[
            "Post journals and maintain the fixed asset register",
            "Prepare balance sheet reconciliations",
            "Run month-end reports from the finance system",
            "Support external audit requests",
            "Monitor spend against budget for programme teams",
            "Update cost centre records",
        ],
        summary: "Accountant in the central finance team.",
    },
];

// Chosen so that a positive weighting of the sample (plus the OTHER_DEPTS
// cells) meets every margin exactly, which lets raking converge.
const FTE_CSV: &str = "department,AA/AO,EO,HEO/SEO,G6/G7,SCS
HO,3000,12000,10000,4800,200
DfE,600,1500,2800,1950,150
MoJ,6000,12000,7000,5100,150
HMRC,5000,11000,8000,3900,100
DWP,13000,25000,14000,12900,100
DEFRA,1400,1500,2700,8350,50
";

const SALARY_CSV: &str = "department,AA/AO,EO,HEO/SEO,G6/G7,SCS
HO,24100,29300,38600,62400,86000
DfE,23900,29000,38200,61800,85500
MoJ,23800,28800,37900,61500,c
HMRC,24000,29100,38400,62000,85800
DWP,23700,28700,37800,61200,85000
DEFRA,24200,29400,38900,62900,86500
";

const PROFESSIONS_CSV: &str = "profession,fte
Policy,14750
Operational Delivery,92500
Digital,30500
Finance,7500
Other,29000
";

const CONFIG_TOML: &str = r#"seed = 7

[paths]
corpus = "vacancies.jsonl"
fte = "fte.csv"
salary = "salary.csv"
professions = "professions.csv"
output_dir = "out"
fixtures = "fixtures.json"

[raking]
max_iterations = 500

[redesign]
sample_fraction = 1.0

[provider]
kind = "mock"
mock_miss = "strict"
"#;

fn corpus_jsonl() -> String {
    ADVERTS
        .iter()
        .map(|a| {
            let bullets: String = a.tasks.iter().map(|t| format!("\n- {t}")).collect();
            json!({
                "vacancy_id": a.id,
                "title": a.title,
                "department": a.department,
                "grade_raw": a.grade,
                "profession": a.profession,
                "posting_date": "2024-03-01",
                "closing_date": "2024-03-29",
                "job_summary": a.summary,
                "job_description": format!("{}\nResponsibilities:{bullets}", a.intro),
            })
            .to_string()
                + "\n"
        })
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> std::io::Result<PathBuf> {
    let p = dir.join(name);
    std::fs::write(&p, text)?;
    Ok(p)
}

/// Corpus, reference tables and config, without fixtures.
pub fn write_inputs(dir: &Path) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    write(dir, CORPUS_FILE, &corpus_jsonl())?;
    write(dir, FTE_FILE, FTE_CSV)?;
    write(dir, SALARY_FILE, SALARY_CSV)?;
    write(dir, PROFESSIONS_FILE, PROFESSIONS_CSV)?;
    write(dir, CONFIG_FILE, CONFIG_TOML)
}

/// Write the demo inputs, answer every prompt with the keyword responder,
/// and save the answers as a strict fixture table. Returns the config path.
pub fn write_demo(dir: &Path) -> Result<PathBuf, PipelineError> {
    let io = |source: std::io::Error| {
        PipelineError::Artifact(ArtifactError::Io {
            path: dir.display().to_string(),
            source,
        })
    };
    let config_path = write_inputs(dir).map_err(io)?;
    let mut cfg = PipelineConfig::load(&config_path)?;
    let scratch = dir.join(".record");
    cfg.paths.output_dir = scratch.clone();
    let mock = Arc::new(
        MockProvider::new(MissPolicy::Strict)
            .with_model_id("keyword-responder")
            .with_responder(keyword_responder()),
    );
    let gw = Gateway::new(Box::new(mock.clone()), None, batch_policy(&cfg));
    let mut pipeline = Pipeline::with_gateway(cfg, gw);
    let runs = pipeline.run_all()?;
    if let Some(r) = runs.iter().find(|r| r.is_partial()) {
        return Err(PipelineError::Provider(format!("recording left stage {} partial", r.stage)));
    }
    mock.save_recorded(&dir.join(FIXTURES_FILE)).map_err(io)?;
    std::fs::remove_dir_all(&scratch).map_err(io)?;
    Ok(config_path)
}

const RULES: &[(&[&str], TaskCategory, f64)] = &[
    (&["data entry", "record", "log ", " log", "filing", "file ", "reconcil"], TaskCategory::RecordsManagement, 0.86),
    (
        &["minute", "draft", "correspondence", "letter", "diar", "schedul", "summar", "collate", "template"],
        TaskCategory::AdminSupport,
        0.8,
    ),
    (&["prison", "custod", "offender", "residential"], TaskCategory::PrisonManagement, 0.18),
    (&["line manage", "coach", "mentor", "directorate of", "staff"], TaskCategory::TeamLeadership, 0.2),
    (&["negotiat", "stakeholder", "partner", "represent", "minister", "engage"], TaskCategory::StakeholderEngagement, 0.3),
    (&["risk", "assurance", "compliance", "audit", "fraud"], TaskCategory::RiskManagement, 0.42),
    (&["budget", "forecast", "business plan", "performance", "objectives"], TaskCategory::PerformancePlanning, 0.5),
    (&["analys", "statistic", "dashboard", "quer", "report"], TaskCategory::DataAnalysis, 0.62),
    (&["policy", "legislat", "brief", "strateg"], TaskCategory::PolicyDevelopment, 0.45),
    (&["customer", "casework", "case", "enquir", "service", "user"], TaskCategory::ServiceDelivery, 0.55),
];

fn jitter(text: &str) -> f64 {
    let h = Sha256::digest(text.as_bytes());
    (f64::from(h[0]) / 255.0 - 0.5) * 0.12
}

/// Keyword category and automation score for a task description.
pub fn classify(text: &str) -> (TaskCategory, f64) {
    let lower = format!(" {} ", text.to_lowercase());
    let (cat, base) = RULES
        .iter()
        .find(|(needles, _, _)| needles.iter().any(|n| lower.contains(n)))
        .map(|&(_, c, s)| (c, s))
        .unwrap_or((TaskCategory::AdminSupport, 0.5));
    let s = (base + jitter(text)).clamp(0.02, 0.98);
    (cat, (s * 100.0).round() / 100.0)
}

/// Text after the last `open` and before the next `close`. Templates can
/// mention a tag in their instructions before the tagged block itself.
fn between<'a>(text: &'a str, open: &str, close: &str) -> &'a str {
    let start = match text.rfind(open) {
        Some(i) => i + open.len(),
        None => return "",
    };
    let rest = &text[start..];
    &rest[..rest.find(close).unwrap_or(rest.len())]
}

fn bullets(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix("- ").or_else(|| l.trim().strip_prefix("* ")))
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

/// `N. text` lines, or `N: text` when `sep` is `':'`.
fn numbered(text: &str, sep: char) -> Vec<(i64, String)> {
    text.lines()
        .filter_map(|l| {
            let (n, rest) = l.trim().split_once(sep)?;
            Some((n.trim().parse().ok()?, rest.trim().to_string()))
        })
        .collect()
}

fn csv_rows(text: &str) -> Vec<(i64, String)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.trim().as_bytes());
    rdr.records()
        .filter_map(|r| {
            let r = r.ok()?;
            Some((r.get(0)?.trim().parse().ok()?, r.get(1)?.to_string()))
        })
        .collect()
}

fn extraction(req: &StructuredRequest) -> Value {
    let tasks: Vec<Value> = bullets(between(&req.user_prompt, "<job_description>", "</job_description>"))
        .iter()
        .enumerate()
        .map(|(i, t)| json!({"task_number": i + 1, "task_details": t, "exposure_score": classify(t).1}))
        .collect();
    json!({ "tasks": tasks })
}

fn scores(req: &StructuredRequest) -> Value {
    let map: serde_json::Map<String, Value> = numbered(between(&req.user_prompt, "<tasks>", "</tasks>"), ':')
        .into_iter()
        .map(|(n, t)| (n.to_string(), json!(classify(&t).1)))
        .collect();
    json!({ "scores": map })
}

fn label(req: &StructuredRequest) -> Value {
    let mut counts = [0usize; TaskCategory::ALL.len()];
    for t in bullets(between(&req.user_prompt, "<tasks>", "</tasks>")) {
        let c = classify(&t).0;
        counts[TaskCategory::ALL.iter().position(|x| *x == c).unwrap_or(0)] += 1;
    }
    let best = (0..counts.len()).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap_or(0);
    json!({ "label": TaskCategory::ALL[best].label() })
}

fn reasoning_for(cat: TaskCategory) -> &'static str {
    match cat {
        TaskCategory::TeamLeadership | TaskCategory::PrisonManagement => {
            "Developing the team and coaching colleagues is human work that lifts everyone's output."
        }
        TaskCategory::StakeholderEngagement => {
            "Stronger stakeholder relationships and clear communication unlock the value of the rest of the work."
        }
        TaskCategory::RiskManagement => "Closer attention to risk protects quality as more of the work is automated.",
        TaskCategory::PolicyDevelopment | TaskCategory::PerformancePlanning => {
            "Setting strategic direction has the widest long-term effect on outcomes."
        }
        TaskCategory::ServiceDelivery => "Time spent here can improve the process for every user of the service.",
        _ => "This is a complex problem that needs judgement the tools cannot supply.",
    }
}

fn focus(req: &StructuredRequest) -> Value {
    let list = between(&req.user_prompt, "remaining responsibilities:", " where should they focus");
    let pick = numbered(list, '.')
        .into_iter()
        .map(|(n, t)| (classify(&t), n))
        .min_by(|a, b| a.0 .1.total_cmp(&b.0 .1).then(a.1.cmp(&b.1)));
    match pick {
        Some(((cat, _), n)) => json!({"task_number": n, "reasoning": reasoning_for(cat)}),
        None => json!({"task_number": 1, "reasoning": reasoning_for(TaskCategory::AdminSupport)}),
    }
}

const THEME_CUES: &[(Theme, &[&str])] = &[
    (Theme::StrategicLeadershipAndVision, &["strategic", "direction"]),
    (Theme::StakeholderManagementAndCommunication, &["stakeholder", "communication"]),
    (Theme::RiskAndQualityManagement, &["risk", "quality"]),
    (Theme::InnovationAndProcessExcellence, &["improve", "process"]),
    (Theme::HumanCentricLeadership, &["team", "coach", "human"]),
    (Theme::ComplexProblemResolution, &["complex", "judgement"]),
];

fn themes(req: &StructuredRequest) -> Value {
    let reasoning = between(&req.user_prompt, "Their reasoning is:\n", "\nReply using").to_lowercase();
    let mut hits: Vec<Theme> = THEME_CUES
        .iter()
        .filter(|(_, cues)| cues.iter().any(|c| reasoning.contains(c)))
        .map(|(t, _)| *t)
        .take(3)
        .collect();
    if hits.is_empty() {
        hits.push(Theme::ComplexProblemResolution);
    }
    let map: serde_json::Map<String, Value> = Theme::ALL
        .iter()
        .map(|t| (t.key().to_string(), json!(i64::from(hits.contains(t)))))
        .collect();
    Value::Object(map)
}

fn augment(req: &StructuredRequest) -> Value {
    let mut items: Vec<(f64, i64, String)> = numbered(between(&req.user_prompt, "<tasks>", "</tasks>"), '.')
        .into_iter()
        .map(|(n, t)| (classify(&t).1, n, t))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let tasks: Vec<Value> = items
        .into_iter()
        .map(|(s, n, t)| {
            if s >= 0.5 {
                let mut c = t.chars();
                let lowered = c.next().map(|f| f.to_lowercase().chain(c).collect::<String>()).unwrap_or_default();
                json!({"task_number": n, "label": AugmentLabel::Augmented.as_str(), "new_task_details": format!("Use AI tools to {lowered}")})
            } else {
                json!({"task_number": n, "label": AugmentLabel::NoChange.as_str(), "new_task_details": t})
            }
        })
        .collect();
    json!({ "tasks": tasks })
}

fn new_tasks(req: &StructuredRequest) -> Value {
    let automated = numbered(between(&req.user_prompt, "<automated_tasks>", "</automated_tasks>"), '.').len();
    let mut tasks = Vec::new();
    if automated > 0 {
        tasks.push(json!({
            "task_number": -1,
            "task_details": "Check the quality of AI-assisted outputs and manage the risks they introduce",
            "task_category": TaskCategory::RiskManagement.as_str(),
        }));
    }
    for (n, t) in csv_rows(between(&req.user_prompt, "<remaining_tasks>", "</remaining_tasks>")) {
        tasks.push(json!({"task_number": n, "task_details": t, "task_category": classify(&t).0.as_str()}));
    }
    json!({ "tasks": tasks })
}

/// Deterministic answers for every prompt the pipeline sends, chosen by the
/// schema name. Unknown schemas get no answer.
pub fn respond(req: &StructuredRequest) -> Option<Value> {
    Some(match req.schema.name.as_str() {
        "TaskOutput" => extraction(req),
        "AutomationScores" => scores(req),
        "ClusterLabel" => label(req),
        "TasktoFocus" => focus(req),
        "ThemeApplication" => themes(req),
        "Tasks" => augment(req),
        "LLMTaskOutput" => new_tasks(req),
        _ => return None,
    })
}

pub fn keyword_responder() -> Responder {
    Box::new(|req| respond(req).map(|v| v.to_string()))
}
