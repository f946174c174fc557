//! Vacancy corpus and workforce reference tables.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead};
use std::path::Path;
use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

use task_exposure_core::grade::{GradeBucket, GradeMap};
use task_exposure_core::numeric;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {message}")]
    Table { path: String, message: String },
    #[error("{path}: invalid config: {message}")]
    Config { path: String, message: String },
}

/// One advert. `grade` is always recomputed from `grade_raw` on ingest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vacancy {
    pub vacancy_id: String,
    #[serde(default)]
    pub title: String,
    pub department: String,
    pub grade_raw: String,
    #[serde(with = "grade_serde", default = "unmapped")]
    pub grade: GradeBucket,
    #[serde(default = "other")]
    pub profession: String,
    #[serde(default)]
    pub posting_date: Option<NaiveDate>,
    #[serde(default)]
    pub closing_date: Option<NaiveDate>,
    #[serde(default)]
    pub job_summary: String,
    pub job_description: String,
}

fn unmapped() -> GradeBucket {
    GradeBucket::Unmapped
}

fn other() -> String {
    "Other".to_string()
}

pub mod grade_serde {
    use serde::{Deserialize, Deserializer, Serializer};
    use task_exposure_core::grade::GradeBucket;

    pub fn serialize<S: Serializer>(g: &GradeBucket, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(g.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GradeBucket, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub vacancy_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub vacancies: Vec<Vacancy>,
    pub diagnostics: Vec<Diagnostic>,
}

fn email_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,}").unwrap())
}

fn phone_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:\+44\s?(?:\(0\)\s?)?|\b0)\d{2,4}[\s\-]?\d{3,4}[\s\-]?\d{3,4}\b").unwrap())
}

/// Replace email addresses and UK-style phone numbers.
pub fn scrub_pii(text: &str) -> String {
    let t = email_re().replace_all(text, "[email]");
    phone_re().replace_all(&t, "[phone]").into_owned()
}

fn diag(line: usize, id: Option<&str>, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        line,
        vacancy_id: id.map(str::to_string),
        message: message.into(),
    }
}

/// Parse one vacancy per line. Malformed lines and duplicate ids are skipped
/// with a diagnostic; only an unreadable stream is fatal.
pub fn parse_vacancies(reader: impl BufRead, grades: &GradeMap) -> io::Result<ParsedCorpus> {
    let mut out = ParsedCorpus::default();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                out.diagnostics.push(diag(n, None, format!("not valid JSON: {e}")));
                continue;
            }
        };
        let id = value.get("vacancy_id").and_then(|v| v.as_str()).map(str::to_string);
        let mut v: Vacancy = match serde_json::from_value(value) {
            Ok(v) => v,
            Err(e) => {
                out.diagnostics.push(diag(n, id.as_deref(), format!("field error: {e}")));
                continue;
            }
        };
        if v.vacancy_id.trim().is_empty() {
            out.diagnostics.push(diag(n, None, "empty vacancy_id"));
            continue;
        }
        if v.department.trim().is_empty() {
            out.diagnostics.push(diag(n, Some(&v.vacancy_id), "empty department"));
            continue;
        }
        if v.job_description.trim().is_empty() && v.job_summary.trim().is_empty() {
            out.diagnostics.push(diag(n, Some(&v.vacancy_id), "no description or summary"));
            continue;
        }
        if !seen.insert(v.vacancy_id.clone()) {
            out.diagnostics.push(diag(n, Some(&v.vacancy_id), "duplicate vacancy_id"));
            continue;
        }
        v.grade = grades.map(&v.grade_raw);
        if v.profession.trim().is_empty() {
            v.profession = other();
        }
        v.job_summary = scrub_pii(&v.job_summary);
        v.job_description = scrub_pii(&v.job_description);
        out.vacancies.push(v);
    }
    Ok(out)
}

pub fn read_vacancies(path: &Path, grades: &GradeMap) -> Result<ParsedCorpus, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_vacancies(io::BufReader::new(file), grades).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// A reference-table cell; absent keys are simply not in the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Value(f64),
    Suppressed,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Suppressed => None,
        }
    }
}

pub const SUPPRESSED: &str = "c";

pub type GradeTable = BTreeMap<(String, GradeBucket), Cell>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceTables {
    pub fte: GradeTable,
    pub median_salary: GradeTable,
    pub professions: BTreeMap<String, f64>,
    pub population_total: f64,
}

/// Controlled vocabularies; empty lists disable the check.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    #[serde(default)]
    pub departments: Vec<String>,
    #[serde(default)]
    pub professions: Vec<String>,
    /// Extra grade aliases: alias text → bucket name.
    #[serde(default)]
    pub grade_aliases: BTreeMap<String, String>,
}

impl Vocabulary {
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CorpusError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn grade_map(&self) -> Result<GradeMap, CorpusError> {
        let mut map = GradeMap::default();
        for (alias, bucket) in &self.grade_aliases {
            let b: GradeBucket = bucket.parse().map_err(|e: task_exposure_core::grade::UnknownGradeBucket| {
                CorpusError::Config {
                    path: "grade_aliases".into(),
                    message: e.to_string(),
                }
            })?;
            map.insert(alias, b);
        }
        Ok(map)
    }
}

fn table_err(path: &Path, message: impl Into<String>) -> CorpusError {
    CorpusError::Table {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Wide table: `department` column then one column per grade bucket.
pub fn read_grade_table(path: &Path, vocab: &Vocabulary) -> Result<GradeTable, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| table_err(path, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| table_err(path, e.to_string()))?.clone();
    if headers.get(0).map(|h| h.to_ascii_lowercase()) != Some("department".into()) {
        return Err(table_err(path, "first column must be `department`"));
    }
    let mut grades = Vec::new();
    for h in headers.iter().skip(1) {
        let g: GradeBucket = h.parse().map_err(|_| table_err(path, format!("unknown grade column `{h}`")))?;
        if !g.is_mapped() {
            return Err(table_err(path, "`Unmapped` is not a valid column"));
        }
        grades.push(g);
    }
    let mut table = GradeTable::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| table_err(path, e.to_string()))?;
        let dept = rec.get(0).unwrap_or("").to_string();
        if dept.is_empty() {
            return Err(table_err(path, format!("row {}: empty department", row + 2)));
        }
        if !vocab.departments.is_empty() && !vocab.departments.contains(&dept) {
            return Err(table_err(path, format!("department `{dept}` is not in the vocabulary")));
        }
        for (g, raw) in grades.iter().zip(rec.iter().skip(1)) {
            if raw.is_empty() {
                continue;
            }
            let cell = if raw.eq_ignore_ascii_case(SUPPRESSED) {
                Cell::Suppressed
            } else {
                let v: f64 = raw
                    .replace(',', "")
                    .parse()
                    .map_err(|_| table_err(path, format!("row {}: `{raw}` is not a number", row + 2)))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(table_err(path, format!("row {}: negative value", row + 2)));
                }
                Cell::Value(v)
            };
            table.insert((dept.clone(), *g), cell);
        }
    }
    Ok(table)
}

/// Two columns: `profession,fte`.
pub fn read_profession_table(path: &Path, vocab: &Vocabulary) -> Result<BTreeMap<String, f64>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| table_err(path, e.to_string()))?;
    let mut out = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| table_err(path, e.to_string()))?;
        let name = rec.get(0).unwrap_or("").to_string();
        let raw = rec.get(1).unwrap_or("");
        if !vocab.professions.is_empty() && !vocab.professions.contains(&name) {
            return Err(table_err(path, format!("profession `{name}` is not in the vocabulary")));
        }
        let v: f64 = raw
            .replace(',', "")
            .parse()
            .map_err(|_| table_err(path, format!("row {}: `{raw}` is not a number", row + 2)))?;
        out.insert(name, v);
    }
    Ok(out)
}

impl ReferenceTables {
    /// `population_total` defaults to the sum of unsuppressed FTE cells.
    pub fn load(
        fte: &Path,
        salary: &Path,
        professions: &Path,
        population_total: Option<f64>,
        vocab: &Vocabulary,
    ) -> Result<Self, CorpusError> {
        let fte = read_grade_table(fte, vocab)?;
        let median_salary = read_grade_table(salary, vocab)?;
        let professions = read_profession_table(professions, vocab)?;
        let population_total =
            population_total.unwrap_or_else(|| numeric::sum(fte.values().filter_map(|c| c.value())));
        Ok(ReferenceTables {
            fte,
            median_salary,
            professions,
            population_total,
        })
    }

    /// FTE per department summed over grades (suppressed cells skipped).
    pub fn department_totals(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for ((d, _), c) in &self.fte {
            *out.entry(d.clone()).or_default() += c.value().unwrap_or(0.0);
        }
        out
    }

    pub fn grade_totals(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for ((_, g), c) in &self.fte {
            *out.entry(g.as_str().to_string()).or_default() += c.value().unwrap_or(0.0);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum SalaryLookup {
    Found(f64),
    Suppressed,
    Missing,
    UnmappedGrade,
}

impl SalaryLookup {
    pub fn amount(self) -> Option<f64> {
        match self {
            SalaryLookup::Found(v) => Some(v),
            _ => None,
        }
    }
}

pub fn join_salary(v: &Vacancy, tables: &ReferenceTables) -> SalaryLookup {
    if !v.grade.is_mapped() {
        return SalaryLookup::UnmappedGrade;
    }
    match tables.median_salary.get(&(v.department.clone(), v.grade)) {
        Some(Cell::Value(s)) if *s > 0.0 => SalaryLookup::Found(*s),
        Some(Cell::Value(_)) => SalaryLookup::Missing,
        Some(Cell::Suppressed) => SalaryLookup::Suppressed,
        None => SalaryLookup::Missing,
    }
}

/// Departments with fewer than `min` vacancies.
pub fn small_departments(vacancies: &[Vacancy], min: usize) -> BTreeSet<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in vacancies {
        *counts.entry(&v.department).or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|(_, c)| *c < min)
        .map(|(d, _)| d.to_string())
        .collect()
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;
    use std::io::Write;

    fn line(id: &str, extra: &str) -> String {
        format!(
            r#"{{"vacancy_id":"{id}","title":"Officer","department":"HO","grade_raw":"Executive Officer","job_description":"Handle cases."{extra}}}"#
        )
    }

    #[test]
    fn parses_well_formed_records() {
        let text = [line("a", ""), line("b", ""), line("c", r#","posting_date":"2023-04-01""#)].join("\n");
        let c = parse_vacancies(Cursor::new(text), &GradeMap::default()).unwrap();
        assert_eq!(c.vacancies.len(), 3);
        assert!(c.diagnostics.is_empty());
        assert_eq!(c.vacancies[0].grade, GradeBucket::Eo);
        assert_eq!(c.vacancies[2].posting_date, parse_date("2023-04-01"));
        assert_eq!(c.vacancies[0].profession, "Other");
    }

    #[test]
    fn malformed_records_are_skipped() {
        let text = [
            r#"{"title":"x","department":"HO","grade_raw":"EO","job_description":"d"}"#.to_string(),
            "not json".to_string(),
            line("a", ""),
            line("a", ""),
            r#"{"vacancy_id":"z","department":"HO","grade_raw":"EO","job_description":"  "}"#.to_string(),
        ]
        .join("\n");
        let c = parse_vacancies(Cursor::new(text), &GradeMap::default()).unwrap();
        assert_eq!(c.vacancies.len(), 1);
        assert_eq!(c.diagnostics.len(), 4);
        assert_eq!(c.diagnostics[2].message, "duplicate vacancy_id");
    }

    #[test]
    fn round_trip_is_exact() {
        let text = line("a", r#","job_summary":"Team of 5","closing_date":"2023-05-02","profession":"Policy""#);
        let c = parse_vacancies(Cursor::new(text), &GradeMap::default()).unwrap();
        let ser = serde_json::to_string(&c.vacancies[0]).unwrap();
        let again = parse_vacancies(Cursor::new(ser.clone()), &GradeMap::default()).unwrap();
        assert_eq!(again.vacancies, c.vacancies);
        assert_eq!(serde_json::to_string(&again.vacancies[0]).unwrap(), ser);
    }

    #[test]
    fn pii_is_scrubbed() {
        let s = scrub_pii("Contact jane.doe@dept.gov.uk or 020 7946 0018 or +44 7700 900123.");
        assert_eq!(s, "Contact [email] or [phone] or [phone].");
        assert_eq!(scrub_pii("Band 3 role, 37 hours"), "Band 3 role, 37 hours");
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn reference_tables_and_salary_join() {
        let dir = tempfile::tempdir().unwrap();
        let fte = write(dir.path(), "fte.csv", "department,AA/AO,EO\nHO,100,c\nDfE,50,25\n");
        let sal = write(dir.path(), "sal.csv", "department,AA/AO,EO\nHO,24000,28000\nDfE,c,\n");
        let prof = write(dir.path(), "prof.csv", "profession,fte\nPolicy,60\nOther,115\n");
        let t = ReferenceTables::load(&fte, &sal, &prof, None, &Vocabulary::default()).unwrap();
        assert_eq!(t.population_total, 175.0);
        assert_eq!(t.fte[&("HO".into(), GradeBucket::Eo)], Cell::Suppressed);
        let mut v = Vacancy {
            vacancy_id: "x".into(),
            title: String::new(),
            department: "HO".into(),
            grade_raw: "EO".into(),
            grade: GradeBucket::Eo,
            profession: "Other".into(),
            posting_date: None,
            closing_date: None,
            job_summary: String::new(),
            job_description: "d".into(),
        };
        assert_eq!(join_salary(&v, &t), SalaryLookup::Found(28_000.0));
        v.department = "DfE".into();
        assert_eq!(join_salary(&v, &t), SalaryLookup::Missing);
        v.grade = GradeBucket::AaAo;
        assert_eq!(join_salary(&v, &t), SalaryLookup::Suppressed);
        v.department = "MoJ".into();
        assert_eq!(join_salary(&v, &t), SalaryLookup::Missing);
        v.grade = GradeBucket::Unmapped;
        assert_eq!(join_salary(&v, &t), SalaryLookup::UnmappedGrade);
        assert_eq!(t.department_totals()["HO"], 100.0);
    }

    #[test]
    fn vocabulary_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let fte = write(dir.path(), "fte.csv", "department,EO\nXYZ,1\n");
        let vocab = Vocabulary {
            departments: vec!["HO".into()],
            ..Default::default()
        };
        assert!(matches!(read_grade_table(&fte, &vocab), Err(CorpusError::Table { .. })));
    }
}
