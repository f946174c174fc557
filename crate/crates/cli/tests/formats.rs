//! Corpus, reference-table and artifact formats.

use std::io::Cursor;

use proptest::prelude::*;

use task_exposure::artifacts::{read_jsonl, write_jsonl};
use task_exposure::corpus::{parse_vacancies, read_grade_table, read_profession_table, Cell, Vocabulary};
use task_exposure::records::WeightedTaskRow;
use task_exposure_core::grade::{GradeBucket, GradeMap};

#[test]
fn malformed_lines_are_diagnosed_not_fatal() {
    let text = concat!(
        r#"{"vacancy_id":"a","department":"HO","grade_raw":"Grade 7","job_description":"- x\n- y"}"#,
        "\n",
        "not json\n",
        r#"{"vacancy_id":"a","department":"HO","grade_raw":"EO","job_description":"dup"}"#,
        "\n",
        r#"{"vacancy_id":"b","department":"","grade_raw":"EO","job_description":"d"}"#,
        "\n",
        r#"{"vacancy_id":"c","department":"DfE","grade_raw":"Band Z","job_description":"","job_summary":"s"}"#,
        "\n",
    );
    let parsed = parse_vacancies(Cursor::new(text), &GradeMap::default()).unwrap();
    let ids: Vec<&str> = parsed.vacancies.iter().map(|v| v.vacancy_id.as_str()).collect();
    assert_eq!(ids, ["a", "c"]);
    assert_eq!(parsed.vacancies[0].grade, GradeBucket::G6G7);
    assert_eq!(parsed.vacancies[1].grade, GradeBucket::Unmapped);
    assert_eq!(parsed.vacancies[1].profession, "Other");
    assert_eq!(parsed.diagnostics.len(), 3);
}

#[test]
fn reference_tables() {
    let dir = tempfile::tempdir().unwrap();
    let fte = dir.path().join("fte.csv");
    std::fs::write(&fte, "department,AA/AO,EO,SCS\nHO,\"1,200\",c,\nDfE,10,20,3\n").unwrap();
    let t = read_grade_table(&fte, &Vocabulary::default()).unwrap();
    assert_eq!(t[&("HO".to_string(), GradeBucket::AaAo)], Cell::Value(1200.0));
    assert_eq!(t[&("HO".to_string(), GradeBucket::Eo)], Cell::Suppressed);
    assert!(!t.contains_key(&("HO".to_string(), GradeBucket::Scs)));

    let vocab = Vocabulary {
        departments: vec!["HO".into()],
        ..Vocabulary::default()
    };
    assert!(read_grade_table(&fte, &vocab).is_err());

    std::fs::write(&fte, "dept,EO\nHO,1\n").unwrap();
    assert!(read_grade_table(&fte, &Vocabulary::default()).is_err());
    std::fs::write(&fte, "department,Band Q\nHO,1\n").unwrap();
    assert!(read_grade_table(&fte, &Vocabulary::default()).is_err());

    let prof = dir.path().join("p.csv");
    std::fs::write(&prof, "profession,fte\nPolicy,10\nDigital,5\n").unwrap();
    let p = read_profession_table(&prof, &Vocabulary::default()).unwrap();
    assert_eq!(p.len(), 2);
    assert_eq!(p["Digital"], 5.0);
}

fn row() -> impl Strategy<Value = WeightedTaskRow> {
    (
        "[A-Z][0-9]{3}",
        1u32..20,
        "[a-zA-Z ,\"\\n]{0,40}",
        0.0f64..=1.0,
        0.0f64..=1.0,
        proptest::option::of(0.0f64..1e6),
    )
        .prop_map(|(id, n, details, exposure, weight, value)| WeightedTaskRow {
            vacancy_id: id,
            task_number: n,
            task_details: details,
            exposure,
            band: "High".into(),
            high: exposure >= 0.7,
            weight,
            hours: weight * 37.0,
            value,
        })
}

proptest! {
    #[test]
    fn jsonl_round_trip_is_exact(rows in proptest::collection::vec(row(), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        write_jsonl(&p, &rows).unwrap();
        let back: Vec<WeightedTaskRow> = read_jsonl(&p).unwrap();
        prop_assert_eq!(back, rows);
    }
}
