use std::io::Write;
use std::path::Path;

use eifeval::io::{load_bench_dataset, parse_bench_line, to_jsonl_line, write_bench_dataset};
use eifeval::{AuxTriple, BenchRecord, Error};
use proptest::prelude::*;

fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    for l in lines {
        writeln!(f, "{l}").unwrap();
    }
    f
}

const GOOD: &str = r#"{"id":"a","question":"q","answer":"1","ground_truth":"1","phi":1,"aux":[{"w1":"x","w2":"y","v":1},{"w1":"x","w2":"y","v":0}],"tau_pred":[0.9,0.7]}"#;
const GOOD_M2: &str = r#"{"id":"b","question":"q","answer":"1","ground_truth":"2","phi":0,"aux":[{"w1":"x","w2":"y","v":1},{"w1":"x","w2":"y","v":0},{"w1":"x","w2":"y","v":0}],"tau_pred":[0.1,0.2,0.3]}"#;

#[test]
fn blank_lines_are_skipped() {
    let f = write_lines(&[GOOD, "", "   ", GOOD]);
    assert_eq!(load_bench_dataset(f.path()).unwrap().len(), 2);
}

#[test]
fn empty_file_is_rejected() {
    let f = write_lines(&[]);
    assert!(matches!(load_bench_dataset(f.path()), Err(Error::Contract(_))));
}

#[test]
fn inconsistent_m_names_both_lines() {
    let f = write_lines(&[GOOD, GOOD, GOOD_M2]);
    let msg = load_bench_dataset(f.path()).unwrap_err().to_string();
    assert!(msg.contains("line 1") && msg.contains("line 3"), "{msg}");
}

#[test]
fn malformed_json_reports_line() {
    let f = write_lines(&[GOOD, r#"{"id": "#]);
    match load_bench_dataset(f.path()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn wrong_types_are_contract_errors() {
    for bad in [
        GOOD.replace(r#""phi":1"#, r#""phi":"1""#),
        GOOD.replace(r#""phi":1"#, r#""phi":true"#),
        GOOD.replace(r#""v":1"#, r#""v":0.5"#),
        GOOD.replace("[0.9,0.7]", r#"["0.9",0.7]"#),
        GOOD.replace(r#""aux":[{"w1":"x","w2":"y","v":1},"#, r#""aux":["#).replace("[0.9,0.7]", "[0.9]"),
    ] {
        let err = parse_bench_line(&bad, Path::new("f"), 1).unwrap_err();
        assert!(matches!(err, Error::Contract(_)), "{bad}: {err}");
    }
}

fn arb_record() -> impl Strategy<Value = BenchRecord> {
    (1usize..6).prop_flat_map(|slots| {
        (
            "[a-z0-9-]{1,12}",
            ".{0,40}",
            ".{0,10}",
            ".{0,10}",
            any::<bool>(),
            prop::collection::vec((".{0,20}", ".{0,20}", any::<bool>()), slots + 1),
            prop::collection::vec(-0.5f64..1.5, slots + 1),
        )
            .prop_map(|(id, question, answer, ground_truth, phi, aux, tau_pred)| BenchRecord {
                id,
                question,
                answer,
                ground_truth,
                phi,
                aux: aux.into_iter().map(|(a, b, v)| AuxTriple::new(a, b, v)).collect(),
                tau_pred,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lines_round_trip(record in arb_record()) {
        let line = to_jsonl_line(&record);
        prop_assert!(!line.contains('\n'));
        let back = parse_bench_line(&line, Path::new("mem"), 1).unwrap();
        prop_assert_eq!(back, record);
    }

    #[test]
    fn files_round_trip(records in prop::collection::vec(arb_record(), 1..5)) {
        let m = records[0].m();
        let records: Vec<BenchRecord> = records.into_iter().filter(|r| r.m() == m).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_bench_dataset(&records, &path).unwrap();
        prop_assert_eq!(load_bench_dataset(&path).unwrap(), records);
    }
}
