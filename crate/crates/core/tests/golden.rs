use std::fs;
use std::path::PathBuf;

use wbtree::align::parse_segmented;
use wbtree::conllu::{parse_document, serialize_document, validate_sentence, Document};
use wbtree::merge::{convert_corpus, format_logs, ConversionStatus, MergePolicy};
use wbtree::Execution;

fn fixture(set: &str, name: &str) -> Vec<u8> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", set, name]
        .iter()
        .collect();
    fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn text(set: &str, name: &str) -> String {
    String::from_utf8(fixture(set, name)).unwrap()
}

fn load(set: &str, name: &str) -> Document {
    parse_document(&fixture(set, name), name).unwrap()
}

fn convert(set: &str, exec: Execution) -> (String, String) {
    let gold = load(set, "gold.conllu");
    let pred = load(set, "pred.conllu");
    let seg = parse_segmented(&fixture(set, "seg.txt")).unwrap();
    let (out, logs) = convert_corpus(&gold, &seg, &pred, &MergePolicy::default(), exec).unwrap();
    (serialize_document(&out), format_logs(&logs))
}

#[test]
fn paper_sentences_match_golden_output() {
    let (out, log) = convert("paper", Execution::Sequential);
    assert_eq!(out, text("paper", "expected.conllu"));
    assert_eq!(log, text("paper", "expected.log"));
}

#[test]
fn mixed_fixture_matches_golden_output() {
    let (out, log) = convert("mixed", Execution::Sequential);
    assert_eq!(out, text("mixed", "expected.conllu"));
    assert_eq!(log, text("mixed", "expected.log"));
}

#[test]
fn mixed_fixture_log_totals() {
    let gold = load("mixed", "gold.conllu");
    let pred = load("mixed", "pred.conllu");
    let seg = parse_segmented(&fixture("mixed", "seg.txt")).unwrap();
    let (_, logs) =
        convert_corpus(&gold, &seg, &pred, &MergePolicy::default(), Execution::Sequential)
            .unwrap();
    let merged: usize = logs.iter().map(|l| l.merged.len()).sum();
    let rejected: usize = logs.iter().map(|l| l.rejected.len()).sum();
    let mismatched = logs
        .iter()
        .filter(|l| l.status == ConversionStatus::AlignmentMismatch)
        .count();
    assert_eq!((merged, rejected, mismatched), (7, 1, 2));
}

#[test]
fn parallel_and_sequential_agree() {
    assert_eq!(
        convert("mixed", Execution::Sequential),
        convert("mixed", Execution::Parallel)
    );
}

#[test]
fn fixtures_round_trip_and_validate() {
    for set in ["paper", "mixed"] {
        for name in ["gold.conllu", "expected.conllu"] {
            let bytes = fixture(set, name);
            let doc = parse_document(&bytes, name).unwrap();
            assert_eq!(serialize_document(&doc).as_bytes(), bytes.as_slice());
            for s in &doc.sentences {
                assert!(validate_sentence(s).is_empty(), "{set}/{name} {:?}", s.sent_id());
            }
        }
    }
}
