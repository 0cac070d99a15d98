mod common;

use std::collections::BTreeMap;
use std::path::Path;

use chrono::TimeDelta;
use common::{base_time, log_line, synthetic_log};
use sparql_session::corpus::{CorpusError, FilterStage};
use sparql_session::report::{
    load_sessions, run_pipeline, stage_analyze, stage_events, stage_ingest, stage_markov, stage_report,
    stage_sessionize, PipelineConfig, PipelineError, Workspace,
};
use sparql_session::sparql::operator_inventory;
use tempfile::TempDir;

fn config(dir: &Path, log: &str) -> PipelineConfig {
    let input = dir.join("log.ndjson");
    std::fs::write(&input, log).unwrap();
    PipelineConfig {
        input: Some(input),
        output: Some(dir.join("out")),
        ..PipelineConfig::default()
    }
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn reruns_are_byte_identical() {
    let log = synthetic_log(21, 600);
    let (d1, d2) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (c1, c2) = (config(d1.path(), &log), config(d2.path(), &log));
    let b1 = run_pipeline(&c1).unwrap();
    let b2 = run_pipeline(&c2).unwrap();
    assert_eq!(b1, b2);
    let a1 = artifacts(&d1.path().join("out"));
    assert_eq!(a1, artifacts(&d2.path().join("out")));
    assert!(a1.contains_key("report.json") && a1.contains_key("model.json"));
    assert!(
        b1.consistency_violations().is_empty(),
        "{:?}",
        b1.consistency_violations()
    );

    // stages are idempotent on their own workspace
    let ws = Workspace::from_config(&c1).unwrap();
    stage_sessionize(&c1, &ws).unwrap();
    stage_events(&ws).unwrap();
    stage_report(&ws, Vec::new()).unwrap();
    stage_report(&ws, Vec::new()).unwrap();
    assert_eq!(a1, artifacts(&d1.path().join("out")));
}

#[test]
fn operator_denominators_follow_usage() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), &synthetic_log(3, 500));
    let b = run_pipeline(&cfg).unwrap();
    let sessions = load_sessions(&Workspace::from_config(&cfg).unwrap()).unwrap();
    let asts: Vec<_> = sessions.iter().flat_map(|s| &s.asts).collect();
    assert_eq!(b.operator_table.queries, asts.len() as u64);
    for r in &b.operator_table.rows {
        let used = asts
            .iter()
            .filter(|a| operator_inventory(a).contains_key(&r.operator))
            .count() as u64;
        assert_eq!(r.usage.count, used, "{}", r.operator);
        assert_eq!(r.removals.denominator, used);
        assert_eq!(r.additions.denominator, used);
    }
}

#[test]
fn empty_log_is_a_data_error() {
    let d = TempDir::new().unwrap();
    let err = run_pipeline(&config(d.path(), "\n")).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert_eq!(err.to_string(), "no records ingested");
}

#[test]
fn bot_only_log_names_the_filter() {
    let t0 = base_time();
    let lines: Vec<String> = (0..40)
        .map(|i| {
            let q = format!("SELECT ?s WHERE {{ ?s <http://e/p{i}> ?o }}");
            log_line("d", "bot", t0 + TimeDelta::seconds(20 * i), &q, Some(1))
        })
        .collect();
    let d = TempDir::new().unwrap();
    let err = run_pipeline(&config(d.path(), &lines.join("\n"))).unwrap_err();
    assert!(matches!(
        err,
        PipelineError::Corpus(CorpusError::Empty {
            stage: FilterStage::FrequencyFilter
        })
    ));
    assert_eq!(err.exit_code(), 3);
    assert_eq!(err.to_json()["stage"], "frequency-filter");
}

#[test]
fn stage_without_its_input_asks_for_the_earlier_stage() {
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), "");
    let ws = Workspace::from_config(&cfg).unwrap();
    let err = stage_analyze(&cfg, &ws).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert_eq!(err.to_json()["requiredStage"], "sessionize");
    let err = stage_sessionize(&cfg, &ws).unwrap_err();
    assert_eq!(err.to_string(), "run ingest first");
}

#[test]
fn unknown_sizes_leave_markov_undefined() {
    let t0 = base_time();
    let lines: Vec<String> = (0..3)
        .map(|i| {
            let q = format!("SELECT ?s WHERE {{ ?s <http://e/p{i}> <http://e/x> }}");
            log_line("d", "u", t0 + TimeDelta::minutes(i), &q, None)
        })
        .collect();
    let d = TempDir::new().unwrap();
    let cfg = config(d.path(), &lines.join("\n"));
    let ws = Workspace::from_config(&cfg).unwrap();
    stage_ingest(&cfg, &ws).unwrap();
    stage_sessionize(&cfg, &ws).unwrap();
    let m = stage_markov(&ws).unwrap();
    assert!(m.matrix.is_none());
    assert_eq!(m.transitions, 0);
    let b = run_pipeline(&cfg).unwrap();
    assert!(b.markov_matrix.is_none());
    assert!(b.notes.iter().any(|n| n.contains("markov")));
}
