//! Log ingestion, robotic-traffic filtering and session segmentation.

mod filter;
mod record;
mod session;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::TimeDelta;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use filter::{filter_high_frequency_users, high_frequency_users, loop_runs, max_in_window, remove_loop_sequences};
pub use record::{
    format_time, ingest, parse_line, parse_time, write_records, Ingested, LogRecord, RejectedLine, UserKey,
};
pub use session::{
    collapse_duplicates, read_sessions, sessionize, validate_session, write_sessions, ParsedSession, Session,
    SessionQuery, SessionViolation,
};

use crate::sparql::{parse, template_of};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("I/O failure at line {line} after {records} records: {source}")]
    Io {
        line: usize,
        records: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("{}", empty_message(*.stage))]
    Empty { stage: FilterStage },
}

fn empty_message(stage: FilterStage) -> String {
    match stage {
        FilterStage::Ingest => "no records ingested".into(),
        s => format!("no organic records left: the {s} removed everything"),
    }
}

/// The pre-processing step responsible for removing records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterStage {
    Ingest,
    FrequencyFilter,
    LoopFilter,
    ParseErrorFilter,
}

impl fmt::Display for FilterStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterStage::Ingest => "ingest",
            FilterStage::FrequencyFilter => "frequency filter",
            FilterStage::LoopFilter => "loop filter",
            FilterStage::ParseErrorFilter => "parse-error filter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub time_threshold_minutes: u64,
    pub bot_window_minutes: u64,
    pub bot_max_in_window: usize,
    pub loop_min_run: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            time_threshold_minutes: 60,
            bot_window_minutes: 30,
            bot_max_in_window: 30,
            loop_min_run: 4,
        }
    }
}

impl CorpusConfig {
    pub fn time_threshold(&self) -> TimeDelta {
        TimeDelta::minutes(self.time_threshold_minutes as i64)
    }
}

/// Where every input line went. Each line is counted in exactly one of
/// `rejected_lines`, `bot_records`, `loop_records`, `parse_error_records`,
/// `duplicates_collapsed` or `session_records`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FilterReport {
    pub total_lines: usize,
    pub rejected_lines: usize,
    pub total_records: usize,
    pub total_users: usize,
    pub flagged_frequency_users: usize,
    pub bot_records: usize,
    pub loop_sequences_removed: usize,
    pub loop_records: usize,
    pub parse_error_records: usize,
    /// Executions surviving the bot, loop and parse-error filters.
    pub organic_execution_count: usize,
    /// Distinct query texts among the organic executions.
    pub organic_query_count: usize,
    pub duplicates_collapsed: usize,
    pub session_records: usize,
    pub session_count: usize,
    pub singleton_sessions: usize,
}

impl FilterReport {
    /// True when the counts partition the input.
    pub fn is_consistent(&self) -> bool {
        self.total_lines == self.rejected_lines + self.total_records
            && self.total_records
                == self.bot_records
                    + self.loop_records
                    + self.parse_error_records
                    + self.duplicates_collapsed
                    + self.session_records
            && self.organic_execution_count == self.duplicates_collapsed + self.session_records
            && self.organic_query_count <= self.organic_execution_count
            && self.singleton_sessions <= self.session_count
    }
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    /// Ordered by `(dataset, user)`, then time.
    pub sessions: Vec<ParsedSession>,
    pub flagged_users: Vec<UserKey>,
    pub report: FilterReport,
}

#[derive(Default)]
struct UserOutcome {
    sessions: Vec<ParsedSession>,
    loop_runs: usize,
    loop_records: usize,
    parse_errors: usize,
    collapsed: usize,
    organic_texts: BTreeSet<String>,
    organic: usize,
}

/// Runs the full pre-processing chain over ingested records: frequency
/// filter, loop filter, parse-error removal, duplicate collapse and
/// sessionization, each per `(dataset, user)`.
pub fn preprocess(ingested: &Ingested, config: &CorpusConfig) -> Result<Preprocessed, CorpusError> {
    let mut report = FilterReport {
        total_lines: ingested.lines,
        rejected_lines: ingested.rejected.len(),
        total_records: ingested.records.len(),
        ..Default::default()
    };
    if ingested.records.is_empty() {
        return Err(CorpusError::Empty {
            stage: FilterStage::Ingest,
        });
    }
    let mut groups: BTreeMap<UserKey, Vec<LogRecord>> = BTreeMap::new();
    for r in &ingested.records {
        groups.entry(r.key()).or_default().push(r.clone());
    }
    for g in groups.values_mut() {
        g.sort_by_key(|r| r.time);
    }
    report.total_users = groups.len();

    let flagged = high_frequency_users(&ingested.records, config.bot_window_minutes, config.bot_max_in_window);
    report.flagged_frequency_users = flagged.len();
    report.bot_records = groups
        .iter()
        .filter(|(k, _)| flagged.contains(*k))
        .map(|(_, v)| v.len())
        .sum();
    let survivors: Vec<(UserKey, Vec<LogRecord>)> = groups.into_iter().filter(|(k, _)| !flagged.contains(k)).collect();
    if survivors.is_empty() {
        return Err(CorpusError::Empty {
            stage: FilterStage::FrequencyFilter,
        });
    }

    let threshold = config.time_threshold();
    let outcomes: Vec<UserOutcome> = survivors
        .into_par_iter()
        .map(|(key, recs)| process_user(&key, recs, config.loop_min_run, threshold))
        .collect();

    let mut organic_texts = BTreeSet::new();
    let mut sessions = Vec::new();
    for o in outcomes {
        report.loop_sequences_removed += o.loop_runs;
        report.loop_records += o.loop_records;
        report.parse_error_records += o.parse_errors;
        report.duplicates_collapsed += o.collapsed;
        report.organic_execution_count += o.organic;
        organic_texts.extend(o.organic_texts);
        sessions.extend(o.sessions);
    }
    report.organic_query_count = organic_texts.len();
    report.session_count = sessions.len();
    report.singleton_sessions = sessions.iter().filter(|s| s.len() == 1).count();
    report.session_records = sessions.iter().map(|s| s.len()).sum();

    if sessions.is_empty() {
        let after_bots = report.total_records - report.bot_records;
        let stage = if report.loop_records == after_bots {
            FilterStage::LoopFilter
        } else {
            FilterStage::ParseErrorFilter
        };
        return Err(CorpusError::Empty { stage });
    }
    debug_assert!(report.is_consistent());
    Ok(Preprocessed {
        sessions,
        flagged_users: flagged.into_iter().collect(),
        report,
    })
}

fn process_user(key: &UserKey, recs: Vec<LogRecord>, min_run: usize, threshold: TimeDelta) -> UserOutcome {
    let parsed: Vec<_> = recs.iter().map(|r| parse(&r.query).ok()).collect();
    let templates: Vec<_> = parsed.iter().map(|a| a.as_ref().map(template_of)).collect();
    let items: Vec<_> = templates
        .iter()
        .zip(&recs)
        .map(|(t, r)| (t.as_ref(), r.query.as_str()))
        .collect();
    let runs = loop_runs(&items, min_run);
    let mut in_loop = vec![false; recs.len()];
    for r in &runs {
        in_loop[r.clone()].iter_mut().for_each(|d| *d = true);
    }
    let mut out = UserOutcome {
        loop_runs: runs.len(),
        loop_records: in_loop.iter().filter(|d| **d).count(),
        ..Default::default()
    };
    let mut organic = Vec::new();
    for ((rec, ast), looped) in recs.into_iter().zip(parsed).zip(in_loop) {
        if looped {
            continue;
        }
        match ast {
            Some(ast) => organic.push((rec, ast)),
            None => out.parse_errors += 1,
        }
    }
    out.organic = organic.len();
    out.organic_texts = organic.iter().map(|(r, _)| r.query.clone()).collect();
    let (collapsed, n) = collapse_duplicates(organic);
    out.collapsed = n;
    out.sessions = sessionize(key, collapsed, threshold);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(user: &str, time: &str, query: &str) -> String {
        serde_json::json!({"dataset": "d", "user": user, "time": time, "query": query, "resultSize": 1, "runtimeMs": 2})
            .to_string()
    }

    #[test]
    fn empty_input_names_ingest() {
        let err = preprocess(&Ingested::default(), &CorpusConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "no records ingested");
    }

    #[test]
    fn bot_only_input_names_frequency_filter() {
        let lines: Vec<_> = (0..31)
            .map(|i| line("bot", &format!("2024-01-01T00:00:{i:02}Z"), "ASK { ?s ?p ?o }"))
            .collect();
        let ing = ingest(lines.join("\n").as_bytes()).unwrap();
        let err = preprocess(&ing, &CorpusConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::Empty {
                stage: FilterStage::FrequencyFilter
            }
        ));
        assert!(err.to_string().contains("frequency filter"), "{err}");
    }

    #[test]
    fn report_partitions_input() {
        let q = |p: &str| format!("SELECT * {{ ?s <http://e/{p}> ?o }}");
        let lines = [
            line("a", "2024-01-01T00:00:00Z", &q("x")),
            line("a", "2024-01-01T00:01:00Z", &q("x")),
            line("a", "2024-01-01T00:02:00Z", "SELECT {"),
            line(
                "a",
                "2024-01-01T00:03:00Z",
                "SELECT * { ?s <http://e/x> ?o . ?o <http://e/y> ?z }",
            ),
            "garbage".to_string(),
            line("b", "2024-01-01T00:00:00Z", &q("p1")),
            line("b", "2024-01-01T00:00:01Z", &q("p2")),
            line("b", "2024-01-01T00:00:02Z", &q("p3")),
            line("b", "2024-01-01T00:00:03Z", &q("p4")),
        ];
        let ing = ingest(lines.join("\n").as_bytes()).unwrap();
        let out = preprocess(&ing, &CorpusConfig::default()).unwrap();
        let r = &out.report;
        assert!(r.is_consistent(), "{r:?}");
        assert_eq!(r.rejected_lines, 1);
        assert_eq!(r.loop_sequences_removed, 1);
        assert_eq!(r.loop_records, 4);
        assert_eq!(r.parse_error_records, 1);
        assert_eq!(r.duplicates_collapsed, 1);
        assert_eq!(r.organic_execution_count, 3);
        assert_eq!(r.organic_query_count, 2);
        assert_eq!(r.session_count, 1);
        assert_eq!(out.sessions[0].len(), 2);
    }
}
