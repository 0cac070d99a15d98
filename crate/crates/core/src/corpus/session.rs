use std::io::{BufRead, Write};

use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use super::record::{time_millis, LogRecord, UserKey};
use super::CorpusError;
use crate::sparql::{parse, ParseError, QueryAst};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionQuery {
    pub text: String,
    #[serde(with = "time_millis")]
    pub time: DateTime<Utc>,
    #[serde(rename = "resultSize")]
    pub result_size: Option<u64>,
    #[serde(rename = "runtimeMs")]
    pub runtime_ms: Option<u64>,
}

impl From<&LogRecord> for SessionQuery {
    fn from(r: &LogRecord) -> Self {
        SessionQuery {
            text: r.query.clone(),
            time: r.time,
            result_size: r.result_size,
            runtime_ms: r.runtime_ms,
        }
    }
}

/// One user's search session: consecutive queries close in time that keep
/// sharing terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    #[serde(rename = "sessionId")]
    pub session_id: String,
    pub dataset: String,
    pub user: String,
    pub queries: Vec<SessionQuery>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.queries.len() == 1
    }

    pub fn result_sizes(&self) -> Vec<Option<u64>> {
        self.queries.iter().map(|q| q.result_size).collect()
    }

    /// Parses every query; stored sessions only ever hold parseable text.
    pub fn parse_queries(&self) -> Result<Vec<QueryAst>, ParseError> {
        self.queries.iter().map(|q| parse(&q.text)).collect()
    }
}

/// A session together with its parsed queries.
#[derive(Debug, Clone)]
pub struct ParsedSession {
    pub session: Session,
    pub asts: Vec<QueryAst>,
}

impl ParsedSession {
    pub fn from_session(session: Session) -> Result<Self, ParseError> {
        let asts = session.parse_queries()?;
        Ok(ParsedSession { session, asts })
    }

    pub fn id(&self) -> &str {
        &self.session.session_id
    }

    pub fn len(&self) -> usize {
        self.asts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.asts.is_empty()
    }
}

/// Keeps the first of each run of consecutive records with identical text.
/// Returns the survivors and the number collapsed.
pub fn collapse_duplicates<T>(items: Vec<(LogRecord, T)>) -> (Vec<(LogRecord, T)>, usize) {
    let before = items.len();
    let mut out: Vec<(LogRecord, T)> = Vec::with_capacity(before);
    for item in items {
        if out.last().is_some_and(|(prev, _)| prev.query == item.0.query) {
            continue;
        }
        out.push(item);
    }
    let collapsed = before - out.len();
    (out, collapsed)
}

/// Splits one user's filtered, collapsed, time-ordered queries into sessions.
/// A new session starts when the gap to the previous query exceeds the
/// threshold or the two queries share no term.
pub fn sessionize(key: &UserKey, items: Vec<(LogRecord, QueryAst)>, threshold: TimeDelta) -> Vec<ParsedSession> {
    let mut out: Vec<ParsedSession> = Vec::new();
    for (rec, ast) in items {
        let cont = out.last().is_some_and(|cur| {
            let last = cur.session.queries.last().expect("sessions are never empty");
            rec.time - last.time <= threshold && shares_term(cur.asts.last().expect("aligned"), &ast)
        });
        if !cont {
            let id = format!("{}:{}:{}", key.dataset, key.user, out.len());
            out.push(ParsedSession {
                session: Session {
                    session_id: id,
                    dataset: key.dataset.clone(),
                    user: key.user.clone(),
                    queries: Vec::new(),
                },
                asts: Vec::new(),
            });
        }
        let cur = out.last_mut().expect("pushed above");
        cur.session.queries.push(SessionQuery::from(&rec));
        cur.asts.push(ast);
    }
    out
}

fn shares_term(a: &QueryAst, b: &QueryAst) -> bool {
    a.term_set.intersection(&b.term_set).next().is_some()
}

/// A broken session constraint, with the offending position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionViolation {
    #[error("session is empty")]
    Empty,
    #[error("query {0} belongs to another user")]
    ForeignUser(usize),
    #[error("query {0} is earlier than its predecessor")]
    Unordered(usize),
    #[error("gap before query {0} exceeds the time threshold")]
    Gap(usize),
    #[error("query {0} shares no term with its predecessor")]
    NoSharedTerm(usize),
    #[error("query {0} repeats its predecessor verbatim")]
    Repeated(usize),
}

/// Re-checks every session constraint.
pub fn validate_session(s: &ParsedSession, threshold: TimeDelta) -> Result<(), SessionViolation> {
    let qs = &s.session.queries;
    if qs.is_empty() {
        return Err(SessionViolation::Empty);
    }
    if !s
        .session
        .session_id
        .starts_with(&format!("{}:{}:", s.session.dataset, s.session.user))
    {
        return Err(SessionViolation::ForeignUser(0));
    }
    for i in 1..qs.len() {
        let gap = qs[i].time - qs[i - 1].time;
        if gap < TimeDelta::zero() {
            return Err(SessionViolation::Unordered(i));
        }
        if gap > threshold {
            return Err(SessionViolation::Gap(i));
        }
        if !shares_term(&s.asts[i - 1], &s.asts[i]) {
            return Err(SessionViolation::NoSharedTerm(i));
        }
        if qs[i].text == qs[i - 1].text {
            return Err(SessionViolation::Repeated(i));
        }
    }
    Ok(())
}

/// Writes the session store, one session object per line.
pub fn write_sessions<'a, W: Write>(mut w: W, sessions: impl IntoIterator<Item = &'a Session>) -> std::io::Result<()> {
    for s in sessions {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_sessions<R: BufRead>(reader: R) -> Result<Vec<Session>, CorpusError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            line: idx + 1,
            records: out.len(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Session = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}
