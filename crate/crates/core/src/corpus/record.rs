use std::fmt;
use std::io::{BufRead, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::CorpusError;

/// One query execution from an endpoint log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub dataset: String,
    pub user: String,
    #[serde(with = "time_millis")]
    pub time: DateTime<Utc>,
    pub query: String,
    #[serde(rename = "resultSize")]
    pub result_size: Option<u64>,
    #[serde(rename = "runtimeMs")]
    pub runtime_ms: Option<u64>,
}

impl LogRecord {
    pub fn key(&self) -> UserKey {
        UserKey {
            dataset: self.dataset.clone(),
            user: self.user.clone(),
        }
    }
}

/// Filtering and sessionization operate per `(dataset, user)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UserKey {
    pub dataset: String,
    pub user: String,
}

impl fmt::Display for UserKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.dataset, self.user)
    }
}

/// An input line that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedLine {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ingested {
    /// Sorted by `(user, time)`; ties keep input order.
    pub records: Vec<LogRecord>,
    pub rejected: Vec<RejectedLine>,
    /// Non-blank lines seen.
    pub lines: usize,
}

/// Reads NDJSON log lines. Malformed lines are rejected with a reason;
/// blank lines are skipped. An I/O failure aborts with the progress so far.
pub fn ingest<R: BufRead>(reader: R) -> Result<Ingested, CorpusError> {
    let mut out = Ingested::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            line: idx + 1,
            records: out.records.len(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.lines += 1;
        match parse_line(&line) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.rejected.push(RejectedLine { line: idx + 1, reason }),
        }
    }
    out.records
        .sort_by(|a, b| a.user.cmp(&b.user).then(a.time.cmp(&b.time)));
    Ok(out)
}

/// Parses one log line, reporting problems with the logical field names.
pub fn parse_line(line: &str) -> Result<LogRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let Value::Object(obj) = value else {
        return Err("line is not a JSON object".into());
    };
    let dataset = required_str(&obj, "dataset", "datasetId")?;
    let user = required_str(&obj, "user", "userId")?;
    if user.is_empty() {
        return Err("empty field userId".into());
    }
    let time_text = required_str(&obj, "time", "timestamp")?;
    let time = parse_time(&time_text).map_err(|e| format!("invalid timestamp {time_text:?}: {e}"))?;
    let query = required_str(&obj, "query", "queryText")?;
    Ok(LogRecord {
        dataset,
        user,
        time,
        query,
        result_size: optional_count(&obj, "resultSize")?,
        runtime_ms: optional_count(&obj, "runtimeMs")?,
    })
}

fn required_str(obj: &Map<String, Value>, key: &str, logical: &str) -> Result<String, String> {
    match obj.get(key) {
        None | Some(Value::Null) => Err(format!("missing field {logical}")),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(format!("field {logical} must be a string")),
    }
}

fn optional_count(obj: &Map<String, Value>, key: &str) -> Result<Option<u64>, String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| format!("field {key} must be a nonnegative integer or null")),
    }
}

/// RFC 3339 timestamp, truncated to millisecond precision.
pub fn parse_time(text: &str) -> Result<DateTime<Utc>, chrono::ParseError> {
    let t = DateTime::parse_from_rfc3339(text)?.with_timezone(&Utc);
    let millis = t.timestamp_millis();
    Ok(DateTime::from_timestamp_millis(millis).expect("in range"))
}

pub fn format_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub(crate) mod time_millis {
    use chrono::{DateTime, Utc};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_time(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_time(&text).map_err(de::Error::custom)
    }
}

/// Writes records as NDJSON in the input schema.
pub fn write_records<'a, W: Write>(mut w: W, records: impl IntoIterator<Item = &'a LogRecord>) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
