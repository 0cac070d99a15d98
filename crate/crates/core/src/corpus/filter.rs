//! Robotic-traffic filters: request frequency and loop patterns.

use std::collections::BTreeSet;
use std::ops::Range;

use chrono::{DateTime, TimeDelta, Utc};

use super::record::{LogRecord, UserKey};
use crate::sparql::{parse, template_of, QueryTemplate};

/// Largest number of timestamps falling in any half-open window
/// `[t, t + window)`. `times` must be sorted.
pub fn max_in_window(times: &[DateTime<Utc>], window: TimeDelta) -> usize {
    let mut best = 0;
    let mut hi = 0;
    for lo in 0..times.len() {
        let end = times[lo] + window;
        hi = hi.max(lo);
        while hi < times.len() && times[hi] < end {
            hi += 1;
        }
        best = best.max(hi - lo);
    }
    best
}

/// Users with more than `max_in_window` executions inside some window of
/// `window_minutes`.
pub fn high_frequency_users(records: &[LogRecord], window_minutes: u64, max_in: usize) -> BTreeSet<UserKey> {
    let window = TimeDelta::minutes(window_minutes as i64);
    let mut per_user: std::collections::BTreeMap<UserKey, Vec<DateTime<Utc>>> = Default::default();
    for r in records {
        per_user.entry(r.key()).or_default().push(r.time);
    }
    per_user
        .into_iter()
        .filter_map(|(k, mut times)| {
            times.sort();
            (max_in_window(&times, window) > max_in).then_some(k)
        })
        .collect()
}

/// Drops every record of a flagged user. Returns the kept records and the
/// flagged users.
pub fn filter_high_frequency_users(
    records: Vec<LogRecord>,
    window_minutes: u64,
    max_in: usize,
) -> (Vec<LogRecord>, Vec<UserKey>) {
    let flagged = high_frequency_users(&records, window_minutes, max_in);
    let kept = records.into_iter().filter(|r| !flagged.contains(&r.key())).collect();
    (kept, flagged.into_iter().collect())
}

/// Index ranges of loop runs: maximal stretches of consecutive queries that
/// share one template, where the stretch holds at least `min_run` queries
/// after collapsing repeated identical texts. Unparseable queries (`None`)
/// break runs.
pub fn loop_runs(items: &[(Option<&QueryTemplate>, &str)], min_run: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let Some(t) = items[i].0 else {
            i += 1;
            continue;
        };
        let mut j = i + 1;
        let mut distinct = 1;
        while j < items.len() && items[j].0 == Some(t) {
            if items[j].1 != items[j - 1].1 {
                distinct += 1;
            }
            j += 1;
        }
        if distinct >= min_run {
            out.push(i..j);
        }
        i = j;
    }
    out
}

/// Removes loop runs from one user's time-ordered records. Returns the kept
/// records and the number of removed runs.
pub fn remove_loop_sequences(records: Vec<LogRecord>, min_run: usize) -> (Vec<LogRecord>, usize) {
    let templates: Vec<Option<QueryTemplate>> = records
        .iter()
        .map(|r| parse(&r.query).ok().map(|a| template_of(&a)))
        .collect();
    let items: Vec<_> = templates
        .iter()
        .zip(&records)
        .map(|(t, r)| (t.as_ref(), r.query.as_str()))
        .collect();
    let runs = loop_runs(&items, min_run);
    let mut drop = vec![false; records.len()];
    for r in &runs {
        drop[r.clone()].iter_mut().for_each(|d| *d = true);
    }
    let kept = records
        .into_iter()
        .zip(drop)
        .filter_map(|(r, d)| (!d).then_some(r))
        .collect();
    (kept, runs.len())
}
