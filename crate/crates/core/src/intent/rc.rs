use std::fmt;

use serde::{Deserialize, Serialize};

use super::IntentError;

/// Sign of the result-size change between consecutive queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum RcState {
    Decrease,
    Unchanged,
    Increase,
}

impl RcState {
    pub const ALL: [RcState; 3] = [RcState::Decrease, RcState::Unchanged, RcState::Increase];

    pub fn value(self) -> i8 {
        match self {
            RcState::Decrease => -1,
            RcState::Unchanged => 0,
            RcState::Increase => 1,
        }
    }

    pub fn index(self) -> usize {
        (self.value() + 1) as usize
    }

    pub fn from_index(i: usize) -> RcState {
        RcState::ALL[i]
    }

    pub fn between(before: u64, after: u64) -> RcState {
        match after.cmp(&before) {
            std::cmp::Ordering::Less => RcState::Decrease,
            std::cmp::Ordering::Equal => RcState::Unchanged,
            std::cmp::Ordering::Greater => RcState::Increase,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RcState::Decrease => "-1",
            RcState::Unchanged => "0",
            RcState::Increase => "+1",
        }
    }
}

impl From<RcState> for i8 {
    fn from(s: RcState) -> i8 {
        s.value()
    }
}

impl TryFrom<i8> for RcState {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(RcState::Decrease),
            0 => Ok(RcState::Unchanged),
            1 => Ok(RcState::Increase),
            _ => Err(format!("result-size change state must be -1, 0 or 1, got {v}")),
        }
    }
}

impl fmt::Display for RcState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// State of every consecutive pair; `None` where either size is unknown.
pub fn rc_states(sizes: &[Option<u64>]) -> Vec<Option<RcState>> {
    sizes
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some(RcState::between(a, b)),
            _ => None,
        })
        .collect()
}

/// States of the pairs whose sizes are both known.
pub fn rc_sequence(sizes: &[Option<u64>]) -> Vec<RcState> {
    rc_states(sizes).into_iter().flatten().collect()
}

/// Maximal runs of known states. An unknown size breaks the chain, so no
/// bigram spans it.
pub fn rc_segments(sizes: &[Option<u64>]) -> Vec<Vec<RcState>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for s in rc_states(sizes) {
        match s {
            Some(s) => cur.push(s),
            None if !cur.is_empty() => out.push(std::mem::take(&mut cur)),
            None => {}
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Row-normalized bigram counts over RC states. Rows without outgoing
/// bigrams are undefined (`None`), never imputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub states: Vec<RcState>,
    pub counts: [[u64; 3]; 3],
    pub probabilities: [[Option<f64>; 3]; 3],
}

impl TransitionMatrix {
    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        let mut probabilities = [[None; 3]; 3];
        for (row, c) in probabilities.iter_mut().zip(&counts) {
            let total: u64 = c.iter().sum();
            if total > 0 {
                for (p, &n) in row.iter_mut().zip(c) {
                    *p = Some(n as f64 / total as f64);
                }
            }
        }
        TransitionMatrix {
            states: RcState::ALL.to_vec(),
            counts,
            probabilities,
        }
    }

    pub fn row_total(&self, from: RcState) -> u64 {
        self.counts[from.index()].iter().sum()
    }

    /// `P(to | from)`, `None` for an undefined row.
    pub fn get(&self, from: RcState, to: RcState) -> Option<f64> {
        self.probabilities[from.index()][to.index()]
    }

    /// The same probability as an exact fraction `(count, row total)`.
    pub fn ratio(&self, from: RcState, to: RcState) -> (u64, u64) {
        (self.counts[from.index()][to.index()], self.row_total(from))
    }
}

/// Bigram counts pooled over all sequences.
pub fn markov_matrix<S: AsRef<[RcState]>>(sequences: &[S]) -> Result<TransitionMatrix, IntentError> {
    let mut counts = [[0u64; 3]; 3];
    for seq in sequences {
        for w in seq.as_ref().windows(2) {
            counts[w[0].index()][w[1].index()] += 1;
        }
    }
    if counts.iter().flatten().all(|&c| c == 0) {
        return Err(IntentError::InsufficientData);
    }
    Ok(TransitionMatrix::from_counts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use RcState::*;

    #[test]
    fn sign_rule() {
        assert_eq!(
            rc_sequence(&[Some(5), Some(9), Some(9), Some(2)]),
            [Increase, Unchanged, Decrease]
        );
        assert_eq!(rc_sequence(&[Some(3), Some(3)]), [Unchanged]);
        assert!(rc_sequence(&[Some(5), None, Some(7)]).is_empty());
        assert_eq!(
            rc_segments(&[Some(1), Some(2), None, Some(1), Some(1), Some(0)]),
            vec![vec![Increase], vec![Unchanged, Decrease]]
        );
    }

    #[test]
    fn alternating_chain() {
        let m = markov_matrix(&[vec![Decrease, Increase, Decrease, Increase]]).unwrap();
        assert_eq!(m.get(Decrease, Increase), Some(1.0));
        assert_eq!(m.get(Increase, Decrease), Some(1.0));
        assert_eq!(m.get(Decrease, Decrease), Some(0.0));
        assert_eq!(m.get(Unchanged, Unchanged), None);
        assert_eq!(m.ratio(Decrease, Increase), (2, 2));
    }

    #[test]
    fn constant_chain_and_errors() {
        let m = markov_matrix(&[vec![Unchanged; 3]]).unwrap();
        assert_eq!(m.get(Unchanged, Unchanged), Some(1.0));
        assert_eq!(markov_matrix(&[vec![Increase]]), Err(IntentError::InsufficientData));
        assert_eq!(IntentError::InsufficientData.to_string(), "insufficient data");
    }

    #[test]
    fn serde_shape() {
        let m = markov_matrix(&[vec![Increase, Decrease]]).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["states"], serde_json::json!([-1, 0, 1]));
        assert_eq!(v["probabilities"][0], serde_json::json!([null, null, null]));
        assert_eq!(v["probabilities"][2], serde_json::json!([1.0, 0.0, 0.0]));
    }
}
