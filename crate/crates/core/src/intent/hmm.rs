use serde::{Deserialize, Serialize};

use super::observation::{ObservationSymbol, TrainingSequence};
use super::rc::{RcState, TransitionMatrix};
use super::IntentError;

pub const MODEL_SCHEMA: &str = "sparql-session/hmm/v1";

const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Hidden states are RC states; observations are triple-change symbols.
///
/// Rows of `a` and `b` are indexed by `states`, columns of `b` by `symbols`.
/// The raw counts the probabilities were estimated from are kept alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HmmModel {
    pub schema: String,
    pub alpha: f64,
    pub states: Vec<RcState>,
    pub symbols: Vec<ObservationSymbol>,
    pub pi: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(default)]
    pub pi_counts: Vec<u64>,
    #[serde(default)]
    pub a_counts: Vec<Vec<u64>>,
    #[serde(default)]
    pub b_counts: Vec<Vec<u64>>,
    #[serde(default)]
    pub training_pairs: u64,
}

/// Most likely hidden path and its joint probability with the observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Decoded {
    pub path: Vec<RcState>,
    pub probability: f64,
    pub log_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub symbol: ObservationSymbol,
    pub score: f64,
}

fn smoothed(counts: &[u64], alpha: f64) -> Vec<f64> {
    let total = counts.iter().sum::<u64>() as f64 + alpha * counts.len() as f64;
    if total == 0.0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|&c| (c as f64 + alpha) / total).collect()
}

fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Supervised estimate with add-`alpha` smoothing. With `alpha = 0` a row
/// that has no counts at all falls back to uniform so the model stays
/// stochastic; the counts show which rows were observed.
pub fn train_hmm(sequences: &[TrainingSequence], alpha: f64) -> Result<HmmModel, IntentError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(IntentError::InvalidModel(format!(
            "smoothing must be finite and nonnegative, got {alpha}"
        )));
    }
    let (n, m) = (RcState::ALL.len(), ObservationSymbol::ALL.len());
    let mut pi_counts = vec![0u64; n];
    let mut a_counts = vec![vec![0u64; n]; n];
    let mut b_counts = vec![vec![0u64; m]; n];
    let mut pairs = 0u64;
    for seq in sequences {
        if seq.states.len() != seq.observations.len() {
            return Err(IntentError::InvalidModel(
                "states and observations are not aligned".into(),
            ));
        }
        let Some(first) = seq.states.first() else { continue };
        pi_counts[first.index()] += 1;
        for w in seq.states.windows(2) {
            a_counts[w[0].index()][w[1].index()] += 1;
        }
        for (s, o) in seq.states.iter().zip(&seq.observations) {
            b_counts[s.index()][o.index()] += 1;
        }
        pairs += seq.states.len() as u64;
    }
    if pairs == 0 {
        return Err(IntentError::NoTrainingPairs);
    }
    Ok(HmmModel {
        schema: MODEL_SCHEMA.to_string(),
        alpha,
        states: RcState::ALL.to_vec(),
        symbols: ObservationSymbol::ALL.to_vec(),
        pi: smoothed(&pi_counts, alpha),
        a: a_counts.iter().map(|r| smoothed(r, alpha)).collect(),
        b: b_counts.iter().map(|r| smoothed(r, alpha)).collect(),
        pi_counts,
        a_counts,
        b_counts,
        training_pairs: pairs,
    })
}

impl HmmModel {
    /// A model from explicit parameters over all three RC states.
    pub fn new(
        symbols: Vec<ObservationSymbol>,
        pi: Vec<f64>,
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
    ) -> Result<HmmModel, IntentError> {
        let model = HmmModel {
            schema: MODEL_SCHEMA.to_string(),
            alpha: 0.0,
            states: RcState::ALL.to_vec(),
            symbols,
            pi,
            a,
            b,
            pi_counts: Vec::new(),
            a_counts: Vec::new(),
            b_counts: Vec::new(),
            training_pairs: 0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), IntentError> {
        let bad = |m: String| Err(IntentError::InvalidModel(m));
        if self.schema != MODEL_SCHEMA {
            return bad(format!(
                "unsupported schema {:?}, expected {MODEL_SCHEMA:?}",
                self.schema
            ));
        }
        if self.states != RcState::ALL {
            return bad("states must be [-1, 0, 1] in that order".into());
        }
        let (n, m) = (self.states.len(), self.symbols.len());
        if m == 0 {
            return bad("empty symbol set".into());
        }
        let mut seen = self.symbols.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != m {
            return bad("duplicate observation symbol".into());
        }
        if self.pi.len() != n || self.a.len() != n || self.b.len() != n {
            return bad("matrix rows do not match the state count".into());
        }
        let check = |name: &str, row: &[f64], len: usize| -> Result<(), IntentError> {
            if row.len() != len {
                return Err(IntentError::InvalidModel(format!(
                    "{name} row has {} entries, expected {len}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(IntentError::InvalidModel(format!("{name} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(IntentError::InvalidModel(format!("{name} row sums to {sum}")));
            }
            Ok(())
        };
        check("pi", &self.pi, n)?;
        for r in &self.a {
            check("A", r, n)?;
        }
        for r in &self.b {
            check("B", r, m)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<HmmModel, IntentError> {
        let model: HmmModel = serde_json::from_str(text).map_err(|e| IntentError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    /// The transition part as a descriptive matrix (counts and MLE rows).
    pub fn transition_matrix(&self) -> Option<TransitionMatrix> {
        let c = &self.a_counts;
        (c.len() == 3 && c.iter().all(|r| r.len() == 3)).then(|| {
            TransitionMatrix::from_counts([
                [c[0][0], c[0][1], c[0][2]],
                [c[1][0], c[1][1], c[1][2]],
                [c[2][0], c[2][1], c[2][2]],
            ])
        })
    }

    fn symbol_indices(&self, os: &[ObservationSymbol]) -> Result<Vec<usize>, IntentError> {
        os.iter()
            .map(|o| {
                self.symbols
                    .iter()
                    .position(|s| s == o)
                    .ok_or_else(|| IntentError::UnknownSymbol(o.to_string()))
            })
            .collect()
    }

    /// Log forward variables after the last observation.
    fn forward_vars(&self, os: &[usize]) -> Vec<f64> {
        let n = self.states.len();
        let mut alpha: Vec<f64> = (0..n).map(|i| self.pi[i].ln() + self.b[i][os[0]].ln()).collect();
        for &o in &os[1..] {
            alpha = (0..n)
                .map(|j| log_sum_exp((0..n).map(|i| alpha[i] + self.a[i][j].ln())) + self.b[j][o].ln())
                .collect();
        }
        alpha
    }

    /// `ln p(OS | model)`.
    pub fn log_forward(&self, os: &[ObservationSymbol]) -> Result<f64, IntentError> {
        if os.is_empty() {
            return Err(IntentError::EmptyObservations);
        }
        let idx = self.symbol_indices(os)?;
        Ok(log_sum_exp(self.forward_vars(&idx)))
    }

    /// `p(OS | model)`.
    pub fn forward(&self, os: &[ObservationSymbol]) -> Result<f64, IntentError> {
        self.log_forward(os).map(f64::exp)
    }

    /// Viterbi path. Equal scores resolve toward the lower state index, both
    /// for the final state and for every back pointer.
    pub fn decode(&self, os: &[ObservationSymbol]) -> Result<Decoded, IntentError> {
        if os.is_empty() {
            return Err(IntentError::EmptyObservations);
        }
        let idx = self.symbol_indices(os)?;
        let n = self.states.len();
        let mut delta: Vec<f64> = (0..n).map(|i| self.pi[i].ln() + self.b[i][idx[0]].ln()).collect();
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(idx.len());
        for &o in &idx[1..] {
            let mut next = vec![f64::NEG_INFINITY; n];
            let mut ptr = vec![0; n];
            for j in 0..n {
                let mut best = (f64::NEG_INFINITY, 0);
                for (i, d) in delta.iter().enumerate() {
                    let v = d + self.a[i][j].ln();
                    if v > best.0 {
                        best = (v, i);
                    }
                }
                next[j] = best.0 + self.b[j][o].ln();
                ptr[j] = best.1;
            }
            delta = next;
            back.push(ptr);
        }
        let mut last = 0;
        for (i, &d) in delta.iter().enumerate() {
            if d > delta[last] {
                last = i;
            }
        }
        let log_probability = delta[last];
        let mut path = vec![last];
        for ptr in back.iter().rev() {
            let prev = ptr[*path.last().unwrap()];
            path.push(prev);
        }
        path.reverse();
        Ok(Decoded {
            path: path.into_iter().map(|i| self.states[i]).collect(),
            probability: log_probability.exp(),
            log_probability,
        })
    }

    /// Predictive distribution of the next symbol, `p(OS ⧺ u) / p(OS)`,
    /// highest first (ties in symbol order). An empty history uses `π·B`.
    pub fn suggest(&self, os: &[ObservationSymbol]) -> Result<Vec<Suggestion>, IntentError> {
        let n = self.states.len();
        let next_state: Vec<f64> = if os.is_empty() {
            self.pi.clone()
        } else {
            let idx = self.symbol_indices(os)?;
            let alpha = self.forward_vars(&idx);
            let total = log_sum_exp(alpha.iter().copied());
            if total == f64::NEG_INFINITY {
                return Err(IntentError::ZeroProbability);
            }
            let posterior: Vec<f64> = alpha.iter().map(|a| (a - total).exp()).collect();
            (0..n)
                .map(|j| (0..n).map(|i| posterior[i] * self.a[i][j]).sum())
                .collect()
        };
        let mut out: Vec<Suggestion> = self
            .symbols
            .iter()
            .enumerate()
            .map(|(u, &symbol)| Suggestion {
                symbol,
                score: (0..n).map(|j| next_state[j] * self.b[j][u]).sum(),
            })
            .collect();
        out.sort_by(|x, y| y.score.total_cmp(&x.score));
        Ok(out)
    }
}
