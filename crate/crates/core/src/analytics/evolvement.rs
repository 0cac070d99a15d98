use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::vectors::{
    feature_vector, normalize_session_vectors, term_vector, StructFeatureVector, TermVector, Vocabulary,
};
use super::{cosine, kl_divergence, MetricError};
use crate::hypergraph::{query_ged, GedOptions};
use crate::sparql::QueryAst;

/// Mean and population variance of one series position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionStat {
    /// 1-based index `i` of the pair `(q_i, q_{i+1})` or `(q_1, q_{i+1})`.
    pub position: usize,
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GedEvolvement {
    /// Distance between contiguous queries.
    pub contiguous: Vec<PositionStat>,
    /// Distance between the first query and each later one.
    pub from_initial: Vec<PositionStat>,
    /// Pairs that needed the approximation.
    pub approximate_pairs: usize,
}

#[derive(Default, Clone)]
struct Acc {
    values: Vec<Vec<f64>>,
}

impl Acc {
    fn add(&mut self, pos: usize, v: f64) {
        if self.values.len() <= pos {
            self.values.resize(pos + 1, Vec::new());
        }
        self.values[pos].push(v);
    }

    fn stats(&self) -> Vec<PositionStat> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, vs)| !vs.is_empty())
            .map(|(i, vs)| {
                let n = vs.len() as f64;
                let mean = vs.iter().sum::<f64>() / n;
                let variance = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                PositionStat {
                    position: i + 1,
                    mean,
                    variance,
                    count: vs.len(),
                }
            })
            .collect()
    }
}

/// Positional GED series over sessions of length ≥ 2. Session lengths are
/// not normalized: position `i` averages over sessions that reach it.
pub fn ged_evolvement(sessions: &[&[QueryAst]], opts: &GedOptions) -> GedEvolvement {
    let per_session: Vec<Vec<(f64, f64, usize)>> = sessions
        .par_iter()
        .map(|qs| {
            (1..qs.len())
                .map(|i| {
                    let c = query_ged(&qs[i - 1], &qs[i], opts);
                    let f = if i == 1 { c } else { query_ged(&qs[0], &qs[i], opts) };
                    (c.value, f.value, usize::from(!c.exact) + usize::from(i > 1 && !f.exact))
                })
                .collect()
        })
        .collect();
    let mut contiguous = Acc::default();
    let mut initial = Acc::default();
    let mut approx = 0;
    for s in per_session {
        for (i, (c, f, a)) in s.into_iter().enumerate() {
            contiguous.add(i, c);
            initial.add(i, f);
            approx += a;
        }
    }
    GedEvolvement {
        contiguous: contiguous.stats(),
        from_initial: initial.stats(),
        approximate_pairs: approx,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SimilarityMetric {
    CosineFeature,
    KlFeature,
    CosineTerm,
    KlTerm,
}

impl SimilarityMetric {
    pub const ALL: [SimilarityMetric; 4] = [
        SimilarityMetric::CosineFeature,
        SimilarityMetric::KlFeature,
        SimilarityMetric::CosineTerm,
        SimilarityMetric::KlTerm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityMetric::CosineFeature => "cosineFeature",
            SimilarityMetric::KlFeature => "klFeature",
            SimilarityMetric::CosineTerm => "cosineTerm",
            SimilarityMetric::KlTerm => "klTerm",
        }
    }
}

/// Position-by-position average of a pairwise metric over sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMatrix {
    pub metric: SimilarityMetric,
    /// `None` where no session contributed a defined value.
    pub cells: Vec<Vec<Option<f64>>>,
    pub support: Vec<Vec<usize>>,
}

impl SessionMatrix {
    pub fn size(&self) -> usize {
        self.cells.len()
    }
}

/// Per-session inputs shared by all four metrics.
pub struct SessionVectors {
    pub features: Vec<StructFeatureVector>,
    pub terms: Vec<TermVector>,
}

impl SessionVectors {
    pub fn new(asts: &[QueryAst], vocab: &Vocabulary) -> Self {
        let raw: Vec<_> = asts.iter().map(feature_vector).collect();
        SessionVectors {
            features: normalize_session_vectors(&raw),
            terms: asts.iter().map(|a| term_vector(a, vocab)).collect(),
        }
    }

    pub fn metric(&self, m: SimilarityMetric, i: usize, j: usize) -> Result<f64, MetricError> {
        let (fi, fj) = (self.features[i].as_slice(), self.features[j].as_slice());
        match m {
            SimilarityMetric::CosineFeature => cosine(fi, fj),
            SimilarityMetric::KlFeature => kl_divergence(fi, fj),
            SimilarityMetric::CosineTerm => self.terms[i].cosine(&self.terms[j]),
            SimilarityMetric::KlTerm => self.terms[i].kl(&self.terms[j]),
        }
    }
}

/// Averages `metric(q_i, q_j)` over sessions having both positions, for
/// positions below `cap`. Undefined values are skipped rather than counted
/// as zero.
pub fn similarity_matrix(sessions: &[SessionVectors], metric: SimilarityMetric, cap: usize) -> SessionMatrix {
    let m = sessions.iter().map(|s| s.features.len()).max().unwrap_or(0).min(cap);
    let partials: Vec<Vec<(usize, usize, f64)>> = sessions
        .par_iter()
        .map(|s| {
            let n = s.features.len().min(m);
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    if let Ok(v) = s.metric(metric, i, j) {
                        out.push((i, j, v));
                    }
                }
            }
            out
        })
        .collect();
    let mut sum = vec![vec![0.0; m]; m];
    let mut support = vec![vec![0usize; m]; m];
    for part in partials {
        for (i, j, v) in part {
            sum[i][j] += v;
            support[i][j] += 1;
        }
    }
    let cells = sum
        .iter()
        .zip(&support)
        .map(|(row, sup)| {
            row.iter()
                .zip(sup)
                .map(|(s, &n)| (n > 0).then(|| s / n as f64))
                .collect()
        })
        .collect();
    SessionMatrix { metric, cells, support }
}

/// Session length at the given percentile (nearest rank), at least 1.
pub fn length_percentile(lengths: &[usize], percentile: f64) -> usize {
    if lengths.is_empty() {
        return 1;
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1].max(1)
}
