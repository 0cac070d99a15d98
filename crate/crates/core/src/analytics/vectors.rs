use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::hypergraph::{body_hypergraph, join_vertices, JoinKind};
use crate::sparql::{QueryAst, Term};

/// Coordinate names of [`StructFeatureVector`], in order.
pub const FEATURE_NAMES: [&str; 11] = [
    "triplePatterns",
    "bgp",
    "projection",
    "sinkJoinVertex",
    "starJoinVertex",
    "hybridJoinVertex",
    "pathJoinVertex",
    "maxJoinDegree",
    "minJoinDegree",
    "meanJoinDegree",
    "bias",
];

/// Structural summary of a query; the final entry is a constant 1 so that
/// no vector is all zeros.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructFeatureVector(pub [f64; 11]);

impl StructFeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Counts over the query body: the CONSTRUCT template is output shape and is
/// not part of the pattern being matched.
pub fn feature_vector(ast: &QueryAst) -> StructFeatureVector {
    let mut triples = 0;
    let mut bgps = 0;
    if let Some(body) = &ast.body {
        body.walk(&mut Vec::new(), &mut |_, b| {
            if !b.triple_patterns.is_empty() {
                triples += b.triple_patterns.len();
                bgps += 1;
            }
        });
    }
    let joins = join_vertices(&body_hypergraph(ast));
    let count = |k: JoinKind| joins.iter().filter(|j| j.kind == k).count() as f64;
    let degrees: Vec<f64> = joins.iter().map(|j| j.degree as f64).collect();
    let (max, min, mean) = if degrees.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        (
            degrees.iter().copied().fold(f64::MIN, f64::max),
            degrees.iter().copied().fold(f64::MAX, f64::min),
            degrees.iter().sum::<f64>() / degrees.len() as f64,
        )
    };
    StructFeatureVector([
        triples as f64,
        bgps as f64,
        ast.projection_vars.len() as f64,
        count(JoinKind::Sink),
        count(JoinKind::Star),
        count(JoinKind::Hybrid),
        count(JoinKind::Path),
        max,
        min,
        mean,
        1.0,
    ])
}

/// Divides each coordinate by its maximum over the session; a coordinate
/// that is zero throughout stays zero.
pub fn normalize_session_vectors(vectors: &[StructFeatureVector]) -> Vec<StructFeatureVector> {
    let mut max = [0.0f64; 11];
    for v in vectors {
        for (m, x) in max.iter_mut().zip(v.0) {
            *m = m.max(x);
        }
    }
    vectors
        .iter()
        .map(|v| {
            let mut out = [0.0; 11];
            for k in 0..11 {
                out[k] = if max[k] == 0.0 { 0.0 } else { v.0[k] / max[k] };
            }
            StructFeatureVector(out)
        })
        .collect()
}

/// Term index for one dataset: every IRI, variable and blank node used by
/// any of its queries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    index: BTreeMap<Term, usize>,
}

impl Vocabulary {
    pub fn build<'a>(asts: impl IntoIterator<Item = &'a QueryAst>) -> Self {
        let terms: BTreeSet<&Term> = asts.into_iter().flat_map(|a| a.term_set.iter()).collect();
        Vocabulary {
            index: terms.into_iter().cloned().enumerate().map(|(i, t)| (t, i)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, t: &Term) -> Option<usize> {
        self.index.get(t).copied()
    }
}

/// Binary incidence row over a vocabulary, stored as sorted indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermVector {
    pub dim: usize,
    pub indices: Vec<usize>,
}

impl TermVector {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &i in &self.indices {
            v[i] = 1.0;
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    fn overlap(&self, other: &TermVector) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    /// Cosine of two binary vectors: `|A ∩ B| / sqrt(|A| |B|)`.
    pub fn cosine(&self, other: &TermVector) -> Result<f64, super::MetricError> {
        if self.is_zero() || other.is_zero() {
            return Err(super::MetricError::UndefinedCosine);
        }
        let (a, b) = (self.indices.len() as f64, other.indices.len() as f64);
        Ok(self.overlap(other) as f64 / (a * b).sqrt())
    }

    /// KL divergence of the L1-normalized vectors over their common support:
    /// `(|A ∩ B| / |A|) ln(|B| / |A|)`. Binary vectors would always give 0.
    pub fn kl(&self, other: &TermVector) -> Result<f64, super::MetricError> {
        let common = self.overlap(other);
        if common == 0 {
            return Err(super::MetricError::EmptySupport);
        }
        let (a, b) = (self.indices.len() as f64, other.indices.len() as f64);
        Ok(common as f64 / a * (b / a).ln())
    }

    /// The L1-normalized dense form used by [`TermVector::kl`].
    pub fn to_distribution(&self) -> Vec<f64> {
        let n = self.indices.len().max(1) as f64;
        self.to_dense().into_iter().map(|x| x / n).collect()
    }
}

/// Incidence of the query's terms; terms outside the vocabulary are ignored.
pub fn term_vector(ast: &QueryAst, vocab: &Vocabulary) -> TermVector {
    let mut indices: Vec<usize> = ast.term_set.iter().filter_map(|t| vocab.get(t)).collect();
    indices.sort_unstable();
    TermVector {
        dim: vocab.len(),
        indices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::parse;

    fn fv(q: &str) -> [f64; 11] {
        feature_vector(&parse(q).unwrap()).0
    }

    #[test]
    fn feature_examples() {
        assert_eq!(
            fv("SELECT ?s WHERE {?s <p> ?o1 . ?s <q> ?o2}"),
            [2.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 2.0, 2.0, 2.0, 1.0]
        );
        assert_eq!(
            fv("ASK {?s <p> ?o}"),
            [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]
        );
        let mixed = fv("SELECT * { ?a <p> ?h . ?b <p> ?h . ?h <q> ?c OPTIONAL { ?c <r> ?d } }");
        // ?h hybrid (3), ?c path (2)
        assert_eq!(mixed, [4.0, 2.0, 5.0, 0.0, 0.0, 1.0, 1.0, 3.0, 2.0, 2.5, 1.0]);
    }

    #[test]
    fn construct_template_is_not_counted() {
        assert_eq!(
            fv("CONSTRUCT { ?s <x> ?o . ?s <y> ?o } WHERE { ?s <p> ?o }"),
            fv("ASK { ?s <p> ?o }")
        );
    }

    #[test]
    fn normalization() {
        let a = StructFeatureVector([2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let b = StructFeatureVector([4.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let n = normalize_session_vectors(&[a, b]);
        assert_eq!(n[0].0[0], 0.5);
        assert_eq!(n[1].0[0], 1.0);
        assert_eq!(n[0].0[2], 0.0);
        let single = normalize_session_vectors(&[a]);
        assert_eq!(single[0].0, [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn term_vectors() {
        let q1 = parse("SELECT * { ?s <a> ?o }").unwrap();
        let q2 = parse("ASK { ?o <a> ?s }").unwrap();
        let q3 = parse("ASK { <c> <b> ?z }").unwrap();
        let vocab = Vocabulary::build([&q1, &q2, &q3]);
        assert_eq!(vocab.len(), 6);
        assert_eq!(term_vector(&q1, &vocab), term_vector(&q2, &vocab));
        let empty = parse("ASK {}").unwrap();
        let z = term_vector(&empty, &vocab);
        assert!(z.is_zero());
        assert!(z.cosine(&term_vector(&q1, &vocab)).is_err());
    }

    #[test]
    fn sparse_metrics_match_dense() {
        let a = TermVector {
            dim: 5,
            indices: vec![0, 1, 3],
        };
        let b = TermVector {
            dim: 5,
            indices: vec![1, 2, 3, 4],
        };
        let dense_cos = crate::analytics::cosine(&a.to_dense(), &b.to_dense()).unwrap();
        assert!((a.cosine(&b).unwrap() - dense_cos).abs() < 1e-12);
        let dense_kl = crate::analytics::kl_divergence(&a.to_distribution(), &b.to_distribution()).unwrap();
        assert!((a.kl(&b).unwrap() - dense_kl).abs() < 1e-12);
    }
}
