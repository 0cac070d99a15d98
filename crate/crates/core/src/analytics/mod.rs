//! Session evolvement metrics: structural feature vectors, term vectors,
//! cosine and KL similarity, GED series and position matrices.

mod evolvement;
mod metrics;
mod vectors;

pub use evolvement::{
    ged_evolvement, length_percentile, similarity_matrix, GedEvolvement, PositionStat, SessionMatrix, SessionVectors,
    SimilarityMetric,
};
pub use metrics::{cosine, kl_divergence};
pub use vectors::{
    feature_vector, normalize_session_vectors, term_vector, StructFeatureVector, TermVector, Vocabulary, FEATURE_NAMES,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("undefined cosine")]
    UndefinedCosine,
    #[error("empty support")]
    EmptySupport,
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}
