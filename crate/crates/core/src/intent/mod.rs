//! Drifting-intent model: result-size-change (RC) states, their Markov
//! transition matrix, and a supervised HMM over RC states and triple-change
//! observations with forward evaluation, Viterbi decoding and next-step
//! suggestions.

mod hmm;
mod observation;
mod rc;

pub use hmm::{train_hmm, Decoded, HmmModel, Suggestion, MODEL_SCHEMA};
pub use observation::{session_training, training_sequences, EventIndex, ObservationSymbol, TrainingSequence};
pub use rc::{markov_matrix, rc_segments, rc_sequence, rc_states, RcState, TransitionMatrix};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntentError {
    #[error("insufficient data")]
    InsufficientData,
    #[error("no training pairs")]
    NoTrainingPairs,
    #[error("observation sequence is empty")]
    EmptyObservations,
    #[error("unknown observation symbol {0:?}")]
    UnknownSymbol(String),
    #[error("observation sequence has zero probability under the model")]
    ZeroProbability,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
