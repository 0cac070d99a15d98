//! Pipeline orchestration, persisted stage artifacts and the report tables.

mod config;
mod pipeline;
mod tables;

use std::path::PathBuf;

pub use config::PipelineConfig;
pub use pipeline::*;
pub use tables::{
    filter_table, locus_table, operator_table, triple_table, Cell, FilterTable, FormChangeRow, LocusRow, LocusTable,
    OperatorRow, OperatorTable, TripleRow, TripleTable, FILTER_TYPES,
};

use crate::corpus::CorpusError;
use crate::intent::IntentError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("run {stage} first")]
    MissingArtifact { stage: &'static str, path: PathBuf },
    #[error(transparent)]
    Corpus(CorpusError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error("{0}")]
    Data(String),
    #[error("cannot {action} {}: {source}", path.display())]
    Io {
        action: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 2 for configuration and usage errors, 3 for bad or insufficient
    /// data, 4 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::MissingArtifact { .. } => 2,
            PipelineError::Corpus(CorpusError::Io { .. }) | PipelineError::Io { .. } => 4,
            PipelineError::Corpus(_) | PipelineError::Intent(_) | PipelineError::Data(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "data",
            _ => "internal",
        }
    }

    /// Machine-readable form for standard error.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "error": self.kind(),
            "exitCode": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            PipelineError::MissingArtifact { stage, path } => {
                v["requiredStage"] = (*stage).into();
                v["path"] = path.display().to_string().into();
            }
            PipelineError::Corpus(CorpusError::Empty { stage }) => {
                v["stage"] = serde_json::to_value(stage).unwrap_or_default();
            }
            _ => {}
        }
        v
    }
}
