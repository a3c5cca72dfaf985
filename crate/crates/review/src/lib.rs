//! Manual verification service. Reviewers walk two queues (round 1: look
//! for the main character in unannotated shots; round 2: check annotated
//! shots), and every verdict goes to an append-only JSONL log that is
//! replayed on startup.

pub mod frames;
pub mod http;
pub mod log;
pub mod service;

use std::path::PathBuf;

use thiserror::Error;

pub use frames::{FrameRenderer, FrameSource, PngDirFrames, SyntheticFrames};
pub use http::{router, serve, ServeConfig};
pub use log::DecisionLog;
pub use service::{
    Ack, AckStatus, Candidate, FrameRef, Progress, ReviewService, ReviewTask, RoundProgress, Submission,
};

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("invalid round: {0}")]
    InvalidRound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("unknown target: {0}")]
    UnknownTarget(String),
    #[error("invalid decision: {0}")]
    InvalidDecision(String),
    #[error("missing or wrong token")]
    Unauthorized,
    #[error("decision log {path} line {line}: {reason}")]
    CorruptLog { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] loomkit_core::model::DatasetError),
    #[error("render failed: {0}")]
    Render(String),
    #[error("server: {0}")]
    Serve(String),
}

impl ReviewError {
    pub fn kind(&self) -> &'static str {
        match self {
            ReviewError::InvalidRound(_) => "invalid_round",
            ReviewError::Conflict(_) => "conflict",
            ReviewError::UnknownTarget(_) => "unknown_target",
            ReviewError::InvalidDecision(_) => "invalid_decision",
            ReviewError::Unauthorized => "unauthorized",
            ReviewError::CorruptLog { .. } => "corrupt_log",
            ReviewError::Io { .. } => "io",
            ReviewError::Dataset(_) => "dataset",
            ReviewError::Render(_) => "render",
            ReviewError::Serve(_) => "serve",
        }
    }
}

impl From<loomkit_pipeline::PipelineError> for ReviewError {
    fn from(e: loomkit_pipeline::PipelineError) -> Self {
        use loomkit_pipeline::PipelineError as P;
        match e {
            P::UnknownTarget(m) => ReviewError::UnknownTarget(m),
            P::InvalidDecision(m) => ReviewError::InvalidDecision(m),
            other => ReviewError::InvalidDecision(other.to_string()),
        }
    }
}
