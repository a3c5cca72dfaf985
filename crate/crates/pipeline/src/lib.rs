//! Annotation pipeline: main-character selection, cross-shot tracklet
//! completion, adjacent-shot merging, action description and review
//! decisions. Vision models sit behind client traits.

pub mod annotate;
pub mod clients;
pub mod review;
pub mod stages;

use thiserror::Error;

pub use annotate::{annotate_dataset, annotate_video, AnnotateConfig, AnnotateSummary, Clients, VideoOutcome};
pub use clients::{
    Captioner, ClientError, DescriptionModel, DetectionBox, Detector, HttpCaptioner, HttpDescriptionModel,
    HttpDetector, HttpTracker, HttpTransport, ImageRef, MockCaptioner, MockDescriptionModel, MockDetector, MockTracker,
    ModelClientConfig, TrackRequest, TrackSeed, Tracker,
};
pub use review::{apply_decision, apply_review_decisions, Effect, ReviewDecision, Round, Verdict};
pub use stages::{
    center_frame, complete_tracklet, covered_shot_indices, describe_shots, longest_shot, merge_annotated_shots,
    merge_with_mapping, pick_main_character, track_shot, MergeResult, DEFAULT_CATEGORY, DEFAULT_SCORE_FLOOR,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no matching person detection")]
    NoPerson,
    #[error("{stage} failed for video {video_id}{}: {message}", shot_index.map(|s| format!(" shot {s}")).unwrap_or_default())]
    Stage {
        video_id: String,
        shot_index: Option<usize>,
        stage: String,
        message: String,
    },
    #[error("unknown target: {0}")]
    UnknownTarget(String),
    #[error("invalid decision: {0}")]
    InvalidDecision(String),
}

impl PipelineError {
    pub(crate) fn stage(video_id: &str, shot_index: Option<usize>, stage: &str, err: impl ToString) -> Self {
        PipelineError::Stage {
            video_id: video_id.to_string(),
            shot_index,
            stage: stage.to_string(),
            message: err.to_string(),
        }
    }
}
