//! Per-video orchestration of the annotation stages and the bounded
//! parallel driver over a dataset.

use loomkit_core::model::{Dataset, Tracklet, VideoRecord};
use loomkit_core::prompt::DEFAULT_SAMPLE_FPS;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clients::{Captioner, DescriptionModel, Detector, ImageRef, TrackSeed, Tracker};
use crate::stages::{
    center_frame, complete_tracklet, covered_shot_indices, describe_shots, longest_shot, merge_with_mapping,
    pick_main_character, track_shot, DEFAULT_CATEGORY, DEFAULT_SCORE_FLOOR,
};
use crate::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotateConfig {
    pub category: String,
    pub score_floor: f64,
    /// Upper bound on videos processed at once.
    pub max_in_flight: usize,
    pub sample_fps: f64,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        Self {
            category: DEFAULT_CATEGORY.to_string(),
            score_floor: DEFAULT_SCORE_FLOOR,
            max_in_flight: 4,
            sample_fps: DEFAULT_SAMPLE_FPS,
        }
    }
}

#[derive(Clone, Copy)]
pub struct Clients<'a> {
    pub detector: &'a dyn Detector,
    pub tracker: &'a dyn Tracker,
    pub captioner: &'a dyn Captioner,
    /// Action description runs only when a description model is given.
    pub describer: Option<&'a dyn DescriptionModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VideoOutcome {
    Annotated(VideoRecord),
    Skipped { video_id: String, reason: String },
}

pub fn annotate_video(
    record: &VideoRecord,
    clients: Clients<'_>,
    config: &AnnotateConfig,
) -> Result<VideoOutcome, PipelineError> {
    let meta = &record.meta;
    let shots = &record.shots;
    let longest = longest_shot(shots)?;
    let anchor = ImageRef::new(meta.video_id.clone(), center_frame(&shots[longest]));

    let detections = clients
        .detector
        .detect(&anchor, &config.category)
        .map_err(|e| PipelineError::stage(&meta.video_id, Some(longest), "detect", e))?;
    let main = match pick_main_character(&detections, &config.category, config.score_floor) {
        Ok(b) => b,
        Err(PipelineError::NoPerson) => {
            return Ok(VideoOutcome::Skipped {
                video_id: meta.video_id.clone(),
                reason: "no person detected on the longest shot".into(),
            })
        }
        Err(e) => return Err(e),
    };
    let description = clients
        .captioner
        .caption(&anchor, &main)
        .map_err(|e| PipelineError::stage(&meta.video_id, Some(longest), "caption", e))?;

    let initial = track_shot(meta, shots, longest, TrackSeed::Box { bbox: main }, clients.tracker)?;
    let masklet = complete_tracklet(
        meta,
        shots,
        &initial,
        &description,
        clients.detector,
        clients.tracker,
        &config.category,
        config.score_floor,
    )?;

    let covered = covered_shot_indices(&masklet, shots);
    let merged = merge_with_mapping(shots, &covered);
    let mut tracklet = Tracklet {
        character_id: format!("{}#1", meta.video_id),
        appearance_description: description,
        masklet,
        covered_shots: Default::default(),
    };
    tracklet.refresh_coverage(&merged.shots);

    let mut out = VideoRecord::new(meta.clone());
    out.shots = merged.shots;
    if let Some(model) = clients.describer {
        out.actions = describe_shots(&out.meta, &out.shots, &tracklet, model, config.sample_fps)?;
    }
    out.tracklets = vec![tracklet];
    Ok(VideoOutcome::Annotated(out))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotateSummary {
    pub annotated: usize,
    pub skipped: usize,
}

/// Annotates every video with at most `max_in_flight` running at once.
/// Output order follows the input; skipped videos become tombstones.
pub fn annotate_dataset(
    dataset: &Dataset,
    clients: Clients<'_>,
    config: &AnnotateConfig,
) -> Result<(Dataset, AnnotateSummary), PipelineError> {
    if config.max_in_flight == 0 {
        return Err(PipelineError::InvalidInput("max_in_flight must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.max_in_flight)
        .build()
        .map_err(|e| PipelineError::InvalidInput(e.to_string()))?;
    let outcomes: Vec<VideoOutcome> = pool.install(|| {
        dataset
            .videos
            .par_iter()
            .map(|v| annotate_video(v, clients, config))
            .collect::<Result<_, _>>()
    })?;

    let mut out = Dataset::new(Vec::new());
    out.discarded = dataset.discarded.clone();
    let mut summary = AnnotateSummary::default();
    for o in outcomes {
        match o {
            VideoOutcome::Annotated(v) => {
                summary.annotated += 1;
                out.videos.push(v);
            }
            VideoOutcome::Skipped { video_id, reason } => {
                summary.skipped += 1;
                out.discard(&video_id, &reason);
            }
        }
    }
    Ok((out, summary))
}
