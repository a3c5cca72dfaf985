use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::model::{Dataset, VideoRecord};

/// Lower edges of the shot-length bins in seconds; the last bin is open.
pub const SHOT_LENGTH_EDGES_S: [f64; 7] = [0.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0];
pub const SHOT_CENTER_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Lower bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    fn with_edges(edges: Vec<f64>) -> Self {
        let counts = vec![0; edges.len()];
        Self { edges, counts }
    }

    fn add(&mut self, value: f64) {
        let bin = self.edges.iter().rposition(|&e| value >= e).unwrap_or(0);
        self.counts[bin] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub video_count: usize,
    pub shot_count: usize,
    pub annotated_shot_count: usize,
    pub tracklet_count: usize,
    pub description_count: usize,
    pub mean_shots_per_video: f64,
    pub mean_shot_length_s: f64,
    pub mean_video_duration_s: f64,
    pub mean_description_words: f64,
    pub shot_length_histogram: Histogram,
    /// Shot midpoint over video duration, in `[0, 1]`.
    pub shot_center_histogram: Histogram,
}

/// Normalized midpoint of a shot spanning `[start_s, end_s)` in a video of `duration_s`.
pub fn normalized_center(start_s: f64, end_s: f64, duration_s: f64) -> f64 {
    ((start_s + end_s) / 2.0 / duration_s).clamp(0.0, 1.0)
}

/// Statistics over the kept videos, summed in video-id order.
pub fn dataset_stats(dataset: &Dataset) -> Result<DatasetStats, BenchError> {
    if dataset.videos.is_empty() {
        return Err(BenchError::InvalidInput("dataset has no videos".into()));
    }
    let mut videos: Vec<&VideoRecord> = dataset.videos.iter().collect();
    videos.sort_by(|a, b| a.video_id().cmp(b.video_id()));

    let mut lengths = Histogram::with_edges(SHOT_LENGTH_EDGES_S.to_vec());
    let mut centers = Histogram::with_edges(
        (0..SHOT_CENTER_BINS)
            .map(|i| i as f64 / SHOT_CENTER_BINS as f64)
            .collect(),
    );
    let (mut shots, mut annotated, mut tracklets, mut descriptions, mut words) = (0, 0, 0, 0, 0usize);
    let (mut shot_seconds, mut video_seconds) = (0.0, 0.0);
    for v in videos.iter() {
        let fps = v.meta.fps;
        video_seconds += v.meta.duration_s;
        shots += v.shots.len();
        annotated += v.covered_shots().len();
        tracklets += v.tracklets.len();
        for s in &v.shots {
            let (a, b) = (s.start_frame as f64 / fps, s.end_frame as f64 / fps);
            shot_seconds += b - a;
            lengths.add(b - a);
            centers.add(normalized_center(a, b, v.meta.duration_s));
        }
        for d in v.actions.iter().flat_map(|a| &a.descriptions) {
            descriptions += 1;
            words += d.word_count();
        }
    }
    let n = videos.len() as f64;
    Ok(DatasetStats {
        video_count: videos.len(),
        shot_count: shots,
        annotated_shot_count: annotated,
        tracklet_count: tracklets,
        description_count: descriptions,
        mean_shots_per_video: shots as f64 / n,
        mean_shot_length_s: if shots > 0 { shot_seconds / shots as f64 } else { 0.0 },
        mean_video_duration_s: video_seconds / n,
        mean_description_words: if descriptions > 0 {
            words as f64 / descriptions as f64
        } else {
            0.0
        },
        shot_length_histogram: lengths,
        shot_center_histogram: centers,
    })
}
