//! Shot partition: content cuts, kernel change points, boundary fusion and
//! the short-shot / shot-count filtering rules.

mod features;
mod kts;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Shot, ShotOrigin};

pub use features::{FeatureSource, FrameFeatureSeries};
pub use kts::{change_point_penalty, kts_segment, optimal_segmentations, ChangePointResult, KtsKernel, ScatterTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShotError {
    #[error("invalid features: {0}")]
    InvalidFeatures(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub const DEFAULT_CUT_THRESHOLD: f64 = 27.0;
pub const DEFAULT_MIN_SHOT_S: f64 = 1.0;
pub const DEFAULT_MAX_SHOTS: usize = 10;

/// Indices `i >= 1` where the mean absolute per-channel difference to frame
/// `i - 1` exceeds `threshold`. Features are expected on a 0-255 scale.
pub fn detect_content_cuts(features: &FrameFeatureSeries, threshold: f64) -> Result<Vec<usize>, ShotError> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(ShotError::InvalidInput(format!(
            "threshold {threshold} must be positive"
        )));
    }
    let dim = features.dim() as f64;
    Ok((1..features.len())
        .filter(|&i| {
            let diff: f64 = features
                .row(i)
                .iter()
                .zip(features.row(i - 1))
                .map(|(a, b)| (a - b).abs())
                .sum();
            diff / dim > threshold
        })
        .collect())
}

/// A fused boundary and which detector produced it. `Fused` means both
/// detectors placed a cut within the gap of each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedBoundary {
    pub frame: usize,
    pub origin: ShotOrigin,
}

/// Union of both boundary lists where content cuts take precedence: a
/// boundary within `min_gap_frames` of an already accepted one is dropped,
/// and among boundaries of the same detector the smaller index wins.
pub fn fuse_boundaries_tagged(
    content_cuts: &[usize],
    kts_cuts: &[usize],
    min_gap_frames: usize,
) -> Vec<TaggedBoundary> {
    let mut accepted: Vec<TaggedBoundary> = Vec::new();
    let mut sorted_content = content_cuts.to_vec();
    sorted_content.sort_unstable();
    let mut sorted_kts = kts_cuts.to_vec();
    sorted_kts.sort_unstable();

    for (list, origin) in [(sorted_content, ShotOrigin::ContentCut), (sorted_kts, ShotOrigin::Kts)] {
        for frame in list {
            let near = accepted
                .iter_mut()
                .filter(|b| b.frame.abs_diff(frame) <= min_gap_frames)
                .min_by_key(|b| b.frame.abs_diff(frame));
            match near {
                Some(b) => {
                    if b.origin != origin {
                        b.origin = ShotOrigin::Fused;
                    }
                }
                None => accepted.push(TaggedBoundary { frame, origin }),
            }
        }
    }
    accepted.sort_by_key(|b| b.frame);
    accepted
}

pub fn fuse_boundaries(content_cuts: &[usize], kts_cuts: &[usize], min_gap_frames: usize) -> Vec<usize> {
    fuse_boundaries_tagged(content_cuts, kts_cuts, min_gap_frames)
        .into_iter()
        .map(|b| b.frame)
        .collect()
}

/// Tiles `[0, frame_count)` with shots split at the given boundaries. Each
/// shot takes the origin of the boundary that opens it; the first shot takes
/// the origin of the boundary that closes it.
pub fn shots_from_boundaries(boundaries: &[TaggedBoundary], frame_count: usize) -> Result<Vec<Shot>, ShotError> {
    if frame_count == 0 {
        return Err(ShotError::InvalidInput("video has no frames".into()));
    }
    let inner: Vec<&TaggedBoundary> = boundaries
        .iter()
        .filter(|b| b.frame > 0 && b.frame < frame_count)
        .collect();
    let mut shots = Vec::with_capacity(inner.len() + 1);
    let mut start = 0;
    let mut origin = inner.first().map_or(ShotOrigin::Fused, |b| b.origin);
    for b in inner {
        if b.frame <= start {
            continue;
        }
        shots.push(Shot::new(start, b.frame, origin).expect("start < boundary"));
        start = b.frame;
        origin = b.origin;
    }
    shots.push(Shot::new(start, frame_count, origin).expect("start < frame_count"));
    Ok(shots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FilterOutcome {
    Kept { shots: Vec<Shot> },
    DiscardVideo { shot_count: usize },
}

/// Merges every shot shorter than `min_len_s` into its shorter neighbour
/// (preceding neighbour on ties), shortest offender first, until none remain
/// or a single shot is left. Videos with more than `max_shot_count`
/// surviving shots are discarded.
pub fn filter_shots(
    shots: &[Shot],
    fps: f64,
    min_len_s: f64,
    max_shot_count: usize,
) -> Result<FilterOutcome, ShotError> {
    if shots.is_empty() {
        return Err(ShotError::InvalidInput("empty shot list".into()));
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(ShotError::InvalidInput(format!("fps {fps} must be positive")));
    }
    for pair in shots.windows(2) {
        if pair[0].end_frame != pair[1].start_frame {
            return Err(ShotError::InvalidInput(format!(
                "shots do not tile at frame {}",
                pair[0].end_frame
            )));
        }
    }
    let mut shots = shots.to_vec();
    while shots.len() > 1 {
        let offender = shots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.duration_s(fps) < min_len_s)
            .min_by_key(|(i, s)| (s.len(), *i))
            .map(|(i, _)| i);
        let Some(i) = offender else { break };
        let into_prev = match (i.checked_sub(1), shots.get(i + 1)) {
            (Some(p), Some(next)) => shots[p].len() <= next.len(),
            (Some(_), None) => true,
            (None, _) => false,
        };
        let (a, b) = if into_prev { (i - 1, i) } else { (i, i + 1) };
        let merged = Shot::new(shots[a].start_frame, shots[b].end_frame, ShotOrigin::Merged)
            .expect("adjacent shots merge into a valid shot");
        shots.splice(a..=b, [merged]);
    }
    if shots.len() > max_shot_count {
        return Ok(FilterOutcome::DiscardVideo {
            shot_count: shots.len(),
        });
    }
    Ok(FilterOutcome::Kept { shots })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionParams {
    pub threshold: f64,
    pub max_change_points: usize,
    pub penalty_weight: f64,
    pub kernel: KtsKernel,
    pub min_gap_frames: usize,
    pub min_shot_s: f64,
    pub max_shots: usize,
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_CUT_THRESHOLD,
            max_change_points: 24,
            penalty_weight: 1.0,
            kernel: KtsKernel::default(),
            min_gap_frames: 0,
            min_shot_s: DEFAULT_MIN_SHOT_S,
            max_shots: DEFAULT_MAX_SHOTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub content_cuts: Vec<usize>,
    pub kts: ChangePointResult,
    pub fused: Vec<TaggedBoundary>,
    pub outcome: FilterOutcome,
}

/// Runs the whole shot-partition stage on a per-frame feature series.
/// Feature index `i` maps to video frame `round(i · fps / sample_fps)`.
pub fn partition(
    features: &FrameFeatureSeries,
    frame_count: usize,
    fps: f64,
    params: &PartitionParams,
) -> Result<PartitionReport, ShotError> {
    let content_cuts = detect_content_cuts(features, params.threshold)?;
    let kts = if features.len() >= 2 {
        let m = params.max_change_points.min(features.len() - 1);
        kts_segment(features, m, params.penalty_weight, params.kernel)?
    } else {
        ChangePointResult {
            boundaries: Vec::new(),
            objective: 0.0,
            num_segments: 1,
        }
    };
    let scale = fps / features.sample_fps();
    let to_frame = |i: &usize| ((*i as f64) * scale).round() as usize;
    let content_frames: Vec<usize> = content_cuts.iter().map(to_frame).collect();
    let kts_frames: Vec<usize> = kts.boundaries.iter().map(to_frame).collect();
    let fused = fuse_boundaries_tagged(&content_frames, &kts_frames, params.min_gap_frames);
    let shots = shots_from_boundaries(&fused, frame_count)?;
    let outcome = filter_shots(&shots, fps, params.min_shot_s, params.max_shots)?;
    Ok(PartitionReport {
        content_cuts: content_frames,
        kts,
        fused,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rgb_series(rows: Vec<Vec<f64>>) -> FrameFeatureSeries {
        FrameFeatureSeries::new(rows, 30.0, FeatureSource::External).unwrap()
    }

    fn shot(a: usize, b: usize) -> Shot {
        Shot::new(a, b, ShotOrigin::ContentCut).unwrap()
    }

    #[test]
    fn content_cut_examples() {
        let same = rgb_series(vec![vec![10.0, 20.0, 30.0]; 5]);
        assert!(detect_content_cuts(&same, 27.0).unwrap().is_empty());

        let bw = rgb_series(vec![vec![0.0; 3], vec![255.0; 3]]);
        assert_eq!(detect_content_cuts(&bw, 27.0).unwrap(), vec![1]);

        let ramp = rgb_series((0..20).map(|i| vec![5.0 * i as f64; 3]).collect());
        assert!(detect_content_cuts(&ramp, 27.0).unwrap().is_empty());

        let single = rgb_series(vec![vec![1.0; 3]]);
        assert!(detect_content_cuts(&single, 27.0).unwrap().is_empty());
        assert!(detect_content_cuts(&single, 0.0).is_err());
    }

    #[test]
    fn hsv_black_to_white_is_a_cut() {
        use crate::raster::RgbImage;
        let frames = [RgbImage::new(8, 8), RgbImage::filled(8, 8, [255, 255, 255])];
        let s = FrameFeatureSeries::from_frames(&frames, 30.0).unwrap();
        // only V changes: (0 + 0 + 255) / 3
        assert_eq!(detect_content_cuts(&s, 27.0).unwrap(), vec![1]);
        assert!(detect_content_cuts(&s, 85.0).unwrap().is_empty());
    }

    #[test]
    fn fuse_examples() {
        assert!(fuse_boundaries(&[], &[], 5).is_empty());
        assert_eq!(fuse_boundaries(&[10], &[10], 0), vec![10]);
        assert_eq!(fuse_boundaries(&[10], &[12], 5), vec![10]);
        assert_eq!(fuse_boundaries(&[10], &[12], 1), vec![10, 12]);
        assert_eq!(fuse_boundaries(&[], &[12, 14, 30], 3), vec![12, 30]);
        let tagged = fuse_boundaries_tagged(&[10, 40], &[12, 25], 5);
        assert_eq!(
            tagged,
            vec![
                TaggedBoundary {
                    frame: 10,
                    origin: ShotOrigin::Fused
                },
                TaggedBoundary {
                    frame: 25,
                    origin: ShotOrigin::Kts
                },
                TaggedBoundary {
                    frame: 40,
                    origin: ShotOrigin::ContentCut
                },
            ]
        );
    }

    #[test]
    fn shots_tile_video() {
        let b = fuse_boundaries_tagged(&[10], &[25], 0);
        let shots = shots_from_boundaries(&b, 40).unwrap();
        assert_eq!(shots.len(), 3);
        assert_eq!(shots[0].frames(), 0..10);
        assert_eq!(shots[0].origin, ShotOrigin::ContentCut);
        assert_eq!(shots[2].origin, ShotOrigin::Kts);
        assert_eq!(
            shots_from_boundaries(&[], 7).unwrap(),
            vec![Shot::new(0, 7, ShotOrigin::Fused).unwrap()]
        );
    }

    #[test]
    fn filter_examples() {
        let one = [shot(0, 900)];
        assert_eq!(
            filter_shots(&one, 30.0, 1.0, 10).unwrap(),
            FilterOutcome::Kept { shots: one.to_vec() }
        );

        let short_long = [shot(0, 15), shot(15, 615)];
        let FilterOutcome::Kept { shots } = filter_shots(&short_long, 30.0, 1.0, 10).unwrap() else {
            panic!("expected kept");
        };
        assert_eq!(shots, vec![Shot::new(0, 615, ShotOrigin::Merged).unwrap()]);

        let eleven: Vec<Shot> = (0..11).map(|i| shot(i * 150, (i + 1) * 150)).collect();
        assert_eq!(
            filter_shots(&eleven, 30.0, 1.0, 10).unwrap(),
            FilterOutcome::DiscardVideo { shot_count: 11 }
        );
        let ten = &eleven[..10];
        assert!(matches!(
            filter_shots(ten, 30.0, 1.0, 10).unwrap(),
            FilterOutcome::Kept { .. }
        ));

        assert!(filter_shots(&[], 30.0, 1.0, 10).is_err());
        assert!(filter_shots(&[shot(0, 5), shot(6, 9)], 30.0, 1.0, 10).is_err());
    }

    #[test]
    fn short_shot_goes_to_shorter_neighbour() {
        // 60 | 10 | 40 frames at 30 fps: middle merges right
        let out = filter_shots(&[shot(0, 60), shot(60, 70), shot(70, 110)], 30.0, 1.0, 10).unwrap();
        let FilterOutcome::Kept { shots } = out else { panic!() };
        assert_eq!(
            shots.iter().map(|s| s.frames()).collect::<Vec<_>>(),
            vec![0..60, 60..110]
        );
        // tie goes to the preceding shot
        let out = filter_shots(&[shot(0, 40), shot(40, 50), shot(50, 90)], 30.0, 1.0, 10).unwrap();
        let FilterOutcome::Kept { shots } = out else { panic!() };
        assert_eq!(
            shots.iter().map(|s| s.frames()).collect::<Vec<_>>(),
            vec![0..50, 50..90]
        );
        assert_eq!(shots[1].origin, ShotOrigin::ContentCut);
    }

    #[test]
    fn partition_end_to_end() {
        let mut rows = vec![vec![0.0, 0.0, 20.0]; 60];
        rows.extend(vec![vec![0.0, 0.0, 220.0]; 60]);
        let s = rgb_series(rows);
        let params = PartitionParams {
            kernel: KtsKernel::Linear,
            min_gap_frames: 5,
            ..Default::default()
        };
        let report = partition(&s, 120, 30.0, &params).unwrap();
        assert_eq!(report.content_cuts, vec![60]);
        let FilterOutcome::Kept { shots } = report.outcome else {
            panic!()
        };
        assert_eq!(shots.len(), 2);
        assert_eq!(shots[1].start_frame, 60);
    }

    proptest! {
        #[test]
        fn cuts_ignore_uniform_offsets(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..255.0, 3), 2..30),
            offset in proptest::collection::vec(-100.0f64..100.0, 3),
        ) {
            let base = detect_content_cuts(&rgb_series(rows.clone()), 27.0).unwrap();
            let shifted: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().zip(&offset).map(|(v, o)| v + o).collect())
                .collect();
            prop_assert_eq!(detect_content_cuts(&rgb_series(shifted), 27.0).unwrap(), base);
        }

        #[test]
        fn filter_output_tiles_and_respects_min_len(lens in proptest::collection::vec(1usize..90, 1..16)) {
            let mut shots = Vec::new();
            let mut start = 0;
            for l in &lens {
                shots.push(shot(start, start + l));
                start += l;
            }
            let total = start;
            match filter_shots(&shots, 30.0, 1.0, 10).unwrap() {
                FilterOutcome::Kept { shots: kept } => {
                    prop_assert_eq!(kept[0].start_frame, 0);
                    prop_assert_eq!(kept.last().unwrap().end_frame, total);
                    for w in kept.windows(2) {
                        prop_assert_eq!(w[0].end_frame, w[1].start_frame);
                    }
                    if total >= 30 {
                        prop_assert!(kept.iter().all(|s| s.len() >= 30));
                    }
                    prop_assert!(kept.len() <= 10);
                }
                FilterOutcome::DiscardVideo { shot_count } => prop_assert!(shot_count > 10),
            }
        }
    }
}
