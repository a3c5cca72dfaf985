//! Individual pipeline stages: main-character selection, tracklet completion,
//! adjacent-shot merging and action description.

use std::collections::BTreeSet;

use loomkit_core::model::{Masklet, Shot, ShotActions, ShotOrigin, Tracklet, VideoMeta};
use loomkit_core::prompt::{build_action_prompt, parse_action_output, sample_frame_ids, ShotContext};

use crate::clients::{DescriptionModel, DetectionBox, Detector, ImageRef, TrackRequest, TrackSeed, Tracker};
use crate::PipelineError;

pub const DEFAULT_CATEGORY: &str = "person";
pub const DEFAULT_SCORE_FLOOR: f64 = 0.35;

pub fn center_frame(shot: &Shot) -> usize {
    (shot.start_frame + shot.end_frame - 1) / 2
}

/// Index of the longest shot; ties go to the earliest.
pub fn longest_shot(shots: &[Shot]) -> Result<usize, PipelineError> {
    let mut best: Option<(usize, usize)> = None;
    for (i, s) in shots.iter().enumerate() {
        if best.is_none_or(|(_, len)| s.len() > len) {
            best = Some((i, s.len()));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| PipelineError::InvalidInput("no shots".into()))
}

/// Highest-scoring box with the wanted label and a score at or above the floor.
pub fn pick_main_character(
    detections: &[DetectionBox],
    category: &str,
    score_floor: f64,
) -> Result<DetectionBox, PipelineError> {
    let mut best: Option<&DetectionBox> = None;
    for d in detections
        .iter()
        .filter(|d| d.label == category && d.score >= score_floor)
    {
        if best.is_none_or(|b| d.score > b.score) {
            best = Some(d);
        }
    }
    best.cloned().ok_or(PipelineError::NoPerson)
}

/// Runs the tracker on one shot and keeps only masks inside it with the video's geometry.
pub fn track_shot(
    meta: &VideoMeta,
    shots: &[Shot],
    shot_index: usize,
    seed: TrackSeed,
    tracker: &dyn Tracker,
) -> Result<Masklet, PipelineError> {
    let shot = shots[shot_index];
    let request = TrackRequest {
        video_ref: meta.video_id.clone(),
        shot,
        seed,
        seed_frame: center_frame(&shot),
        geometry: meta.geometry,
    };
    let frames = tracker
        .track(&request)
        .map_err(|e| PipelineError::stage(&meta.video_id, Some(shot_index), "track", e))?;
    let mut masklet = Masklet::new(meta.video_id.clone());
    for (frame, mask) in frames {
        if !shot.contains(frame) {
            continue;
        }
        if mask.geometry() != meta.geometry {
            return Err(PipelineError::stage(
                &meta.video_id,
                Some(shot_index),
                "track",
                "mask geometry differs from the video",
            ));
        }
        masklet.insert(frame, mask).expect("geometry checked");
    }
    Ok(masklet)
}

pub fn covered_shot_indices(masklet: &Masklet, shots: &[Shot]) -> BTreeSet<usize> {
    shots
        .iter()
        .enumerate()
        .filter(|(_, s)| masklet.has_foreground_in(s.frames()))
        .map(|(i, _)| i)
        .collect()
}

/// Re-detects the character in every shot without foreground and tracks it
/// from that shot's center frame. Existing masks are never replaced.
#[allow(clippy::too_many_arguments)]
pub fn complete_tracklet(
    meta: &VideoMeta,
    shots: &[Shot],
    initial: &Masklet,
    description: &str,
    detector: &dyn Detector,
    tracker: &dyn Tracker,
    category: &str,
    score_floor: f64,
) -> Result<Masklet, PipelineError> {
    let mut masklet = initial.clone();
    for (i, shot) in shots.iter().enumerate() {
        if masklet.has_foreground_in(shot.frames()) {
            continue;
        }
        let image = ImageRef::new(meta.video_id.clone(), center_frame(shot));
        let detections = detector
            .detect(&image, description)
            .map_err(|e| PipelineError::stage(&meta.video_id, Some(i), "detect", e))?;
        let bbox = match pick_main_character(&detections, category, score_floor) {
            Ok(b) => b,
            Err(PipelineError::NoPerson) => continue,
            Err(e) => return Err(e),
        };
        let tracked = track_shot(meta, shots, i, TrackSeed::Box { bbox }, tracker)?;
        for (frame, mask) in tracked.frames {
            if !masklet.frames.contains_key(&frame) {
                masklet.insert(frame, mask).expect("geometry checked");
            }
        }
    }
    Ok(masklet)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeResult {
    pub shots: Vec<Shot>,
    /// New shot index for each input shot.
    pub mapping: Vec<usize>,
}

/// Collapses each maximal run of two or more adjacent covered shots into one merged shot.
pub fn merge_with_mapping(shots: &[Shot], covered: &BTreeSet<usize>) -> MergeResult {
    let mut out: Vec<Shot> = Vec::with_capacity(shots.len());
    let mut mapping = Vec::with_capacity(shots.len());
    let mut i = 0;
    while i < shots.len() {
        let mut j = i + 1;
        if covered.contains(&i) {
            while j < shots.len() && covered.contains(&j) {
                j += 1;
            }
        }
        let shot = if j - i > 1 {
            Shot::new(shots[i].start_frame, shots[j - 1].end_frame, ShotOrigin::Merged).expect("nonempty run")
        } else {
            shots[i]
        };
        mapping.extend(std::iter::repeat_n(out.len(), j - i));
        out.push(shot);
        i = j;
    }
    MergeResult { shots: out, mapping }
}

pub fn merge_annotated_shots(shots: &[Shot], covered: &BTreeSet<usize>) -> Vec<Shot> {
    merge_with_mapping(shots, covered).shots
}

/// Prompts the description model for every covered shot and parses its output.
/// Frame ids restart at 1 in each shot; segments are relative to the shot start.
pub fn describe_shots(
    meta: &VideoMeta,
    shots: &[Shot],
    tracklet: &Tracklet,
    model: &dyn DescriptionModel,
    sample_fps: f64,
) -> Result<Vec<ShotActions>, PipelineError> {
    let mut out = Vec::new();
    for &i in &tracklet.covered_shots {
        let shot = &shots[i];
        let n = sample_frame_ids(shot.duration_s(meta.fps), sample_fps).len() as u32;
        let context = ShotContext {
            video_id: meta.video_id.clone(),
            shot_index: i,
            instance_id: 1,
            appearance_description: tracklet.appearance_description.clone(),
        };
        let prompt = build_action_prompt(&context, n)
            .map_err(|e| PipelineError::stage(&meta.video_id, Some(i), "describe", e))?;
        let raw = model
            .describe(&meta.video_id, i, &prompt, n)
            .map_err(|e| PipelineError::stage(&meta.video_id, Some(i), "describe", e))?;
        let descriptions = parse_action_output(&raw, n, sample_fps)
            .map_err(|e| PipelineError::stage(&meta.video_id, Some(i), "describe", e))?;
        out.push(ShotActions {
            shot_index: i,
            descriptions,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shot(a: usize, b: usize) -> Shot {
        Shot::new(a, b, ShotOrigin::ContentCut).unwrap()
    }

    fn tile(lengths: &[usize]) -> Vec<Shot> {
        let mut start = 0;
        lengths
            .iter()
            .map(|&l| {
                let s = shot(start, start + l);
                start += l;
                s
            })
            .collect()
    }

    fn person(score: f64) -> DetectionBox {
        DetectionBox::new(0.0, 0.0, 4.0, 4.0, score, "person").unwrap()
    }

    #[test]
    fn center_frame_examples() {
        assert_eq!(center_frame(&shot(0, 1)), 0);
        assert_eq!(center_frame(&shot(0, 10)), 4);
        assert_eq!(center_frame(&shot(6, 9)), 7);
    }

    #[test]
    fn longest_shot_examples() {
        assert_eq!(longest_shot(&tile(&[4])).unwrap(), 0);
        assert_eq!(longest_shot(&tile(&[5, 9, 9])).unwrap(), 1);
        assert_eq!(longest_shot(&tile(&[3, 8, 2])).unwrap(), 1);
        assert!(matches!(longest_shot(&[]), Err(PipelineError::InvalidInput(_))));
    }

    #[test]
    fn main_character_examples() {
        assert!(matches!(
            pick_main_character(&[], "person", 0.35),
            Err(PipelineError::NoPerson)
        ));
        assert_eq!(pick_main_character(&[person(0.9)], "person", 0.35).unwrap().score, 0.9);
        let dog = DetectionBox::new(0.0, 0.0, 4.0, 4.0, 0.99, "dog").unwrap();
        let got = pick_main_character(&[person(0.7), dog, person(0.92)], "person", 0.35).unwrap();
        assert_eq!(got.score, 0.92);
        assert!(matches!(
            pick_main_character(&[person(0.2)], "person", 0.35),
            Err(PipelineError::NoPerson)
        ));
    }

    #[test]
    fn merge_examples() {
        let shots = tile(&[3, 4, 5, 6]);
        assert_eq!(merge_annotated_shots(&shots, &BTreeSet::new()), shots);
        let m = merge_with_mapping(&shots, &[0, 1, 3].into());
        assert_eq!(m.shots.len(), 3);
        assert_eq!(
            (m.shots[0].start_frame, m.shots[0].end_frame, m.shots[0].origin),
            (0, 7, ShotOrigin::Merged)
        );
        assert_eq!(m.shots[1], shots[2]);
        assert_eq!(m.shots[2], shots[3]);
        assert_eq!(m.mapping, vec![0, 0, 1, 2]);
        let all = merge_annotated_shots(&shots, &[0, 1, 2, 3].into());
        assert_eq!(all.len(), 1);
        assert_eq!((all[0].start_frame, all[0].end_frame), (0, 18));
    }
}
