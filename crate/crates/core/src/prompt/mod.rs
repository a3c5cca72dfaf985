//! Inputs and outputs of temporal action annotation: frame-ID sampling and
//! stamping, instance overlays, prompt assembly, output parsing, and the
//! slow/fast visual token budget.

mod glyphs;
mod template;
mod tokens;
mod visual;

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::TemporalSegment;

pub use template::{build_action_prompt, ShotContext, ACTION_PROMPT_TEMPLATE};
pub use tokens::{
    frame_id_text, interleaved_layout, render_layout, token_budget, SequenceItem, TokenBudget, MAX_FAST_FRAMES,
    MAX_SEQUENCE_LENGTH,
};
pub use visual::{
    blend, frame_id_region, instance_color, instance_label_region, overlay_instance_id, stamp_frame_id, Rect,
    BADGE_HEIGHT_FRACTION, INSTANCE_PALETTE,
};

pub const DEFAULT_SAMPLE_FPS: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromptError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("coverage violation at frames {start}-{end}: {reason}")]
    CoverageViolation { start: u32, end: u32, reason: String },
    #[error("line {line}: empty description")]
    EmptyDescription { line: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDescription {
    pub frame_id_start: u32,
    pub frame_id_end: u32,
    pub text: String,
    pub segment: TemporalSegment,
}

impl ActionDescription {
    pub fn new(frame_id_start: u32, frame_id_end: u32, text: impl Into<String>, sample_fps: f64) -> Self {
        let segment = TemporalSegment::new(
            frame_id_to_time(frame_id_start, sample_fps),
            frame_id_to_time(frame_id_end + 1, sample_fps),
        )
        .expect("ids are 1-based and ordered");
        Self {
            frame_id_start,
            frame_id_end,
            text: text.into(),
            segment,
        }
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

/// Time of a 1-based sampled frame id. Id 1 sits at t = 0.
pub fn frame_id_to_time(frame_id: u32, sample_fps: f64) -> f64 {
    (frame_id.max(1) - 1) as f64 / sample_fps
}

/// Dense ids `1..=K` with `K = floor(duration · fps)`, at least one sample.
pub fn sample_frame_ids(duration_s: f64, sample_fps: f64) -> Vec<(u32, f64)> {
    let k = ((duration_s * sample_fps) + 1e-9).floor().max(1.0) as u32;
    (1..=k).map(|id| (id, frame_id_to_time(id, sample_fps))).collect()
}

fn line_grammar() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^\s*[-*]?\s*frames?\s+(\d+)(?:\s*(?:[-\x{2013}\x{2014}]|to)\s*(\d+))?\s*:\s*(.*?)\s*$")
            .expect("static regex")
    })
}

/// Parses `frames A-B: text` lines and checks that the ranges partition
/// `1..=max_frame_id` in order. Lines outside the grammar are ignored.
pub fn parse_action_output(
    text: &str,
    max_frame_id: u32,
    sample_fps: f64,
) -> Result<Vec<ActionDescription>, PromptError> {
    if max_frame_id == 0 {
        return Err(PromptError::Precondition("max_frame_id must be at least 1".into()));
    }
    let mut out: Vec<ActionDescription> = Vec::new();
    let mut next_expected = 1u32;
    for (lineno, line) in text.lines().enumerate() {
        let Some(caps) = line_grammar().captures(line) else {
            continue;
        };
        let start: u32 = caps[1].parse().unwrap_or(u32::MAX);
        let end: u32 = caps
            .get(2)
            .map_or(Ok(start), |m| m.as_str().parse())
            .unwrap_or(u32::MAX);
        let body = caps[3].trim();
        let violation = |reason: &str| PromptError::CoverageViolation {
            start,
            end,
            reason: reason.to_string(),
        };
        if start < 1 || start > end || end > max_frame_id {
            return Err(violation(&format!("range must satisfy 1 <= A <= B <= {max_frame_id}")));
        }
        if start < next_expected {
            return Err(violation("overlaps or precedes an earlier range"));
        }
        if start > next_expected {
            return Err(PromptError::CoverageViolation {
                start: next_expected,
                end: start - 1,
                reason: "frames not described".into(),
            });
        }
        if body.is_empty() {
            return Err(PromptError::EmptyDescription { line: lineno + 1 });
        }
        out.push(ActionDescription::new(start, end, body, sample_fps));
        next_expected = end + 1;
    }
    if next_expected <= max_frame_id {
        return Err(PromptError::CoverageViolation {
            start: next_expected,
            end: max_frame_id,
            reason: "frames not described".into(),
        });
    }
    Ok(out)
}

/// Inverse of [`parse_action_output`].
pub fn serialize_actions(descriptions: &[ActionDescription]) -> String {
    descriptions
        .iter()
        .map(|d| format!("frames {}-{}: {}\n", d.frame_id_start, d.frame_id_end, d.text))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sampling_examples() {
        assert_eq!(sample_frame_ids(0.4, 2.0), vec![(1, 0.0)]);
        let three = sample_frame_ids(3.0, 2.0);
        assert_eq!(three.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(
            three.iter().map(|p| p.1).collect::<Vec<_>>(),
            vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5]
        );
        assert_eq!(sample_frame_ids(10.0, 2.0).len(), 20);
    }

    #[test]
    fn id_to_time() {
        assert_eq!(frame_id_to_time(1, 2.0), 0.0);
        assert_eq!(frame_id_to_time(26, 2.0), 12.5);
        assert_eq!(frame_id_to_time(7, 1.0), 6.0);
    }

    #[test]
    fn parse_examples() {
        let one = parse_action_output("frames 1-6: X", 6, 2.0).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].segment, TemporalSegment::new(0.0, 3.0).unwrap());

        let two = parse_action_output("frames 1-3: X\nframes 4-6: Y", 6, 2.0).unwrap();
        assert_eq!(two.iter().map(|d| d.text.as_str()).collect::<Vec<_>>(), vec!["X", "Y"]);
        assert_eq!(two[1].frame_id_start, 4);

        let gap = parse_action_output("frames 1-3: X\nframes 5-6: Y", 6, 2.0).unwrap_err();
        assert!(matches!(gap, PromptError::CoverageViolation { start: 4, end: 4, .. }));
    }

    #[test]
    fn parse_rejects_bad_ranges() {
        assert!(matches!(
            parse_action_output("frames 1-4: X\nframes 3-6: Y", 6, 2.0),
            Err(PromptError::CoverageViolation { start: 3, end: 6, .. })
        ));
        assert!(parse_action_output("frames 1-7: X", 6, 2.0).is_err());
        assert!(parse_action_output("frames 0-6: X", 6, 2.0).is_err());
        assert!(parse_action_output("frames 1-3: X", 6, 2.0).is_err());
        assert!(parse_action_output("", 6, 2.0).is_err());
        assert!(matches!(
            parse_action_output("frames 1-6:   ", 6, 2.0),
            Err(PromptError::EmptyDescription { line: 1 })
        ));
    }

    #[test]
    fn parse_tolerates_formatting() {
        let text = "Here you go:\n- Frames 1\u{2013}2: The man waves.\nframe 3: He sits.\n\n";
        let d = parse_action_output(text, 3, 2.0).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!((d[1].frame_id_start, d[1].frame_id_end), (3, 3));
        assert_eq!(d[0].word_count(), 3);
    }

    fn covering() -> impl Strategy<Value = (u32, Vec<ActionDescription>)> {
        proptest::collection::vec((1u32..6, "[a-z]{1,8}( [a-z]{1,8}){0,4}"), 1..8).prop_map(|parts| {
            let mut start = 1;
            let mut out = Vec::new();
            for (len, text) in parts {
                out.push(ActionDescription::new(start, start + len - 1, text, 2.0));
                start += len;
            }
            (start - 1, out)
        })
    }

    proptest! {
        #[test]
        fn serialize_round_trips((max, descs) in covering()) {
            let parsed = parse_action_output(&serialize_actions(&descs), max, 2.0).unwrap();
            prop_assert_eq!(&parsed, &descs);
            // accepted output partitions 1..=max
            let mut covered = Vec::new();
            for d in &parsed {
                covered.extend(d.frame_id_start..=d.frame_id_end);
            }
            prop_assert_eq!(covered, (1..=max).collect::<Vec<_>>());
        }

        #[test]
        fn samples_are_dense_and_evenly_spaced(duration in 0.1f64..200.0, fps in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0])) {
            let ids = sample_frame_ids(duration, fps);
            for (k, (id, t)) in ids.iter().enumerate() {
                prop_assert_eq!(*id, k as u32 + 1);
                prop_assert!((t - k as f64 / fps).abs() < 1e-12);
            }
        }
    }
}
