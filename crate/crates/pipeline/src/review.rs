//! Manual verification verdicts and their effect on a dataset.

use std::fmt;

use loomkit_core::model::Dataset;
use serde::{Deserialize, Serialize};

use crate::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Round {
    /// Look for the main character in shots without a tracklet.
    One,
    /// Check the masks of annotated shots.
    Two,
}

impl TryFrom<u8> for Round {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Round::One),
            2 => Ok(Round::Two),
            _ => Err(format!("unknown round {v}")),
        }
    }
}

impl From<Round> for u8 {
    fn from(r: Round) -> u8 {
        match r {
            Round::One => 1,
            Round::Two => 2,
        }
    }
}

impl fmt::Display for Round {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Keep,
    MissingFound,
    Incorrect,
    Redundant,
}

impl Verdict {
    pub fn allowed_in(self, round: Round) -> bool {
        matches!(
            (round, self),
            (Round::One, Verdict::Keep | Verdict::MissingFound)
                | (Round::Two, Verdict::Keep | Verdict::Incorrect | Verdict::Redundant)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub video_id: String,
    pub round: Round,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_index: Option<usize>,
    pub verdict: Verdict,
    pub reviewer: String,
    pub timestamp: String,
}

impl ReviewDecision {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.verdict.allowed_in(self.round) {
            return Err(PipelineError::InvalidDecision(format!(
                "verdict {:?} not allowed in round {}",
                self.verdict, self.round
            )));
        }
        if self.verdict == Verdict::Redundant && self.shot_index.is_none() {
            return Err(PipelineError::InvalidDecision(
                "redundant verdict needs shot_index".into(),
            ));
        }
        Ok(())
    }
}

/// What a decision did to the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    None,
    Discarded,
    Stripped,
}

/// Applies one decision in place. Decisions about already-discarded videos
/// and repeated strips have no effect.
pub fn apply_decision(dataset: &mut Dataset, decision: &ReviewDecision) -> Result<Effect, PipelineError> {
    decision.validate()?;
    if dataset.is_discarded(&decision.video_id) {
        return Ok(Effect::None);
    }
    let unknown = || PipelineError::UnknownTarget(format!("video {}", decision.video_id));
    let video = dataset.video_mut(&decision.video_id).ok_or_else(unknown)?;
    if let Some(s) = decision.shot_index {
        if s >= video.shots.len() {
            return Err(PipelineError::UnknownTarget(format!(
                "shot {s} of video {} ({} shots)",
                decision.video_id,
                video.shots.len()
            )));
        }
    }
    match (decision.round, decision.verdict) {
        (Round::One, Verdict::MissingFound) => {
            dataset.discard(
                &decision.video_id,
                "round 1: main character found in an unannotated shot",
            );
            Ok(Effect::Discarded)
        }
        (Round::Two, Verdict::Incorrect) => {
            dataset.discard(&decision.video_id, "round 2: incorrect annotation");
            Ok(Effect::Discarded)
        }
        (Round::Two, Verdict::Redundant) => {
            let s = decision.shot_index.expect("validated");
            let shot = video.shots[s];
            let mut changed = false;
            for t in &mut video.tracklets {
                let before = t.masklet.frames.len();
                t.masklet.frames.retain(|f, _| !shot.contains(*f));
                changed |= before != t.masklet.frames.len() || t.covered_shots.contains(&s);
                t.covered_shots.remove(&s);
            }
            let before = video.actions.len();
            video.actions.retain(|a| a.shot_index != s);
            changed |= before != video.actions.len();
            Ok(if changed { Effect::Stripped } else { Effect::None })
        }
        _ => Ok(Effect::None),
    }
}

/// Applies decisions in order to a copy of `dataset`.
pub fn apply_review_decisions(dataset: &Dataset, decisions: &[ReviewDecision]) -> Result<Dataset, PipelineError> {
    let mut out = dataset.clone();
    for d in decisions {
        apply_decision(&mut out, d)?;
    }
    Ok(out)
}
