//! Review queues, decision admission and event-sourced dataset state.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::RwLock;

use loomkit_core::model::{Dataset, VideoRecord};
use loomkit_pipeline::{apply_decision, center_frame, longest_shot, Effect, ReviewDecision, Round, Verdict};
use serde::{Deserialize, Serialize};

use crate::frames::{FrameRenderer, FrameSource, RenderedFrame};
use crate::log::DecisionLog;
use crate::ReviewError;

const FRAME_CACHE_ENTRIES: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRef {
    pub frame_index: usize,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub shot_index: usize,
    pub frame: FrameRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewTask {
    pub video_id: String,
    pub round: Round,
    pub reference_frame: FrameRef,
    /// Shots in temporal order.
    pub candidate_frames: Vec<Candidate>,
}

/// Body of `POST /decisions`; the server stamps a missing timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub video_id: String,
    pub round: Round,
    #[serde(default)]
    pub shot_index: Option<usize>,
    pub verdict: Verdict,
    pub reviewer: String,
    #[serde(default)]
    pub timestamp: Option<String>,
}

impl Submission {
    pub fn into_decision(self) -> ReviewDecision {
        ReviewDecision {
            video_id: self.video_id,
            round: self.round,
            shot_index: self.shot_index,
            verdict: self.verdict,
            reviewer: self.reviewer,
            timestamp: self
                .timestamp
                .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckStatus {
    Recorded,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub status: AckStatus,
    /// 1-based position of the decision in the log.
    pub sequence: usize,
    pub effect: Effect,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundProgress {
    pub pending: usize,
    pub decided_videos: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub videos_total: usize,
    pub videos_kept: usize,
    pub videos_discarded: usize,
    pub decisions: usize,
    pub round1: RoundProgress,
    pub round2: RoundProgress,
}

struct State {
    current: Dataset,
    decisions: Vec<ReviewDecision>,
    log: Option<DecisionLog>,
}

enum Admission {
    Duplicate(usize),
    New,
}

pub struct ReviewService {
    original: Dataset,
    state: RwLock<State>,
    renderer: FrameRenderer,
}

fn round1_candidates(v: &VideoRecord) -> Vec<usize> {
    let covered = v.covered_shots();
    (0..v.shots.len()).filter(|i| !covered.contains(i)).collect()
}

fn round2_candidates(v: &VideoRecord) -> Vec<usize> {
    v.covered_shots().into_iter().collect()
}

fn frame_ref(video_id: &str, frame_index: usize) -> FrameRef {
    FrameRef {
        frame_index,
        url: format!("/frames/{video_id}/{frame_index}?overlay=1"),
    }
}

fn same_target(a: &ReviewDecision, b: &ReviewDecision) -> bool {
    a.video_id == b.video_id && a.round == b.round && a.shot_index == b.shot_index && a.verdict == b.verdict
}

impl State {
    fn for_video<'a>(&'a self, video_id: &'a str, round: Round) -> impl Iterator<Item = &'a ReviewDecision> + 'a {
        self.decisions
            .iter()
            .filter(move |d| d.video_id == video_id && d.round == round)
    }

    fn round1_cleared(&self, v: &VideoRecord) -> bool {
        round1_candidates(v).is_empty()
            || self
                .for_video(v.video_id(), Round::One)
                .any(|d| d.verdict == Verdict::Keep)
    }

    fn round2_open_shots(&self, v: &VideoRecord) -> Option<Vec<usize>> {
        let decided: Vec<Option<usize>> = self.for_video(v.video_id(), Round::Two).map(|d| d.shot_index).collect();
        if decided.contains(&None) {
            return None;
        }
        let open: Vec<usize> = round2_candidates(v)
            .into_iter()
            .filter(|s| !decided.contains(&Some(*s)))
            .collect();
        (!open.is_empty()).then_some(open)
    }

    fn pending(&self, original: &Dataset, round: Round) -> Vec<String> {
        let mut ids: Vec<String> = original
            .videos
            .iter()
            .filter(|v| !self.current.is_discarded(v.video_id()))
            .filter(|v| match round {
                Round::One => {
                    !round1_candidates(v).is_empty() && self.for_video(v.video_id(), Round::One).next().is_none()
                }
                Round::Two => self.round1_cleared(v) && self.round2_open_shots(v).is_some(),
            })
            .map(|v| v.video_id().to_string())
            .collect();
        ids.sort();
        ids
    }

    fn check(&self, original: &Dataset, d: &ReviewDecision) -> Result<Admission, ReviewError> {
        d.validate()?;
        let v = original
            .video(&d.video_id)
            .ok_or_else(|| ReviewError::UnknownTarget(format!("video {}", d.video_id)))?;
        if let Some(s) = d.shot_index {
            if s >= v.shots.len() {
                return Err(ReviewError::UnknownTarget(format!(
                    "shot {s} of video {} ({} shots)",
                    d.video_id,
                    v.shots.len()
                )));
            }
        }
        if let Some(i) = self.decisions.iter().position(|e| same_target(e, d)) {
            return Ok(Admission::Duplicate(i + 1));
        }
        if self.current.is_discarded(&d.video_id) {
            return Err(ReviewError::Conflict(format!(
                "video {} is already discarded",
                d.video_id
            )));
        }
        match d.round {
            Round::One => {
                if self.for_video(&d.video_id, Round::One).next().is_some() {
                    return Err(ReviewError::Conflict(format!(
                        "video {} already decided in round 1",
                        d.video_id
                    )));
                }
                let candidates = round1_candidates(v);
                if candidates.is_empty() {
                    return Err(ReviewError::Conflict(format!(
                        "video {} has nothing to review in round 1",
                        d.video_id
                    )));
                }
                if let Some(s) = d.shot_index {
                    if !candidates.contains(&s) {
                        return Err(ReviewError::UnknownTarget(format!(
                            "shot {s} of video {} is annotated",
                            d.video_id
                        )));
                    }
                }
            }
            Round::Two => {
                if !self.round1_cleared(v) {
                    return Err(ReviewError::Conflict(format!(
                        "video {} is still pending in round 1",
                        d.video_id
                    )));
                }
                let Some(open) = self.round2_open_shots(v) else {
                    return Err(ReviewError::Conflict(format!(
                        "video {} already decided in round 2",
                        d.video_id
                    )));
                };
                if let Some(s) = d.shot_index {
                    if !round2_candidates(v).contains(&s) {
                        return Err(ReviewError::UnknownTarget(format!(
                            "shot {s} of video {} has no annotation",
                            d.video_id
                        )));
                    }
                    if !open.contains(&s) {
                        return Err(ReviewError::Conflict(format!(
                            "shot {s} of video {} already decided",
                            d.video_id
                        )));
                    }
                }
            }
        }
        Ok(Admission::New)
    }

    fn admit(&mut self, original: &Dataset, d: ReviewDecision, persist: bool) -> Result<Ack, ReviewError> {
        match self.check(original, &d)? {
            Admission::Duplicate(sequence) => Ok(Ack {
                status: AckStatus::Duplicate,
                sequence,
                effect: Effect::None,
            }),
            Admission::New => {
                let mut next = self.current.clone();
                let effect = apply_decision(&mut next, &d)?;
                if persist {
                    if let Some(log) = &mut self.log {
                        log.append(&d)?;
                    }
                }
                self.current = next;
                self.decisions.push(d);
                Ok(Ack {
                    status: AckStatus::Recorded,
                    sequence: self.decisions.len(),
                    effect,
                })
            }
        }
    }
}

impl ReviewService {
    /// Starts a service over `original`, replaying `log_path` when given.
    pub fn open(original: Dataset, log_path: Option<&Path>, frames: Box<dyn FrameSource>) -> Result<Self, ReviewError> {
        original.validate()?;
        let mut state = State {
            current: original.clone(),
            decisions: Vec::new(),
            log: None,
        };
        if let Some(path) = log_path {
            let (log, previous) = DecisionLog::open(path)?;
            for (i, d) in previous.into_iter().enumerate() {
                state.admit(&original, d, false).map_err(|e| ReviewError::CorruptLog {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            }
            state.log = Some(log);
        }
        Ok(Self {
            original,
            state: RwLock::new(state),
            renderer: FrameRenderer::new(frames, FRAME_CACHE_ENTRIES),
        })
    }

    pub fn in_memory(original: Dataset, frames: Box<dyn FrameSource>) -> Result<Self, ReviewError> {
        Self::open(original, None, frames)
    }

    pub fn original(&self) -> &Dataset {
        &self.original
    }

    pub fn parse_round(raw: &str) -> Result<Round, ReviewError> {
        raw.parse::<u8>()
            .ok()
            .and_then(|r| Round::try_from(r).ok())
            .ok_or_else(|| ReviewError::InvalidRound(raw.to_string()))
    }

    pub fn next_task(&self, round: Round) -> Option<ReviewTask> {
        let state = self.state.read().unwrap();
        let id = state.pending(&self.original, round).into_iter().next()?;
        let v = self.original.video(&id).expect("pending ids come from the dataset");
        let refer = longest_shot(&v.shots)
            .map(|i| center_frame(&v.shots[i]))
            .unwrap_or(v.meta.frame_count / 2);
        let shots = match round {
            Round::One => round1_candidates(v),
            Round::Two => state.round2_open_shots(v).unwrap_or_default(),
        };
        Some(ReviewTask {
            video_id: id.clone(),
            round,
            reference_frame: frame_ref(&id, refer),
            candidate_frames: shots
                .into_iter()
                .map(|s| Candidate {
                    shot_index: s,
                    frame: frame_ref(&id, center_frame(&v.shots[s])),
                })
                .collect(),
        })
    }

    pub fn submit(&self, decision: ReviewDecision) -> Result<Ack, ReviewError> {
        self.state.write().unwrap().admit(&self.original, decision, true)
    }

    pub fn progress(&self) -> Progress {
        let state = self.state.read().unwrap();
        let decided = |round| {
            state
                .decisions
                .iter()
                .filter(|d| d.round == round)
                .map(|d| d.video_id.as_str())
                .collect::<BTreeSet<_>>()
                .len()
        };
        Progress {
            videos_total: self.original.videos.len(),
            videos_kept: state.current.videos.len(),
            videos_discarded: self.original.videos.len() - state.current.videos.len(),
            decisions: state.decisions.len(),
            round1: RoundProgress {
                pending: state.pending(&self.original, Round::One).len(),
                decided_videos: decided(Round::One),
            },
            round2: RoundProgress {
                pending: state.pending(&self.original, Round::Two).len(),
                decided_videos: decided(Round::Two),
            },
        }
    }

    pub fn dataset(&self) -> Dataset {
        self.state.read().unwrap().current.clone()
    }

    pub fn decisions(&self) -> Vec<ReviewDecision> {
        self.state.read().unwrap().decisions.clone()
    }

    /// Renders from the current state so stripped masks disappear; discarded
    /// videos still render from the original.
    pub fn render_frame(
        &self,
        video_id: &str,
        frame_index: usize,
        overlay: bool,
    ) -> Result<RenderedFrame, ReviewError> {
        let video = {
            let state = self.state.read().unwrap();
            state
                .current
                .video(video_id)
                .or_else(|| self.original.video(video_id))
                .cloned()
        };
        let video = video.ok_or_else(|| ReviewError::UnknownTarget(format!("video {video_id}")))?;
        self.renderer.render(&video, frame_index, overlay)
    }
}
