//! Shared domain types.

mod dataset;
mod rle;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{Dataset, DatasetError, DiscardRecord, ShotActions, VideoRecord, SCHEMA_VERSION};
pub use rle::{rle_decode, rle_encode, BinaryMask, Bitmap, RleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GeometryRepr")]
pub struct FrameGeometry {
    pub height: u32,
    pub width: u32,
}

#[derive(Deserialize)]
struct GeometryRepr {
    height: u32,
    width: u32,
}

impl TryFrom<GeometryRepr> for FrameGeometry {
    type Error = RleError;

    fn try_from(r: GeometryRepr) -> Result<Self, Self::Error> {
        FrameGeometry::new(r.height, r.width)
    }
}

impl FrameGeometry {
    pub fn new(height: u32, width: u32) -> Result<Self, RleError> {
        if height == 0 || width == 0 {
            return Err(RleError::InvalidGeometry { height, width });
        }
        Ok(Self { height, width })
    }

    pub fn pixel_count(&self) -> usize {
        self.height as usize * self.width as usize
    }

    pub fn diagonal(&self) -> f64 {
        (self.height as f64).hypot(self.width as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: usize,
    pub duration_s: f64,
    pub geometry: FrameGeometry,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid video meta for {video_id}: {reason}")]
    InvalidMeta { video_id: String, reason: String },
    #[error("invalid segment [{start}, {end})")]
    InvalidSegment { start: f64, end: f64 },
    #[error("invalid shot [{start}, {end})")]
    InvalidShot { start: usize, end: usize },
    #[error("mask geometry {found:?} differs from masklet geometry {expected:?}")]
    GeometryMismatch {
        expected: FrameGeometry,
        found: FrameGeometry,
    },
}

impl VideoMeta {
    /// Builds metadata with `duration_s` derived from the frame count.
    pub fn new(
        video_id: impl Into<String>,
        fps: f64,
        frame_count: usize,
        geometry: FrameGeometry,
    ) -> Result<Self, ModelError> {
        let meta = Self {
            video_id: video_id.into(),
            fps,
            frame_count,
            duration_s: frame_count as f64 / fps,
            geometry,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: &str| {
            Err(ModelError::InvalidMeta {
                video_id: self.video_id.clone(),
                reason: reason.to_string(),
            })
        };
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return fail("fps must be positive");
        }
        if self.frame_count == 0 {
            return fail("frame_count must be at least 1");
        }
        let nominal = self.frame_count as f64 / self.fps;
        if (self.duration_s - nominal).abs() > 1.0 / self.fps + 1e-9 {
            return fail("duration_s disagrees with frame_count / fps");
        }
        Ok(())
    }

    pub fn frame_to_seconds(&self, frame: usize) -> f64 {
        frame as f64 / self.fps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotOrigin {
    ContentCut,
    Kts,
    Fused,
    Merged,
}

/// Half-open frame interval `[start_frame, end_frame)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ShotRepr")]
pub struct Shot {
    pub start_frame: usize,
    pub end_frame: usize,
    pub origin: ShotOrigin,
}

#[derive(Deserialize)]
struct ShotRepr {
    start_frame: usize,
    end_frame: usize,
    origin: ShotOrigin,
}

impl TryFrom<ShotRepr> for Shot {
    type Error = ModelError;

    fn try_from(r: ShotRepr) -> Result<Self, Self::Error> {
        Shot::new(r.start_frame, r.end_frame, r.origin)
    }
}

impl Shot {
    pub fn new(start_frame: usize, end_frame: usize, origin: ShotOrigin) -> Result<Self, ModelError> {
        if start_frame >= end_frame {
            return Err(ModelError::InvalidShot {
                start: start_frame,
                end: end_frame,
            });
        }
        Ok(Self {
            start_frame,
            end_frame,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.end_frame - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, frame: usize) -> bool {
        (self.start_frame..self.end_frame).contains(&frame)
    }

    pub fn frames(&self) -> std::ops::Range<usize> {
        self.start_frame..self.end_frame
    }

    pub fn duration_s(&self, fps: f64) -> f64 {
        self.len() as f64 / fps
    }
}

/// Closed-open interval in seconds, serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct TemporalSegment {
    start_s: f64,
    end_s: f64,
}

impl TryFrom<[f64; 2]> for TemporalSegment {
    type Error = ModelError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        TemporalSegment::new(v[0], v[1])
    }
}

impl From<TemporalSegment> for [f64; 2] {
    fn from(s: TemporalSegment) -> Self {
        [s.start_s, s.end_s]
    }
}

impl TemporalSegment {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self, ModelError> {
        if !(start_s.is_finite() && end_s.is_finite() && start_s >= 0.0 && start_s < end_s) {
            return Err(ModelError::InvalidSegment {
                start: start_s,
                end: end_s,
            });
        }
        Ok(Self { start_s, end_s })
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn end_s(&self) -> f64 {
        self.end_s
    }

    pub fn length(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Inclusive frame span returned by [`Masklet::loc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameSpan {
    pub first: usize,
    pub last: usize,
}

impl FrameSpan {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn frames(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    /// Seconds covered by the span; each frame occupies `1 / fps`.
    pub fn to_segment(&self, fps: f64) -> TemporalSegment {
        TemporalSegment {
            start_s: self.first as f64 / fps,
            end_s: (self.last + 1) as f64 / fps,
        }
    }
}

/// Sparse per-frame masks for one object.
///
/// A stored all-zero mask records that the object was judged absent; an
/// unstored frame was never annotated. Both count as empty when scoring.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Masklet {
    #[serde(default)]
    pub video_id: String,
    #[serde(with = "frame_keys")]
    pub frames: BTreeMap<usize, BinaryMask>,
}

/// Frame maps use decimal string keys, parsed explicitly so they survive
/// buffering inside flattened and tagged containers.
mod frame_keys {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::BinaryMask;

    pub fn serialize<S: Serializer>(map: &BTreeMap<usize, BinaryMask>, s: S) -> Result<S::Ok, S::Error> {
        map.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, BinaryMask>, D::Error> {
        let raw = BTreeMap::<String, BinaryMask>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|f| (f, v))
                    .map_err(|_| D::Error::custom(format!("frame key {k:?} is not a frame index")))
            })
            .collect()
    }
}

impl Masklet {
    pub fn new(video_id: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            frames: BTreeMap::new(),
        }
    }

    pub fn geometry(&self) -> Option<FrameGeometry> {
        self.frames.values().next().map(BinaryMask::geometry)
    }

    pub fn insert(&mut self, frame: usize, mask: BinaryMask) -> Result<Option<BinaryMask>, ModelError> {
        if let Some(expected) = self.geometry() {
            if expected != mask.geometry() {
                return Err(ModelError::GeometryMismatch {
                    expected,
                    found: mask.geometry(),
                });
            }
        }
        Ok(self.frames.insert(frame, mask))
    }

    pub fn get(&self, frame: usize) -> Option<&BinaryMask> {
        self.frames.get(&frame)
    }

    pub fn nonempty_frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.frames.iter().filter(|(_, m)| !m.is_empty()).map(|(&f, _)| f)
    }

    pub fn has_foreground_in(&self, range: std::ops::Range<usize>) -> bool {
        self.frames.range(range).any(|(_, m)| !m.is_empty())
    }

    /// Temporal span of the masklet: the hull of its nonempty frames.
    pub fn loc(&self) -> Option<FrameSpan> {
        let mut nonempty = self.nonempty_frames();
        let first = nonempty.next()?;
        let last = nonempty.last().unwrap_or(first);
        Some(FrameSpan { first, last })
    }
}

pub fn loc(masklet: &Masklet) -> Option<FrameSpan> {
    masklet.loc()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tracklet {
    pub character_id: String,
    pub appearance_description: String,
    pub masklet: Masklet,
    pub covered_shots: BTreeSet<usize>,
}

impl Tracklet {
    /// Recomputes `covered_shots` as the shots holding at least one nonempty mask.
    pub fn refresh_coverage(&mut self, shots: &[Shot]) {
        self.covered_shots = shots
            .iter()
            .enumerate()
            .filter(|(_, s)| self.masklet.has_foreground_in(s.frames()))
            .map(|(i, _)| i)
            .collect();
    }
}
