//! Spatial, temporal and combined evaluation metrics.
//!
//! Everything is computed on the `[0, 1]` scale; reports convert to percent.

mod mask;
mod temporal;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BinaryMask, FrameGeometry, Masklet};

pub use mask::{boundary_map, contour_f, default_contour_tolerance, region_j, CONTOUR_TOLERANCE_FRACTION};
pub use temporal::{
    average_precision, dvc_temporal_f1, highlight_labels, mean_iou, recall_at, t_iou, vhd_scores, VhdGroundTruth,
    VhdScores, DEFAULT_CLIP_LENGTH_S, DVC_THRESHOLDS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("geometry mismatch: prediction {pred:?}, ground truth {gt:?}")]
    GeometryMismatch { pred: FrameGeometry, gt: FrameGeometry },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("ground truth masklet has no foreground frame")]
    NoGroundTruthForeground,
    #[error("clip grid mismatch for {qid}: expected {expected} clips, got {found}")]
    ClipGridMismatch { qid: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub j: f64,
    pub f: f64,
}

impl FrameScore {
    pub const PERFECT: FrameScore = FrameScore { j: 1.0, f: 1.0 };
    pub const ZERO: FrameScore = FrameScore { j: 0.0, f: 0.0 };

    pub fn jf(&self) -> f64 {
        (self.j + self.f) / 2.0
    }
}

/// Scores one frame. Missing and all-zero masks are both "empty": two empty
/// masks score `j = f = 1`, exactly one empty scores `j = f = 0`.
pub fn score_frame(pred: Option<&BinaryMask>, gt: Option<&BinaryMask>) -> Result<FrameScore, MetricError> {
    let pred = pred.filter(|m| !m.is_empty());
    let gt = gt.filter(|m| !m.is_empty());
    match (pred, gt) {
        (None, None) => Ok(FrameScore::PERFECT),
        (Some(_), None) | (None, Some(_)) => Ok(FrameScore::ZERO),
        (Some(p), Some(g)) => Ok(FrameScore {
            j: region_j(p, g)?,
            f: contour_f(p, g, default_contour_tolerance(g.geometry()))?,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceScore {
    pub j: f64,
    pub f: f64,
    pub jf: f64,
    pub frames: usize,
}

/// Mean J, mean F and their average over `frame_set`.
pub fn jf_sequence(
    pred: &Masklet,
    gt: &Masklet,
    frame_set: impl IntoIterator<Item = usize>,
) -> Result<SequenceScore, MetricError> {
    let (mut sj, mut sf, mut n) = (0.0, 0.0, 0usize);
    for frame in frame_set {
        let s = score_frame(pred.get(frame), gt.get(frame))?;
        sj += s.j;
        sf += s.f;
        n += 1;
    }
    if n == 0 {
        return Err(MetricError::InvalidInput("empty frame set".into()));
    }
    let (j, f) = (sj / n as f64, sf / n as f64);
    Ok(SequenceScore {
        j,
        f,
        jf: (j + f) / 2.0,
        frames: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiForeBreakdown {
    pub j_p: f64,
    pub f_p: f64,
    pub j_g: f64,
    pub f_g: f64,
    pub value: f64,
}

impl BiForeBreakdown {
    /// `(J_p + F_p)(J_g + F_g) / ((J_p + F_p) + (J_g + F_g))`, zero when the
    /// denominator vanishes. Works on any common scale (fractions or percent).
    pub fn from_components(j_p: f64, f_p: f64, j_g: f64, f_g: f64) -> Self {
        let sp = j_p + f_p;
        let sg = j_g + f_g;
        let denom = sp + sg;
        let value = if denom > 0.0 { sp * sg / denom } else { 0.0 };
        Self {
            j_p,
            f_p,
            j_g,
            f_g,
            value,
        }
    }

    pub fn jf_p(&self) -> f64 {
        (self.j_p + self.f_p) / 2.0
    }

    pub fn jf_g(&self) -> f64 {
        (self.j_g + self.f_g) / 2.0
    }
}

/// Bidirectional foreground J&F: J&F over the prediction's span and over the
/// ground truth's span, combined harmonically.
pub fn bi_fore_jf(pred: &Masklet, gt: &Masklet) -> Result<BiForeBreakdown, MetricError> {
    let gt_span = gt.loc().ok_or(MetricError::NoGroundTruthForeground)?;
    if let (Some(a), Some(b)) = (pred.geometry(), gt.geometry()) {
        if a != b {
            return Err(MetricError::GeometryMismatch { pred: a, gt: b });
        }
    }
    let on_gt = jf_sequence(pred, gt, gt_span.frames())?;
    let (j_p, f_p) = match pred.loc() {
        Some(span) => {
            let s = jf_sequence(pred, gt, span.frames())?;
            (s.j, s.f)
        }
        None => (0.0, 0.0),
    };
    Ok(BiForeBreakdown::from_components(j_p, f_p, on_gt.j, on_gt.f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForegroundBucket {
    /// `[0, 0.2]`
    Short,
    /// `(0.2, 0.6]`
    Medium,
    /// `(0.6, 1.0]`
    Long,
}

impl ForegroundBucket {
    pub const ALL: [ForegroundBucket; 3] = [Self::Short, Self::Medium, Self::Long];

    pub fn for_fraction(fraction: f64) -> Self {
        if fraction <= 0.2 {
            Self::Short
        } else if fraction <= 0.6 {
            Self::Medium
        } else {
            Self::Long
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Short => "0-20%",
            Self::Medium => "20-60%",
            Self::Long => "60-100%",
        }
    }
}

/// Length of the ground-truth span over the video length.
pub fn foreground_fraction(gt: &Masklet, frame_count: usize) -> Option<f64> {
    let span = gt.loc()?;
    Some(span.len() as f64 / frame_count.max(1) as f64)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Buckets<K> {
    pub short: Vec<K>,
    pub medium: Vec<K>,
    pub long: Vec<K>,
}

impl<K> Buckets<K> {
    pub fn get(&self, bucket: ForegroundBucket) -> &[K] {
        match bucket {
            ForegroundBucket::Short => &self.short,
            ForegroundBucket::Medium => &self.medium,
            ForegroundBucket::Long => &self.long,
        }
    }
}

/// Splits items by ground-truth foreground fraction. Items without any
/// ground-truth foreground are left out.
pub fn bucket_by_foreground_fraction<'a, K: Clone + 'a>(
    items: impl IntoIterator<Item = (K, &'a Masklet, usize)>,
) -> Buckets<K> {
    let mut out = Buckets {
        short: Vec::new(),
        medium: Vec::new(),
        long: Vec::new(),
    };
    for (key, gt, frame_count) in items {
        let Some(fraction) = foreground_fraction(gt, frame_count) else {
            continue;
        };
        match ForegroundBucket::for_fraction(fraction) {
            ForegroundBucket::Short => out.short.push(key),
            ForegroundBucket::Medium => out.medium.push(key),
            ForegroundBucket::Long => out.long.push(key),
        }
    }
    out
}
