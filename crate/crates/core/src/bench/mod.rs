//! Benchmark files, prediction files, evaluation reports and dataset statistics.
//!
//! A benchmark is tagged JSON lines: one `header` record carrying the schema
//! version, `video` records with the metadata of every referenced video, and
//! one `item` record per question.

mod eval;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricError;
use crate::model::{Masklet, TemporalSegment, VideoMeta, SCHEMA_VERSION};

pub use eval::{
    evaluate, render_table, BenchmarkReport, BucketSummary, CombinedSummary, ItemScore, TypeSummaries, WhenSummary,
    WhereSummary,
};
pub use stats::{dataset_stats, normalized_center, DatasetStats, Histogram, SHOT_CENTER_BINS, SHOT_LENGTH_EDGES_S};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed benchmark at line {line}: {reason}")]
    MalformedBenchmark { line: usize, reason: String },
    #[error("malformed prediction at line {line}: {reason}")]
    MalformedPrediction { line: usize, reason: String },
    #[error("prediction for {qid}: {source}")]
    Metric {
        qid: String,
        #[source]
        source: MetricError,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QType {
    When,
    Where,
    Combined,
}

impl QType {
    pub const ALL: [QType; 3] = [QType::When, QType::Where, QType::Combined];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub qid: String,
    pub qtype: QType,
    pub question: String,
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_segment: Option<TemporalSegment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_masklet: Option<Masklet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

impl QAItem {
    fn check(&self) -> Result<(), String> {
        let needs_segment = matches!(self.qtype, QType::When | QType::Combined);
        let needs_masklet = matches!(self.qtype, QType::Where | QType::Combined);
        if needs_segment && self.gt_segment.is_none() {
            return Err(format!("{:?} item {} needs gt_segment", self.qtype, self.qid));
        }
        if let Some(m) = &self.gt_masklet {
            if m.frames.is_empty() && needs_masklet {
                return Err(format!("item {} has no annotated frames", self.qid));
            }
        } else if needs_masklet {
            return Err(format!("{:?} item {} needs gt_masklet", self.qtype, self.qid));
        }
        if self.qtype == QType::Combined && self.gt_masklet.as_ref().and_then(Masklet::loc).is_none() {
            return Err(format!("Combined item {} has no ground-truth foreground", self.qid));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Benchmark {
    pub videos: BTreeMap<String, VideoMeta>,
    pub items: Vec<QAItem>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BenchRecord {
    Header { schema_version: u32 },
    Video(VideoMeta),
    Item(QAItem),
}

impl Benchmark {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut bench = Benchmark::default();
        let mut seen = BTreeSet::new();
        let mut header = false;
        let malformed = |line: usize, reason: String| BenchError::MalformedBenchmark { line, reason };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let record: BenchRecord = serde_json::from_str(raw).map_err(|e| malformed(line, e.to_string()))?;
            match record {
                BenchRecord::Header { schema_version } => {
                    if header {
                        return Err(malformed(line, "second header".into()));
                    }
                    if schema_version != SCHEMA_VERSION {
                        return Err(malformed(line, format!("unsupported schema_version {schema_version}")));
                    }
                    header = true;
                }
                _ if !header => return Err(malformed(line, "first record must be the header".into())),
                BenchRecord::Video(meta) => {
                    meta.validate().map_err(|e| malformed(line, e.to_string()))?;
                    if bench.videos.insert(meta.video_id.clone(), meta).is_some() {
                        return Err(malformed(line, "duplicate video".into()));
                    }
                }
                BenchRecord::Item(item) => {
                    if !seen.insert(item.qid.clone()) {
                        return Err(malformed(line, format!("duplicate qid {}", item.qid)));
                    }
                    item.check().map_err(|r| malformed(line, r))?;
                    let Some(meta) = bench.videos.get(&item.video_id) else {
                        return Err(malformed(line, format!("unknown video {}", item.video_id)));
                    };
                    if let Some(m) = &item.gt_masklet {
                        if m.geometry().is_some_and(|g| g != meta.geometry)
                            || m.frames.keys().next_back().is_some_and(|&f| f >= meta.frame_count)
                        {
                            return Err(malformed(
                                line,
                                format!("gt_masklet of {} does not fit its video", item.qid),
                            ));
                        }
                    }
                    bench.items.push(item);
                }
            }
        }
        Ok(bench)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |r: &BenchRecord| {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        };
        push(&BenchRecord::Header {
            schema_version: SCHEMA_VERSION,
        });
        for meta in self.videos.values() {
            push(&BenchRecord::Video(meta.clone()));
        }
        for item in &self.items {
            push(&BenchRecord::Item(item.clone()));
        }
        out
    }
}

pub fn load_benchmark(path: &Path) -> Result<Benchmark, BenchError> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Benchmark::parse(&text)
}

/// One prediction record. Which field is read depends on the question type.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Prediction {
    pub qid: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<TemporalSegment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masklet: Option<Masklet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_scores: Option<Vec<f64>>,
}

/// Later records for the same qid replace earlier ones.
pub fn parse_predictions(text: &str) -> Result<BTreeMap<String, Prediction>, BenchError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(raw).map_err(|e| BenchError::MalformedPrediction {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if p.segment.is_none() && p.masklet.is_none() && p.clip_scores.is_none() {
            return Err(BenchError::MalformedPrediction {
                line: i + 1,
                reason: "record has neither segment, masklet nor clip_scores".into(),
            });
        }
        out.insert(p.qid.clone(), p);
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<BTreeMap<String, Prediction>, BenchError> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_predictions(&text)
}
