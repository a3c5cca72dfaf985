//! Dataset documents: one record per video with its shots, tracklets and
//! action descriptions, plus tombstones for discarded videos.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ModelError, Shot, Tracklet, VideoMeta};
use crate::prompt::ActionDescription;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dataset {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported schema_version {0}")]
    UnsupportedSchema(u32),
    #[error("duplicate video id {0}")]
    DuplicateVideo(String),
    #[error("video {video_id}: {reason}")]
    Invalid { video_id: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotActions {
    pub shot_index: usize,
    pub descriptions: Vec<ActionDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    #[serde(flatten)]
    pub meta: VideoMeta,
    #[serde(default)]
    pub shots: Vec<Shot>,
    #[serde(default)]
    pub tracklets: Vec<Tracklet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<ShotActions>,
}

impl VideoRecord {
    pub fn new(meta: VideoMeta) -> Self {
        Self {
            meta,
            shots: Vec::new(),
            tracklets: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn video_id(&self) -> &str {
        &self.meta.video_id
    }

    /// Shot indices covered by any tracklet.
    pub fn covered_shots(&self) -> BTreeSet<usize> {
        self.tracklets
            .iter()
            .flat_map(|t| t.covered_shots.iter().copied())
            .collect()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        self.meta.validate()?;
        let invalid = |reason: String| DatasetError::Invalid {
            video_id: self.meta.video_id.clone(),
            reason,
        };
        if let Some(first) = self.shots.first() {
            if first.start_frame != 0 {
                return Err(invalid("shots must start at frame 0".into()));
            }
            for pair in self.shots.windows(2) {
                if pair[0].end_frame != pair[1].start_frame {
                    return Err(invalid(format!(
                        "shots do not tile: gap or overlap at frame {}",
                        pair[0].end_frame
                    )));
                }
            }
            let last = self.shots.last().expect("nonempty").end_frame;
            if last != self.meta.frame_count {
                return Err(invalid(format!(
                    "shots end at {last}, video has {} frames",
                    self.meta.frame_count
                )));
            }
        }
        for t in &self.tracklets {
            if let Some(&bad) = t.covered_shots.iter().find(|&&s| s >= self.shots.len()) {
                return Err(invalid(format!("tracklet covers unknown shot {bad}")));
            }
            for (&frame, mask) in &t.masklet.frames {
                if frame >= self.meta.frame_count {
                    return Err(invalid(format!("mask at frame {frame} beyond video end")));
                }
                if mask.geometry() != self.meta.geometry {
                    return Err(invalid(format!("mask at frame {frame} has wrong geometry")));
                }
                if !mask.is_empty() && !t.covered_shots.iter().any(|&s| self.shots[s].contains(frame)) {
                    return Err(invalid(format!(
                        "nonempty mask at frame {frame} lies outside covered shots"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Standalone per-video document carrying its own `schema_version`.
    pub fn to_document_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("video record serializes");
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("schema_version".into(), SCHEMA_VERSION.into());
        }
        serde_json::to_string_pretty(&value).expect("video record serializes")
    }

    pub fn from_document_json(text: &str, path: &str) -> Result<Self, DatasetError> {
        let json_err = |source| DatasetError::Json {
            path: path.to_string(),
            source,
        };
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(json_err)?;
        let version = value
            .as_object_mut()
            .and_then(|m| m.remove("schema_version"))
            .and_then(|v| v.as_u64())
            .unwrap_or(0) as u32;
        if version != SCHEMA_VERSION {
            return Err(DatasetError::UnsupportedSchema(version));
        }
        let record: VideoRecord = serde_json::from_value(value).map_err(json_err)?;
        record.validate()?;
        Ok(record)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub video_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema_version: u32,
    pub videos: Vec<VideoRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discarded: Vec<DiscardRecord>,
}

impl Default for Dataset {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl Dataset {
    pub fn new(videos: Vec<VideoRecord>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            videos,
            discarded: Vec::new(),
        }
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoRecord> {
        self.videos.iter().find(|v| v.meta.video_id == video_id)
    }

    pub fn video_mut(&mut self, video_id: &str) -> Option<&mut VideoRecord> {
        self.videos.iter_mut().find(|v| v.meta.video_id == video_id)
    }

    pub fn is_discarded(&self, video_id: &str) -> bool {
        self.discarded.iter().any(|d| d.video_id == video_id)
    }

    /// Removes a video and leaves a tombstone. Discarding twice is a no-op.
    pub fn discard(&mut self, video_id: &str, reason: &str) {
        if self.is_discarded(video_id) {
            return;
        }
        self.videos.retain(|v| v.meta.video_id != video_id);
        self.discarded.push(DiscardRecord {
            video_id: video_id.to_string(),
            reason: reason.to_string(),
        });
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DatasetError::UnsupportedSchema(self.schema_version));
        }
        let mut seen = BTreeSet::new();
        for v in &self.videos {
            if !seen.insert(v.video_id()) {
                return Err(DatasetError::DuplicateVideo(v.video_id().to_string()));
            }
            v.validate()?;
        }
        Ok(())
    }

    pub fn from_json_str(text: &str, path: &str) -> Result<Self, DatasetError> {
        let ds: Dataset = serde_json::from_str(text).map_err(|source| DatasetError::Json {
            path: path.to_string(),
            source,
        })?;
        ds.validate()?;
        Ok(ds)
    }

    /// Loads a dataset file, or a directory of per-video documents in file-name order.
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let io = |source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        };
        if path.is_dir() {
            let mut files: Vec<_> = fs::read_dir(path)
                .map_err(io)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            files.sort();
            let mut videos = Vec::with_capacity(files.len());
            for file in files {
                let text = fs::read_to_string(&file).map_err(|source| DatasetError::Io {
                    path: file.display().to_string(),
                    source,
                })?;
                videos.push(VideoRecord::from_document_json(&text, &file.display().to_string())?);
            }
            let ds = Dataset::new(videos);
            ds.validate()?;
            Ok(ds)
        } else {
            let text = fs::read_to_string(path).map_err(io)?;
            Self::from_json_str(&text, &path.display().to_string())
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, self.to_json_string() + "\n").map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
