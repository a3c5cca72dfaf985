//! Append-only JSONL decision log.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use loomkit_pipeline::ReviewDecision;

use crate::ReviewError;

pub struct DecisionLog {
    path: PathBuf,
    file: File,
    len: usize,
}

impl DecisionLog {
    /// Opens or creates the log and returns the decisions already in it.
    /// A torn final line left by a crash mid-write is dropped and truncated away.
    pub fn open(path: &Path) -> Result<(Self, Vec<ReviewDecision>), ReviewError> {
        let io = |source| ReviewError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io)?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io)?;

        let mut decisions = Vec::new();
        let mut good_end = 0;
        let mut torn = false;
        let mut offset = 0;
        for (i, line) in text.split_inclusive('\n').enumerate() {
            let complete = line.ends_with('\n');
            let body = line.trim();
            offset += line.len();
            if body.is_empty() {
                if complete {
                    good_end = offset;
                }
                continue;
            }
            match serde_json::from_str::<ReviewDecision>(body) {
                Ok(d) if complete => {
                    decisions.push(d);
                    good_end = offset;
                }
                Ok(d) => {
                    // valid record missing only its newline
                    decisions.push(d);
                    file.write_all(b"\n").map_err(io)?;
                    good_end = offset + 1;
                }
                Err(_) if !complete => torn = true,
                Err(e) => {
                    return Err(ReviewError::CorruptLog {
                        path: path.to_path_buf(),
                        line: i + 1,
                        reason: e.to_string(),
                    })
                }
            }
        }
        if torn {
            file.set_len(good_end as u64).map_err(io)?;
        }
        let len = decisions.len();
        Ok((
            Self {
                path: path.to_path_buf(),
                file,
                len,
            },
            decisions,
        ))
    }

    pub fn append(&mut self, decision: &ReviewDecision) -> Result<(), ReviewError> {
        let mut line = serde_json::to_string(decision).expect("decision serializes");
        line.push('\n');
        let io = |source| ReviewError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(line.as_bytes()).map_err(io)?;
        self.file.sync_data().map_err(io)?;
        self.len += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
