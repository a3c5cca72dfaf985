use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ShotError;
use crate::raster::RgbImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    HsvMean,
    External,
}

/// Per-frame feature vectors, `n` rows of `dim` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatureSeries {
    data: Vec<f64>,
    dim: usize,
    sample_fps: f64,
    source: FeatureSource,
}

impl FrameFeatureSeries {
    pub fn new(rows: Vec<Vec<f64>>, sample_fps: f64, source: FeatureSource) -> Result<Self, ShotError> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || dim == 0 {
            return Err(ShotError::InvalidFeatures(
                "series needs at least one non-empty row".into(),
            ));
        }
        if !(sample_fps.is_finite() && sample_fps > 0.0) {
            return Err(ShotError::InvalidFeatures(format!(
                "sample_fps {sample_fps} must be positive"
            )));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(ShotError::InvalidFeatures(format!(
                    "row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(ShotError::InvalidFeatures(format!(
                    "row {i} holds non-finite value {v}"
                )));
            }
            data.extend(row);
        }
        Ok(Self {
            data,
            dim,
            sample_fps,
            source,
        })
    }

    /// One-dimensional series, mostly for tests and synthetic signals.
    pub fn from_scalars(values: &[f64], sample_fps: f64) -> Result<Self, ShotError> {
        Self::new(
            values.iter().map(|&v| vec![v]).collect(),
            sample_fps,
            FeatureSource::External,
        )
    }

    pub fn from_frames(frames: &[RgbImage], sample_fps: f64) -> Result<Self, ShotError> {
        let rows = frames.iter().map(|f| f.mean_hsv().to_vec()).collect();
        Self::new(rows, sample_fps, FeatureSource::HsvMean)
    }

    /// Reads a headerless CSV of `n` rows by `d` numeric columns.
    pub fn from_csv_path(path: &Path, sample_fps: f64) -> Result<Self, ShotError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| ShotError::InvalidFeatures(e.to_string()))?;
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| ShotError::InvalidFeatures(e.to_string()))?;
            let row = record
                .iter()
                .map(|cell| {
                    cell.parse::<f64>()
                        .map_err(|_| ShotError::InvalidFeatures(format!("row {i}: cannot parse {cell:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::new(rows, sample_fps, FeatureSource::External)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_fps(&self) -> f64 {
        self.sample_fps
    }

    pub fn source(&self) -> FeatureSource {
        self.source
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(FrameFeatureSeries::new(vec![vec![1.0], vec![1.0, 2.0]], 1.0, FeatureSource::External).is_err());
        assert!(FrameFeatureSeries::new(vec![vec![f64::NAN]], 1.0, FeatureSource::External).is_err());
        assert!(FrameFeatureSeries::new(vec![], 1.0, FeatureSource::External).is_err());
    }

    #[test]
    fn csv_import() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(&p, "0, 1\n2,3\n4 ,5\n").unwrap();
        let s = FrameFeatureSeries::from_csv_path(&p, 2.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.row(2), &[4.0, 5.0]);
        std::fs::write(&p, "0,x\n").unwrap();
        assert!(FrameFeatureSeries::from_csv_path(&p, 2.0).is_err());
    }
}
