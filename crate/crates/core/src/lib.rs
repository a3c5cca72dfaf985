//! Spatial-temporal video annotation toolkit: dataset model, mask codec,
//! shot partition, prompt assembly, metrics and benchmark evaluation.

pub mod bench;
pub mod metrics;
pub mod model;
pub mod prompt;
pub mod raster;
pub mod shots;
