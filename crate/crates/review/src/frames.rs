//! Review frames with optional mask overlays, cached by content hash.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use loomkit_core::model::VideoRecord;
use loomkit_core::prompt::overlay_instance_id;
use loomkit_core::raster::RgbImage;
use sha2::{Digest, Sha256};

use crate::ReviewError;

pub trait FrameSource: Send + Sync {
    fn frame(&self, video: &VideoRecord, frame_index: usize) -> Result<RgbImage, ReviewError>;
}

/// Deterministic gradient frames for datasets without decoded video.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticFrames;

impl FrameSource for SyntheticFrames {
    fn frame(&self, video: &VideoRecord, frame_index: usize) -> Result<RgbImage, ReviewError> {
        let g = video.meta.geometry;
        let tone = video
            .meta
            .video_id
            .bytes()
            .fold(frame_index as u32, |a, b| a.wrapping_mul(31).wrapping_add(b as u32));
        let mut img = RgbImage::new(g.width, g.height);
        for y in 0..g.height {
            for x in 0..g.width {
                let r = (x * 255 / g.width.max(2)) as u8 / 2 + 40;
                let gch = (y * 255 / g.height.max(2)) as u8 / 2 + 40;
                img.put_pixel(x, y, [r, gch, (tone % 128) as u8 + 60]);
            }
        }
        Ok(img)
    }
}

/// Frames stored as `<root>/<video_id>/<frame_index:06>.png`.
#[derive(Debug, Clone)]
pub struct PngDirFrames {
    pub root: PathBuf,
}

impl FrameSource for PngDirFrames {
    fn frame(&self, video: &VideoRecord, frame_index: usize) -> Result<RgbImage, ReviewError> {
        let path = self
            .root
            .join(&video.meta.video_id)
            .join(format!("{frame_index:06}.png"));
        let bytes = std::fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ReviewError::UnknownTarget(format!("frame file {}", path.display())),
            _ => ReviewError::Io {
                path: path.clone(),
                source: e,
            },
        })?;
        let img = RgbImage::decode_png(&bytes).map_err(|e| ReviewError::Render(e.to_string()))?;
        let g = video.meta.geometry;
        if img.width() != g.width || img.height() != g.height {
            return Err(ReviewError::Render(format!(
                "{} is {}x{}, video is {}x{}",
                path.display(),
                img.width(),
                img.height(),
                g.width,
                g.height
            )));
        }
        Ok(img)
    }
}

pub struct RenderedFrame {
    pub etag: String,
    pub png: Arc<Vec<u8>>,
}

pub struct FrameRenderer {
    source: Box<dyn FrameSource>,
    cache: Mutex<HashMap<[u8; 32], Arc<Vec<u8>>>>,
    capacity: usize,
}

impl FrameRenderer {
    pub fn new(source: Box<dyn FrameSource>, capacity: usize) -> Self {
        Self {
            source,
            cache: Mutex::new(HashMap::new()),
            capacity,
        }
    }

    /// Renders one frame, tinting each tracklet's mask with its 1-based instance id.
    pub fn render(&self, video: &VideoRecord, frame_index: usize, overlay: bool) -> Result<RenderedFrame, ReviewError> {
        if frame_index >= video.meta.frame_count {
            return Err(ReviewError::UnknownTarget(format!(
                "frame {frame_index} of video {} ({} frames)",
                video.meta.video_id, video.meta.frame_count
            )));
        }
        let base = self.source.frame(video, frame_index)?;
        let masks: Vec<(u32, &loomkit_core::model::BinaryMask)> = if overlay {
            video
                .tracklets
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.masklet.get(frame_index).map(|m| (i as u32 + 1, m)))
                .collect()
        } else {
            Vec::new()
        };

        let mut hasher = Sha256::new();
        hasher.update(base.width().to_le_bytes());
        hasher.update(base.height().to_le_bytes());
        hasher.update(base.as_raw());
        for (id, m) in &masks {
            hasher.update(id.to_le_bytes());
            hasher.update(serde_json::to_vec(m).expect("mask serializes"));
        }
        let key: [u8; 32] = hasher.finalize().into();
        let etag = key.iter().map(|b| format!("{b:02x}")).collect::<String>();

        if let Some(png) = self.cache.lock().unwrap().get(&key) {
            return Ok(RenderedFrame { etag, png: png.clone() });
        }
        let mut img = base;
        for (id, m) in masks {
            img = overlay_instance_id(&img, m, id).map_err(|e| ReviewError::Render(e.to_string()))?;
        }
        let png = Arc::new(img.encode_png().map_err(|e| ReviewError::Render(e.to_string()))?);
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= self.capacity {
            cache.clear();
        }
        cache.insert(key, png.clone());
        Ok(RenderedFrame { etag, png })
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}
