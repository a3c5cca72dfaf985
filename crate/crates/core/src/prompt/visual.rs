//! Visual prompts drawn onto frames: a frame-ID badge in the bottom-right
//! corner and an instance tint with its ID label at the mask centroid.

use super::glyphs::{lit, text_cells, GLYPH_H, GLYPH_W};
use super::PromptError;
use crate::model::BinaryMask;
use crate::raster::RgbImage;

const WHITE: [u8; 3] = [255, 255, 255];
const BLACK: [u8; 3] = [0, 0, 0];

/// Corner badge height as a fraction of frame height.
pub const BADGE_HEIGHT_FRACTION: f64 = 0.08;

/// Tint colors indexed by `instance_id % len`.
pub const INSTANCE_PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }
}

/// Draws `digits` with the top-left glyph cell at `(x, y)`, clipped to the image.
fn draw_digits(image: &mut RgbImage, digits: &str, x: u32, y: u32, scale: u32, color: [u8; 3]) {
    for (k, ch) in digits.bytes().enumerate() {
        let d = ch - b'0';
        let gx = x + k as u32 * (GLYPH_W + 1) * scale;
        for row in 0..GLYPH_H {
            for col in 0..GLYPH_W {
                if !lit(d, col, row) {
                    continue;
                }
                let px = gx + col * scale;
                let py = y + row * scale;
                image.fill_rect(px, py, px + scale, py + scale, color);
            }
        }
    }
}

/// Region covered by the frame-ID badge, or `InvalidGeometry` when it cannot fit.
pub fn frame_id_region(width: u32, height: u32, frame_id: u32) -> Result<Rect, PromptError> {
    let digits = frame_id.to_string().len();
    let badge_h = (height as f64 * BADGE_HEIGHT_FRACTION).round() as u32;
    // glyph rows plus one cell of padding above and below
    let scale = badge_h / (GLYPH_H + 2);
    let badge_w = (text_cells(digits) + 2) * scale;
    if scale == 0 || badge_w > width || badge_h > height {
        return Err(PromptError::InvalidGeometry(format!(
            "{digits}-digit frame id badge does not fit a {width}x{height} frame"
        )));
    }
    Ok(Rect {
        x0: width - badge_w,
        y0: height - badge_h,
        x1: width,
        y1: height,
    })
}

/// Renders the decimal frame id white on a black badge in the bottom-right corner.
pub fn stamp_frame_id(image: &RgbImage, frame_id: u32) -> Result<RgbImage, PromptError> {
    if image.is_empty() {
        return Err(PromptError::InvalidGeometry("empty image".into()));
    }
    let region = frame_id_region(image.width(), image.height(), frame_id)?;
    let scale = (region.y1 - region.y0) / (GLYPH_H + 2);
    let mut out = image.clone();
    out.fill_rect(region.x0, region.y0, region.x1, region.y1, BLACK);
    let text_h = GLYPH_H * scale;
    let y = region.y0 + (region.y1 - region.y0 - text_h) / 2;
    draw_digits(&mut out, &frame_id.to_string(), region.x0 + scale, y, scale, WHITE);
    Ok(out)
}

pub fn instance_color(instance_id: u32) -> [u8; 3] {
    INSTANCE_PALETTE[instance_id as usize % INSTANCE_PALETTE.len()]
}

/// Even blend of a pixel with the instance color.
pub fn blend(pixel: [u8; 3], color: [u8; 3]) -> [u8; 3] {
    [0, 1, 2].map(|c| ((pixel[c] as u16 + color[c] as u16) / 2) as u8)
}

/// Label box for an instance id centered on the mask centroid, clipped to
/// the frame. `None` for an empty mask.
pub fn instance_label_region(mask: &BinaryMask, instance_id: u32) -> Option<Rect> {
    if mask.is_empty() {
        return None;
    }
    let g = mask.geometry();
    let width = g.width as u64;
    let (mut sx, mut sy, mut n) = (0u64, 0u64, 0u64);
    for (start, end) in mask.foreground_runs() {
        for p in start..end {
            sx += p % width;
            sy += p / width;
        }
        n += end - start;
    }
    let (cx, cy) = ((sx / n) as i64, (sy / n) as i64);
    let scale = ((g.height as f64 * 0.04).round() as u32 / GLYPH_H).max(1);
    let w = (text_cells(instance_id.to_string().len()) + 2) * scale;
    let h = (GLYPH_H + 2) * scale;
    let x0 = (cx - w as i64 / 2).clamp(0, (g.width as i64 - w as i64).max(0)) as u32;
    let y0 = (cy - h as i64 / 2).clamp(0, (g.height as i64 - h as i64).max(0)) as u32;
    Some(Rect {
        x0,
        y0,
        x1: (x0 + w).min(g.width),
        y1: (y0 + h).min(g.height),
    })
}

/// Tints every masked pixel toward the instance color and draws the id
/// label at the mask centroid. An empty mask leaves the image unchanged.
pub fn overlay_instance_id(image: &RgbImage, mask: &BinaryMask, instance_id: u32) -> Result<RgbImage, PromptError> {
    let g = mask.geometry();
    if g.width != image.width() || g.height != image.height() {
        return Err(PromptError::InvalidGeometry(format!(
            "mask {}x{} does not match image {}x{}",
            g.width,
            g.height,
            image.width(),
            image.height()
        )));
    }
    let Some(label) = instance_label_region(mask, instance_id) else {
        return Ok(image.clone());
    };
    let color = instance_color(instance_id);
    let mut out = image.clone();
    for (start, end) in mask.foreground_runs() {
        for p in start..end {
            let (x, y) = ((p % g.width as u64) as u32, (p / g.width as u64) as u32);
            out.put_pixel(x, y, blend(image.pixel(x, y), color));
        }
    }
    let scale = (label.y1 - label.y0) / (GLYPH_H + 2);
    out.fill_rect(label.x0, label.y0, label.x1, label.y1, BLACK);
    draw_digits(
        &mut out,
        &instance_id.to_string(),
        label.x0 + scale,
        label.y0 + scale,
        scale.max(1),
        WHITE,
    );
    Ok(out)
}
