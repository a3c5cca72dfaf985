//! Minimal 8-bit RGB raster with PNG input and output.

use std::io::Cursor;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("png encode: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("unsupported png color layout {0:?}")]
    UnsupportedColor(png::ColorType),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("buffer of {actual} bytes does not match {width}x{height} rgb")]
    BadBuffer { width: u32, height: u32, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self::filled(width, height, [0, 0, 0])
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Self { width, height, data }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        if data.len() != width as usize * height as usize * 3 {
            return Err(RasterError::BadBuffer {
                width,
                height,
                actual: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = self.offset(x, y);
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    pub fn fill_rect(&mut self, x0: u32, y0: u32, x1: u32, y1: u32, rgb: [u8; 3]) {
        for y in y0..y1.min(self.height) {
            for x in x0..x1.min(self.width) {
                self.put_pixel(x, y, rgb);
            }
        }
    }

    pub fn mean_hsv(&self) -> [f64; 3] {
        mean_hsv(self)
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self, RasterError> {
        let mut decoder = png::Decoder::new(Cursor::new(bytes));
        decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = decoder.read_info()?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader.next_frame(&mut buf)?;
        buf.truncate(info.buffer_size());
        let data = match info.color_type {
            png::ColorType::Rgb => buf,
            png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
            png::ColorType::Grayscale => buf.iter().flat_map(|&v| [v, v, v]).collect(),
            png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
            other => return Err(RasterError::UnsupportedColor(other)),
        };
        Self::from_raw(info.width, info.height, data)
    }

    pub fn read_png(path: &Path) -> Result<Self, RasterError> {
        Self::decode_png(&std::fs::read(path)?)
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, RasterError> {
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut out, self.width, self.height);
            encoder.set_color(png::ColorType::Rgb);
            encoder.set_depth(png::BitDepth::Eight);
            let mut writer = encoder.write_header()?;
            writer.write_image_data(&self.data)?;
        }
        Ok(out)
    }
}

/// RGB to HSV with every channel on a 0-255 scale.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|c| c as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue_deg = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let sat = if max == 0.0 { 0.0 } else { delta / max * 255.0 };
    [hue_deg / 360.0 * 255.0, sat, max]
}

/// Per-frame mean of the H, S and V channels.
pub fn mean_hsv(image: &RgbImage) -> [f64; 3] {
    let n = (image.width as usize * image.height as usize).max(1) as f64;
    let mut acc = [0.0f64; 3];
    for px in image.data.chunks_exact(3) {
        let hsv = rgb_to_hsv([px[0], px[1], px[2]]);
        for c in 0..3 {
            acc[c] += hsv[c];
        }
    }
    acc.map(|v| v / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hsv_primaries() {
        assert_eq!(rgb_to_hsv([0, 0, 0]), [0.0, 0.0, 0.0]);
        assert_eq!(rgb_to_hsv([255, 255, 255]), [0.0, 0.0, 255.0]);
        let red = rgb_to_hsv([255, 0, 0]);
        assert_eq!(red, [0.0, 255.0, 255.0]);
        let blue = rgb_to_hsv([0, 0, 255]);
        assert!((blue[0] - 170.0).abs() < 1e-9);
    }

    #[test]
    fn png_round_trip() {
        let mut img = RgbImage::filled(5, 3, [10, 20, 30]);
        img.put_pixel(4, 2, [255, 0, 7]);
        let bytes = img.encode_png().unwrap();
        assert_eq!(RgbImage::decode_png(&bytes).unwrap(), img);
    }

    #[test]
    fn mean_of_black_and_white() {
        let black = RgbImage::new(4, 4);
        let white = RgbImage::filled(4, 4, [255, 255, 255]);
        assert_eq!(black.mean_hsv(), [0.0, 0.0, 0.0]);
        assert_eq!(white.mean_hsv(), [0.0, 0.0, 255.0]);
    }
}
