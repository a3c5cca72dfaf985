//! Run-length codec for binary masks.
//!
//! Runs alternate between background and foreground in row-major scan order
//! and always begin with a background run, which may have length zero. The
//! canonical form never contains zero-length runs after the first one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::FrameGeometry;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RleError {
    #[error("malformed rle: runs sum to {actual}, geometry requires {expected}")]
    MalformedRle { expected: u64, actual: u64 },
    #[error("invalid geometry {height}x{width}")]
    InvalidGeometry { height: u32, width: u32 },
    #[error("bitmap has {actual} cells, geometry requires {expected}")]
    SizeMismatch { expected: usize, actual: usize },
}

/// Row-major grid of bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    geometry: FrameGeometry,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn zeros(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            bits: vec![false; geometry.pixel_count()],
        }
    }

    pub fn from_bits(geometry: FrameGeometry, bits: Vec<bool>) -> Result<Self, RleError> {
        if bits.len() != geometry.pixel_count() {
            return Err(RleError::SizeMismatch {
                expected: geometry.pixel_count(),
                actual: bits.len(),
            });
        }
        Ok(Self { geometry, bits })
    }

    /// Builds a bitmap from rows of 0/1 values. All rows must have equal length.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self, RleError> {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len()) as u32;
        let geometry = FrameGeometry::new(height, width)?;
        let mut bits = Vec::with_capacity(geometry.pixel_count());
        for row in rows {
            if row.len() as u32 != width {
                return Err(RleError::SizeMismatch {
                    expected: width as usize,
                    actual: row.len(),
                });
            }
            bits.extend(row.iter().map(|&v| v != 0));
        }
        Self::from_bits(geometry, bits)
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.geometry.width as usize + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let w = self.geometry.width as usize;
        self.bits[row * w + col] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[derive(Serialize, Deserialize)]
struct RleRepr {
    size: [u32; 2],
    counts: Vec<u32>,
}

/// A binary mask stored as canonical run lengths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RleRepr", into = "RleRepr")]
pub struct BinaryMask {
    geometry: FrameGeometry,
    counts: Vec<u32>,
}

impl TryFrom<RleRepr> for BinaryMask {
    type Error = RleError;

    fn try_from(repr: RleRepr) -> Result<Self, Self::Error> {
        let geometry = FrameGeometry::new(repr.size[0], repr.size[1])?;
        BinaryMask::from_counts(geometry, repr.counts)
    }
}

impl From<BinaryMask> for RleRepr {
    fn from(mask: BinaryMask) -> Self {
        RleRepr {
            size: [mask.geometry.height, mask.geometry.width],
            counts: mask.counts,
        }
    }
}

impl BinaryMask {
    pub fn empty(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            counts: vec![geometry.pixel_count() as u32],
        }
    }

    pub fn full(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            counts: vec![0, geometry.pixel_count() as u32],
        }
    }

    /// Validates the run sum and rewrites the runs into canonical form.
    pub fn from_counts(geometry: FrameGeometry, counts: Vec<u32>) -> Result<Self, RleError> {
        let actual: u64 = counts.iter().map(|&c| c as u64).sum();
        let expected = geometry.pixel_count() as u64;
        if actual != expected {
            return Err(RleError::MalformedRle { expected, actual });
        }
        Ok(Self {
            geometry,
            counts: canonicalize(&counts),
        })
    }

    /// Foreground rectangle with inclusive-exclusive pixel bounds, clipped to the frame.
    pub fn from_rect(geometry: FrameGeometry, x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        let (w, h) = (geometry.width, geometry.height);
        let (x0, x1) = (x0.min(w), x1.min(w));
        let (y0, y1) = (y0.min(h), y1.min(h));
        if x0 >= x1 || y0 >= y1 {
            return Self::empty(geometry);
        }
        let mut counts = Vec::with_capacity(2 * (y1 - y0) as usize + 1);
        let run = x1 - x0;
        let gap = w - run;
        counts.push(y0 * w + x0);
        for row in y0..y1 {
            counts.push(run);
            if row + 1 < y1 {
                counts.push(gap);
            }
        }
        let tail = (h - y1) * w + (w - x1);
        if tail > 0 {
            counts.push(tail);
        }
        Self::from_counts(geometry, counts).expect("rect runs cover the frame")
    }

    pub fn geometry(&self) -> FrameGeometry {
        self.geometry
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    /// Foreground intervals `[start, end)` in flat row-major offsets.
    pub fn foreground_runs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut pos = 0u64;
        self.counts.iter().enumerate().filter_map(move |(i, &c)| {
            let start = pos;
            pos += c as u64;
            (i % 2 == 1).then_some((start, pos))
        })
    }

    /// Number of pixels set in both masks, computed by merging runs.
    pub fn intersection_area(&self, other: &BinaryMask) -> u64 {
        let mut a = self.foreground_runs().peekable();
        let mut b = other.foreground_runs().peekable();
        let mut total = 0;
        while let (Some(&(a0, a1)), Some(&(b0, b1))) = (a.peek(), b.peek()) {
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                total += hi - lo;
            }
            if a1 <= b1 {
                a.next();
            } else {
                b.next();
            }
        }
        total
    }

    pub fn decode(&self) -> Bitmap {
        let mut bits = Vec::with_capacity(self.geometry.pixel_count());
        for (i, &c) in self.counts.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, c as usize));
        }
        Bitmap {
            geometry: self.geometry,
            bits,
        }
    }
}

fn canonicalize(counts: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = vec![0];
    let mut current = false;
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let value = i % 2 == 1;
        if value == current {
            *out.last_mut().expect("nonempty") += c;
        } else {
            out.push(c);
            current = value;
        }
    }
    out
}

pub fn rle_encode(bitmap: &Bitmap) -> BinaryMask {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for &bit in &bitmap.bits {
        if bit == current {
            run += 1;
        } else {
            counts.push(run);
            current = bit;
            run = 1;
        }
    }
    counts.push(run);
    BinaryMask {
        geometry: bitmap.geometry,
        counts,
    }
}

pub fn rle_decode(mask: &BinaryMask) -> Bitmap {
    mask.decode()
}
