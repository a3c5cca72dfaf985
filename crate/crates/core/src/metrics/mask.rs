//! Per-frame region similarity (J) and contour accuracy (F).

use super::MetricError;
use crate::model::{BinaryMask, FrameGeometry};

/// Contour tolerance as a fraction of the image diagonal.
pub const CONTOUR_TOLERANCE_FRACTION: f64 = 0.008;

fn check_geometry(pred: &BinaryMask, gt: &BinaryMask) -> Result<(), MetricError> {
    if pred.geometry() != gt.geometry() {
        return Err(MetricError::GeometryMismatch {
            pred: pred.geometry(),
            gt: gt.geometry(),
        });
    }
    Ok(())
}

/// Intersection over union; two empty masks score 1.
pub fn region_j(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64, MetricError> {
    check_geometry(pred, gt)?;
    let inter = pred.intersection_area(gt);
    let union = pred.area() + gt.area() - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// `round(0.8% of the diagonal)`, at least one pixel.
pub fn default_contour_tolerance(geometry: FrameGeometry) -> u32 {
    ((geometry.diagonal() * CONTOUR_TOLERANCE_FRACTION).round() as u32).max(1)
}

/// Foreground pixels with a 4-neighbour in the background or outside the frame.
pub fn boundary_map(mask: &BinaryMask) -> Vec<bool> {
    let bitmap = mask.decode();
    let g = mask.geometry();
    let (h, w) = (g.height as usize, g.width as usize);
    let bits = bitmap.bits();
    let mut out = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !bits[i] {
                continue;
            }
            out[i] = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !bits[i - 1]
                || !bits[i + 1]
                || !bits[i - w]
                || !bits[i + w];
        }
    }
    out
}

/// Square dilation by Chebyshev radius `r`, via row and column window counts.
fn dilate(map: &[bool], h: usize, w: usize, r: usize) -> Vec<bool> {
    let mut rows = vec![false; h * w];
    let mut prefix = vec![0u32; w.max(h) + 1];
    for y in 0..h {
        for x in 0..w {
            prefix[x + 1] = prefix[x] + map[y * w + x] as u32;
        }
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r + 1).min(w);
            rows[y * w + x] = prefix[hi] > prefix[lo];
        }
    }
    let mut out = vec![false; h * w];
    for x in 0..w {
        for y in 0..h {
            prefix[y + 1] = prefix[y] + rows[y * w + x] as u32;
        }
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r + 1).min(h);
            out[y * w + x] = prefix[hi] > prefix[lo];
        }
    }
    out
}

/// Boundary F-measure where a boundary pixel matches when a boundary pixel
/// of the other mask lies within Chebyshev distance `tolerance_px`.
pub fn contour_f(pred: &BinaryMask, gt: &BinaryMask, tolerance_px: u32) -> Result<f64, MetricError> {
    check_geometry(pred, gt)?;
    let g = pred.geometry();
    let (h, w) = (g.height as usize, g.width as usize);
    let pb = boundary_map(pred);
    let gb = boundary_map(gt);
    let n_pred = pb.iter().filter(|&&b| b).count();
    let n_gt = gb.iter().filter(|&&b| b).count();
    match (n_pred, n_gt) {
        (0, 0) => return Ok(1.0),
        (0, _) | (_, 0) => return Ok(0.0),
        _ => {}
    }
    let r = tolerance_px as usize;
    let gt_zone = dilate(&gb, h, w, r);
    let pred_zone = dilate(&pb, h, w, r);
    let matched_pred = pb.iter().zip(&gt_zone).filter(|(a, b)| **a && **b).count();
    let matched_gt = gb.iter().zip(&pred_zone).filter(|(a, b)| **a && **b).count();
    Ok(f_measure(matched_pred, n_pred, matched_gt, n_gt))
}

pub(crate) fn f_measure(matched_pred: usize, n_pred: usize, matched_gt: usize, n_gt: usize) -> f64 {
    let precision = matched_pred as f64 / n_pred as f64;
    let recall = matched_gt as f64 / n_gt as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}
