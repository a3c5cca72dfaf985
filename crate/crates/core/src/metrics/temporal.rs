//! Interval metrics: tIoU, R1@m, mIoU, highlight detection and dense-caption F1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::model::TemporalSegment;

pub const DEFAULT_CLIP_LENGTH_S: f64 = 2.0;
pub const DVC_THRESHOLDS: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

pub fn t_iou(a: &TemporalSegment, b: &TemporalSegment) -> f64 {
    let inter = (a.end_s().min(b.end_s()) - a.start_s().max(b.start_s())).max(0.0);
    let union = a.length() + b.length() - inter;
    if union <= 0.0 {
        // two identical zero-length segments
        return if a == b { 1.0 } else { 0.0 };
    }
    inter / union
}

fn per_query_iou(
    preds: &BTreeMap<String, TemporalSegment>,
    gts: &BTreeMap<String, TemporalSegment>,
) -> Result<Vec<f64>, MetricError> {
    if gts.is_empty() {
        return Err(MetricError::InvalidInput("empty query set".into()));
    }
    Ok(gts
        .iter()
        .map(|(qid, gt)| preds.get(qid).map_or(0.0, |p| t_iou(p, gt)))
        .collect())
}

/// Fraction of ground-truth queries whose prediction reaches `threshold`.
pub fn recall_at(
    preds: &BTreeMap<String, TemporalSegment>,
    gts: &BTreeMap<String, TemporalSegment>,
    threshold: f64,
) -> Result<f64, MetricError> {
    let ious = per_query_iou(preds, gts)?;
    Ok(ious.iter().filter(|&&v| v >= threshold).count() as f64 / ious.len() as f64)
}

pub fn mean_iou(
    preds: &BTreeMap<String, TemporalSegment>,
    gts: &BTreeMap<String, TemporalSegment>,
) -> Result<f64, MetricError> {
    let ious = per_query_iou(preds, gts)?;
    Ok(ious.iter().sum::<f64>() / ious.len() as f64)
}

/// Per-query clip labels on a fixed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VhdGroundTruth {
    pub saliency: Vec<f64>,
    pub highlight: Vec<bool>,
}

impl VhdGroundTruth {
    /// Highlights are the clips whose saliency reaches `threshold`.
    pub fn from_saliency(saliency: Vec<f64>, threshold: f64) -> Self {
        let highlight = highlight_labels(&saliency, threshold);
        Self { saliency, highlight }
    }
}

pub fn highlight_labels(saliency: &[f64], threshold: f64) -> Vec<bool> {
    saliency.iter().map(|&s| s >= threshold).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VhdScores {
    pub map: f64,
    pub hit_at_1: f64,
    pub queries: usize,
}

/// Clip indices by descending score, ties by ascending index.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Non-interpolated AP of a score ranking; zero when there are no positives.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> f64 {
    let total = positives.iter().filter(|&&p| p).count();
    if total == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, idx) in ranking(scores).into_iter().enumerate() {
        if positives[idx] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    sum / total as f64
}

/// mAP and HIT@1 over all ground-truth queries. A query without a
/// prediction scores 0 on both.
pub fn vhd_scores(
    preds: &BTreeMap<String, Vec<f64>>,
    gts: &BTreeMap<String, VhdGroundTruth>,
) -> Result<VhdScores, MetricError> {
    if gts.is_empty() {
        return Err(MetricError::InvalidInput("empty query set".into()));
    }
    let (mut ap_sum, mut hits) = (0.0, 0usize);
    for (qid, gt) in gts {
        if gt.highlight.len() != gt.saliency.len() {
            return Err(MetricError::ClipGridMismatch {
                qid: qid.clone(),
                expected: gt.saliency.len(),
                found: gt.highlight.len(),
            });
        }
        let Some(scores) = preds.get(qid) else {
            continue;
        };
        if scores.len() != gt.saliency.len() {
            return Err(MetricError::ClipGridMismatch {
                qid: qid.clone(),
                expected: gt.saliency.len(),
                found: scores.len(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(MetricError::InvalidInput(format!("non-finite clip score for {qid}")));
        }
        ap_sum += average_precision(scores, &gt.highlight);
        if let Some(&top) = ranking(scores).first() {
            let best = gt.saliency.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if gt.saliency[top] >= best {
                hits += 1;
            }
        }
    }
    let n = gts.len() as f64;
    Ok(VhdScores {
        map: ap_sum / n,
        hit_at_1: hits as f64 / n,
        queries: gts.len(),
    })
}

fn greedy_matches(preds: &[TemporalSegment], gts: &[TemporalSegment], threshold: f64) -> usize {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            let v = t_iou(p, g);
            if v >= threshold {
                pairs.push((v, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; preds.len()];
    let mut used_g = vec![false; gts.len()];
    let mut matched = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            matched += 1;
        }
    }
    matched
}

/// Mean over `thresholds` of the F1 of a greedy one-to-one matching.
pub fn dvc_temporal_f1(preds: &[TemporalSegment], gts: &[TemporalSegment], thresholds: &[f64]) -> f64 {
    if thresholds.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &t in thresholds {
        let m = greedy_matches(preds, gts, t) as f64;
        let p = if preds.is_empty() { 0.0 } else { m / preds.len() as f64 };
        let r = if gts.is_empty() { 0.0 } else { m / gts.len() as f64 };
        if p + r > 0.0 {
            total += 2.0 * p * r / (p + r);
        }
    }
    total / thresholds.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: f64, b: f64) -> TemporalSegment {
        TemporalSegment::new(a, b).unwrap()
    }

    fn map(items: &[(&str, TemporalSegment)]) -> BTreeMap<String, TemporalSegment> {
        items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn t_iou_examples() {
        assert_eq!(t_iou(&seg(0.0, 10.0), &seg(0.0, 10.0)), 1.0);
        assert!((t_iou(&seg(0.0, 10.0), &seg(5.0, 15.0)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t_iou(&seg(0.0, 1.0), &seg(2.0, 3.0)), 0.0);
        assert_eq!(t_iou(&seg(0.0, 1.0), &seg(1.0, 3.0)), 0.0);
    }

    #[test]
    fn recall_and_mean() {
        let gts = map(&[("a", seg(0.0, 10.0)), ("b", seg(0.0, 10.0))]);
        assert_eq!(recall_at(&gts, &gts, 0.5).unwrap(), 1.0);
        // 6/10 and 4/10
        let preds = map(&[("a", seg(0.0, 6.0)), ("b", seg(0.0, 4.0))]);
        assert_eq!(recall_at(&preds, &gts, 0.5).unwrap(), 0.5);
        assert!((mean_iou(&preds, &gts).unwrap() - 0.5).abs() < 1e-15);
        let none = BTreeMap::new();
        assert_eq!(recall_at(&none, &gts, 0.5).unwrap(), 0.0);
        assert_eq!(mean_iou(&none, &gts).unwrap(), 0.0);
        assert!(matches!(
            recall_at(&preds, &none, 0.5),
            Err(MetricError::InvalidInput(_))
        ));
        assert!(mean_iou(&preds, &none).is_err());
    }

    #[test]
    fn ap_by_hand() {
        let ap = average_precision(&[0.9, 0.5, 0.1], &[true, false, true]);
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(average_precision(&[0.1, 0.2], &[false, false]), 0.0);
    }

    #[test]
    fn vhd_examples() {
        let mut gts = BTreeMap::new();
        gts.insert("q1".into(), VhdGroundTruth::from_saliency(vec![4.0, 1.0, 2.0], 2.0));
        gts.insert("q2".into(), VhdGroundTruth::from_saliency(vec![0.0, 3.0, 0.0], 2.0));
        let mut preds = BTreeMap::new();
        preds.insert("q1".into(), vec![0.9, 0.5, 0.1]);
        preds.insert("q2".into(), vec![0.0, 1.0, 0.2]);
        let s = vhd_scores(&preds, &gts).unwrap();
        assert_eq!(s.hit_at_1, 1.0);
        assert!((s.map - ((1.0 + 2.0 / 3.0) / 2.0 + 1.0) / 2.0).abs() < 1e-15);

        // equal scores: clip 0 ranks first
        preds.insert("q2".into(), vec![0.5, 0.5, 0.5]);
        let s = vhd_scores(&preds, &gts).unwrap();
        assert_eq!(s.hit_at_1, 0.5);

        preds.remove("q2");
        assert_eq!(vhd_scores(&preds, &gts).unwrap().hit_at_1, 0.5);

        preds.insert("q2".into(), vec![0.5, 0.5]);
        assert!(matches!(
            vhd_scores(&preds, &gts),
            Err(MetricError::ClipGridMismatch {
                expected: 3,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn dvc_examples() {
        let gts = vec![seg(0.0, 5.0), seg(5.0, 10.0)];
        assert_eq!(dvc_temporal_f1(&gts, &gts, &DVC_THRESHOLDS), 1.0);
        assert_eq!(dvc_temporal_f1(&[], &gts[..1], &DVC_THRESHOLDS), 0.0);
        let f = dvc_temporal_f1(&gts[..1], &gts, &DVC_THRESHOLDS);
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(dvc_temporal_f1(&[], &[], &DVC_THRESHOLDS), 0.0);
    }

    #[test]
    fn greedy_is_one_to_one() {
        // two predictions both overlapping the same ground truth
        let gts = vec![seg(0.0, 10.0)];
        let preds = vec![seg(0.0, 10.0), seg(0.0, 9.0)];
        assert_eq!(greedy_matches(&preds, &gts, 0.5), 1);
    }
}
