use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BenchError, Benchmark, Prediction, QAItem, QType};
use crate::metrics::{
    bi_fore_jf, foreground_fraction, jf_sequence, t_iou, BiForeBreakdown, ForegroundBucket, MetricError,
};
use crate::model::VideoMeta;

const WHEN_THRESHOLD: f64 = 0.5;

/// Per-item scores on the `[0, 1]` scale. Fields not used by the item's
/// question type are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub qid: String,
    pub qtype: QType,
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub answered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_iou: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bi_fore: Option<BiForeBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket: Option<ForegroundBucket>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhenSummary {
    pub count: usize,
    pub r1_at_0_5: f64,
    pub mean_tiou: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhereSummary {
    pub count: usize,
    pub j: f64,
    pub f: f64,
    pub jf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedSummary {
    pub count: usize,
    pub mean_tiou: f64,
    pub bi_fore_jf: f64,
    pub jf_p: f64,
    pub jf_g: f64,
    /// Standard J&F over every frame of the video, for comparison.
    pub whole_video_jf: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeSummaries {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<WhenSummary>,
    #[serde(rename = "where", default, skip_serializing_if = "Option::is_none")]
    pub where_: Option<WhereSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combined: Option<CombinedSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub bucket: ForegroundBucket,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combined: Option<CombinedSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub item_count: usize,
    pub answered_count: usize,
    pub overall: TypeSummaries,
    pub buckets: Vec<BucketSummary>,
    pub categories: BTreeMap<String, TypeSummaries>,
    pub items: Vec<ItemScore>,
    pub warnings: Vec<String>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn score_item(item: &QAItem, meta: &VideoMeta, pred: Option<&Prediction>) -> Result<ItemScore, MetricError> {
    let mut score = ItemScore {
        qid: item.qid.clone(),
        qtype: item.qtype,
        video_id: item.video_id.clone(),
        category: item.category.clone(),
        answered: false,
        t_iou: None,
        j: None,
        f: None,
        jf: None,
        bi_fore: None,
        bucket: None,
    };
    match item.qtype {
        QType::When => {
            let gt = item.gt_segment.as_ref().expect("checked at load");
            let p = pred.and_then(|p| p.segment.as_ref());
            score.answered = p.is_some();
            score.t_iou = Some(p.map_or(0.0, |p| t_iou(p, gt)));
        }
        QType::Where => {
            let gt = item.gt_masklet.as_ref().expect("checked at load");
            let (j, f) = match pred.and_then(|p| p.masklet.as_ref()) {
                Some(p) => {
                    score.answered = true;
                    let s = jf_sequence(p, gt, gt.frames.keys().copied())?;
                    (s.j, s.f)
                }
                None => (0.0, 0.0),
            };
            score.j = Some(j);
            score.f = Some(f);
            score.jf = Some((j + f) / 2.0);
        }
        QType::Combined => {
            let gt = item.gt_masklet.as_ref().expect("checked at load");
            let gt_span = gt.loc().expect("checked at load");
            score.bucket = foreground_fraction(gt, meta.frame_count).map(ForegroundBucket::for_fraction);
            match pred.and_then(|p| p.masklet.as_ref()) {
                Some(p) => {
                    score.answered = true;
                    score.t_iou = Some(p.loc().map_or(0.0, |span| {
                        t_iou(&span.to_segment(meta.fps), &gt_span.to_segment(meta.fps))
                    }));
                    score.bi_fore = Some(bi_fore_jf(p, gt)?);
                    score.jf = Some(jf_sequence(p, gt, 0..meta.frame_count)?.jf);
                }
                None => {
                    score.t_iou = Some(0.0);
                    score.bi_fore = Some(BiForeBreakdown::from_components(0.0, 0.0, 0.0, 0.0));
                    score.jf = Some(0.0);
                }
            }
        }
    }
    Ok(score)
}

fn summarize<'a>(scores: impl Iterator<Item = &'a ItemScore> + Clone) -> TypeSummaries {
    let of = |t: QType| scores.clone().filter(move |s| s.qtype == t);
    let count = |t: QType| of(t).count();
    let mut out = TypeSummaries::default();
    if count(QType::When) > 0 {
        out.when = Some(WhenSummary {
            count: count(QType::When),
            r1_at_0_5: mean(of(QType::When).map(|s| {
                if s.t_iou.unwrap_or(0.0) >= WHEN_THRESHOLD {
                    1.0
                } else {
                    0.0
                }
            })),
            mean_tiou: mean(of(QType::When).map(|s| s.t_iou.unwrap_or(0.0))),
        });
    }
    if count(QType::Where) > 0 {
        out.where_ = Some(WhereSummary {
            count: count(QType::Where),
            j: mean(of(QType::Where).map(|s| s.j.unwrap_or(0.0))),
            f: mean(of(QType::Where).map(|s| s.f.unwrap_or(0.0))),
            jf: mean(of(QType::Where).map(|s| s.jf.unwrap_or(0.0))),
        });
    }
    out.combined = combined_summary(of(QType::Combined));
    out
}

fn combined_summary<'a>(items: impl Iterator<Item = &'a ItemScore> + Clone) -> Option<CombinedSummary> {
    let count = items.clone().count();
    if count == 0 {
        return None;
    }
    let bi = |f: fn(&BiForeBreakdown) -> f64| mean(items.clone().map(move |s| s.bi_fore.as_ref().map_or(0.0, f)));
    Some(CombinedSummary {
        count,
        mean_tiou: mean(items.clone().map(|s| s.t_iou.unwrap_or(0.0))),
        bi_fore_jf: bi(|b| b.value),
        jf_p: bi(BiForeBreakdown::jf_p),
        jf_g: bi(BiForeBreakdown::jf_g),
        whole_video_jf: mean(items.clone().map(|s| s.jf.unwrap_or(0.0))),
    })
}

/// Scores every item; a missing prediction scores 0. Output is ordered by qid.
pub fn evaluate(bench: &Benchmark, predictions: &BTreeMap<String, Prediction>) -> Result<BenchmarkReport, BenchError> {
    let mut items: Vec<&QAItem> = bench.items.iter().collect();
    items.sort_by(|a, b| a.qid.cmp(&b.qid));

    let scores = items
        .par_iter()
        .map(|item| {
            let meta = bench
                .videos
                .get(&item.video_id)
                .ok_or_else(|| BenchError::InvalidInput(format!("unknown video {}", item.video_id)))?;
            score_item(item, meta, predictions.get(&item.qid)).map_err(|source| BenchError::Metric {
                qid: item.qid.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let known: std::collections::BTreeSet<&str> = items.iter().map(|i| i.qid.as_str()).collect();
    let mut warnings: Vec<String> = predictions
        .keys()
        .filter(|q| !known.contains(q.as_str()))
        .map(|q| format!("prediction for unknown qid {q} ignored"))
        .collect();
    for (item, s) in items.iter().zip(&scores) {
        if !s.answered && predictions.contains_key(&item.qid) {
            warnings.push(format!(
                "prediction for {} lacks the field its {:?} question needs",
                item.qid, item.qtype
            ));
        }
    }

    let buckets = ForegroundBucket::ALL
        .iter()
        .map(|&b| BucketSummary {
            bucket: b,
            label: b.label().to_string(),
            combined: combined_summary(scores.iter().filter(move |s| s.bucket == Some(b))),
        })
        .collect();

    let mut categories = BTreeMap::new();
    let names: std::collections::BTreeSet<&str> = scores.iter().filter_map(|s| s.category.as_deref()).collect();
    for name in names {
        categories.insert(
            name.to_string(),
            summarize(scores.iter().filter(move |s| s.category.as_deref() == Some(name))),
        );
    }

    Ok(BenchmarkReport {
        item_count: scores.len(),
        answered_count: scores.iter().filter(|s| s.answered).count(),
        overall: summarize(scores.iter()),
        buckets,
        categories,
        items: scores,
        warnings,
    })
}

fn pct(v: f64) -> f64 {
    (v * 1000.0).round() / 10.0
}

fn percent_value(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            *v = serde_json::json!(pct(n.as_f64().unwrap_or(0.0)));
        }
        Value::Array(items) => items.iter_mut().for_each(percent_value),
        Value::Object(map) => map.values_mut().for_each(percent_value),
        _ => {}
    }
}

impl BenchmarkReport {
    /// JSON with every score in percent, one decimal. Counts stay integers.
    pub fn to_percent_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        percent_value(&mut v);
        v
    }
}

fn push_rows(out: &mut String, scope: &str, s: &TypeSummaries) {
    if let Some(w) = &s.when {
        let _ = writeln!(
            out,
            "{scope:<16} {:<9} {:>6}  R1@0.5 {:>5.1}  mean tIoU {:>5.1}",
            "When",
            w.count,
            pct(w.r1_at_0_5),
            pct(w.mean_tiou)
        );
    }
    if let Some(w) = &s.where_ {
        let _ = writeln!(
            out,
            "{scope:<16} {:<9} {:>6}  J {:>5.1}  F {:>5.1}  J&F {:>5.1}",
            "Where",
            w.count,
            pct(w.j),
            pct(w.f),
            pct(w.jf)
        );
    }
    if let Some(c) = &s.combined {
        push_combined(out, scope, c);
    }
}

fn push_combined(out: &mut String, scope: &str, c: &CombinedSummary) {
    let _ = writeln!(
        out,
        "{scope:<16} {:<9} {:>6}  tIoU {:>5.1}  bi-fore J&F {:>5.1}  (J&F_p {:>5.1}  J&F_g {:>5.1})  J&F {:>5.1}",
        "Combined",
        c.count,
        pct(c.mean_tiou),
        pct(c.bi_fore_jf),
        pct(c.jf_p),
        pct(c.jf_g),
        pct(c.whole_video_jf)
    );
}

/// Aligned text table, scores in percent.
pub fn render_table(report: &BenchmarkReport, buckets: bool, categories: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:<9} {:>6}  scores (%)", "scope", "type", "items");
    push_rows(&mut out, "all", &report.overall);
    if buckets {
        for b in &report.buckets {
            if let Some(c) = &b.combined {
                push_combined(&mut out, &format!("fg {}", b.label), c);
            }
        }
    }
    if categories {
        for (name, s) in &report.categories {
            push_rows(&mut out, name, s);
        }
    }
    let _ = writeln!(out, "answered {}/{}", report.answered_count, report.item_count);
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
