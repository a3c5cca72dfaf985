//! Acceptance checks. One PASS/FAIL line per criterion; exits nonzero when any fails.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use loomkit_core::bench::{dataset_stats, Benchmark, Prediction, QAItem, QType};
use loomkit_core::metrics::{bi_fore_jf, contour_f, default_contour_tolerance, jf_sequence, region_j, BiForeBreakdown};
use loomkit_core::model::{
    rle_encode, BinaryMask, Bitmap, Dataset, FrameGeometry, Masklet, Shot, ShotOrigin, TemporalSegment, VideoMeta,
    VideoRecord,
};
use loomkit_core::prompt::{token_budget, MAX_SEQUENCE_LENGTH};
use loomkit_core::shots::{
    filter_shots, kts_segment, optimal_segmentations, FeatureSource, FilterOutcome, FrameFeatureSeries, KtsKernel,
    ScatterTable,
};
use loomkit_pipeline::{
    annotate_dataset, apply_review_decisions, merge_annotated_shots, AnnotateConfig, Clients, MockCaptioner,
    MockDescriptionModel, MockDetector, MockTracker, ReviewDecision, Round, Verdict,
};
use loomkit_review::{ReviewService, SyntheticFrames};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Inclusive tolerance with slack for binary representation of decimal inputs.
fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol + 1e-9 * want.abs().max(1.0), || {
        format!("{what}: got {got}, want {want} ± {tol}")
    })
}

fn hm(a: f64, b: f64) -> f64 {
    if a + b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

fn reference_rows() -> Outcome {
    let rows = [
        ((47.0, 48.9, 25.4, 26.6), 33.7, 48.0, 26.0),
        ((58.1, 60.5, 41.1, 42.8), 49.1, 59.3, 41.9),
    ];
    let mut got = Vec::new();
    for ((jp, fp, jg, fg), value, jfp, jfg) in rows {
        let b = BiForeBreakdown::from_components(jp, fp, jg, fg);
        close(b.value, value, 0.05, "bi-fore")?;
        close(b.jf_p(), jfp, 0.05, "J&F_p")?;
        close(b.jf_g(), jfg, 0.05, "J&F_g")?;
        got.push(format!("{:.2}", b.value));
    }
    Ok(format!("values {}", got.join(", ")))
}

fn harmonic_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..=1.0));
        let b = BiForeBreakdown::from_components(c[0], c[1], c[2], c[3]);
        let oracle = hm((c[0] + c[1]) / 2.0, (c[2] + c[3]) / 2.0);
        worst = worst.max((b.value - oracle).abs());
        let x = c[0];
        let same = BiForeBreakdown::from_components(x, x, x, x).value;
        worst = worst.max((same - x).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn inflation() -> Outcome {
    let g = FrameGeometry::new(64, 64).unwrap();
    // J = 1/5 (one of five pixels shared), F = 1 at one-pixel tolerance
    let mut gt = Bitmap::zeros(g);
    let mut pred = Bitmap::zeros(g);
    for (r, c) in [(10, 10), (30, 30), (50, 20)] {
        gt.set(r, c, true);
    }
    for (r, c) in [(10, 10), (30, 31), (51, 20)] {
        pred.set(r, c, true);
    }
    let (p, t) = (rle_encode(&pred), rle_encode(&gt));
    let n = 100usize;
    let q = 0.6;
    let mut seen = Vec::new();
    for (n_f, want) in [(5usize, 0.98), (20, 0.92), (60, 0.76)] {
        let mut pm = Masklet::new("v");
        let mut gm = Masklet::new("v");
        for f in 40..40 + n_f {
            pm.insert(f, p.clone()).unwrap();
            gm.insert(f, t.clone()).unwrap();
        }
        let whole = jf_sequence(&pm, &gm, 0..n).map_err(|e| e.to_string())?.jf;
        let formula = (n_f as f64 * q + (n - n_f) as f64) / n as f64;
        close(formula, want, 1e-12, "formula")?;
        close(whole, want, 1e-9, &format!("whole-video J&F at n_f={n_f}"))?;
        let bi = bi_fore_jf(&pm, &gm).map_err(|e| e.to_string())?.value;
        close(bi, q, 1e-9, &format!("bi-fore at n_f={n_f}"))?;
        seen.push(format!("{whole:.2}"));
    }
    Ok(format!("whole-video {} bi-fore 0.60", seen.join("/")))
}

fn random_bitmap(rng: &mut ChaCha8Rng, g: FrameGeometry) -> Bitmap {
    let mut bm = Bitmap::zeros(g);
    let (h, w) = (g.height as usize, g.width as usize);
    if rng.random_bool(0.2) {
        let density = rng.random_range(0.1..0.9);
        for r in 0..h {
            for c in 0..w {
                bm.set(r, c, rng.random_bool(density));
            }
        }
        return bm;
    }
    for _ in 0..rng.random_range(0..4) {
        let (r0, c0) = (rng.random_range(0..h), rng.random_range(0..w));
        let (r1, c1) = (rng.random_range(r0..h) + 1, rng.random_range(c0..w) + 1);
        for r in r0..r1 {
            for c in c0..c1 {
                bm.set(r, c, true);
            }
        }
    }
    for _ in 0..rng.random_range(0..10) {
        let (r, c) = (rng.random_range(0..h), rng.random_range(0..w));
        bm.set(r, c, !bm.get(r, c));
    }
    bm
}

fn oracle_j(a: &Bitmap, b: &Bitmap) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.bits().iter().zip(b.bits()) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn oracle_boundary(bm: &Bitmap) -> Vec<(i64, i64)> {
    let g = bm.geometry();
    let (h, w) = (g.height as i64, g.width as i64);
    let on = |r: i64, c: i64| r >= 0 && c >= 0 && r < h && c < w && bm.get(r as usize, c as usize);
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if on(r, c) && !(on(r - 1, c) && on(r + 1, c) && on(r, c - 1) && on(r, c + 1)) {
                out.push((r, c));
            }
        }
    }
    out
}

fn oracle_f(a: &Bitmap, b: &Bitmap, tol: i64) -> f64 {
    let (pa, pb) = (oracle_boundary(a), oracle_boundary(b));
    match (pa.is_empty(), pb.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let matched = |from: &[(i64, i64)], to: &[(i64, i64)]| {
        from.iter()
            .filter(|p| to.iter().any(|q| (p.0 - q.0).abs().max((p.1 - q.1).abs()) <= tol))
            .count() as f64
            / from.len() as f64
    };
    let (precision, recall) = (matched(&pa, &pb), matched(&pb, &pa));
    hm(precision, recall)
}

fn mask_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_f: f64 = 0.0;
    for i in 0..1000 {
        let g = FrameGeometry::new(rng.random_range(1..=64), rng.random_range(1..=64)).unwrap();
        let (a, b) = (random_bitmap(&mut rng, g), random_bitmap(&mut rng, g));
        let (ma, mb) = (rle_encode(&a), rle_encode(&b));
        let j = region_j(&ma, &mb).map_err(|e| e.to_string())?;
        ensure(j == oracle_j(&a, &b), || {
            format!("pair {i}: J {j} vs {}", oracle_j(&a, &b))
        })?;
        let tol = if i % 2 == 0 {
            default_contour_tolerance(g)
        } else {
            rng.random_range(0..4)
        };
        let f = contour_f(&ma, &mb, tol).map_err(|e| e.to_string())?;
        worst_f = worst_f.max((f - oracle_f(&a, &b, tol as i64)).abs());
    }
    ensure(worst_f <= 1e-12, || format!("F deviation {worst_f:e}"))?;
    Ok(format!("J exact, F max deviation {worst_f:.1e}"))
}

fn segment_scatter(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len() as f64;
    (0..rows[0].len())
        .map(|k| {
            let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>()
        })
        .sum()
}

fn best_by_count(rows: &[Vec<f64>], max_m: usize) -> Vec<f64> {
    let n = rows.len();
    let mut best = vec![f64::INFINITY; max_m + 1];
    // every subset of interior cut positions with at most max_m members
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(cuts) = stack.pop() {
        let mut bounds = vec![0];
        bounds.extend(&cuts);
        bounds.push(n);
        let cost: f64 = bounds.windows(2).map(|w| segment_scatter(&rows[w[0]..w[1]])).sum();
        best[cuts.len()] = best[cuts.len()].min(cost);
        if cuts.len() < max_m {
            for c in cuts.last().map_or(1, |l| l + 1)..n {
                let mut next = cuts.clone();
                next.push(c);
                stack.push(next);
            }
        }
    }
    best
}

fn kts_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(4..=20);
        let d = rng.random_range(1..=3);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-4.0..4.0)).collect())
            .collect();
        let max_m = rng.random_range(1..=3usize).min(n - 1);
        let features =
            FrameFeatureSeries::new(rows.clone(), 1.0, FeatureSource::External).map_err(|e| e.to_string())?;
        let dp = optimal_segmentations(&ScatterTable::new(&features, KtsKernel::Linear), max_m);
        let oracle = best_by_count(&rows, max_m);
        for m in 0..=max_m {
            worst = worst.max((dp[m].0 - oracle[m]).abs());
            if m > 0 {
                ensure(dp[m].0 <= dp[m - 1].0, || {
                    format!("seed {seed}: objective rises at m={m}")
                })?;
            }
        }
        let top = kts_segment(&features, max_m, 0.0, KtsKernel::Linear).map_err(|e| e.to_string())?;
        worst = worst.max((top.objective - oracle[max_m]).abs());
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn tiles(shots: &[Shot], total: usize) -> bool {
    shots.first().map(|s| s.start_frame) == Some(0)
        && shots.last().map(|s| s.end_frame) == Some(total)
        && shots.windows(2).all(|w| w[0].end_frame == w[1].start_frame)
}

fn review_fixture() -> Dataset {
    let g = FrameGeometry::new(24, 32).unwrap();
    let videos = (0..6)
        .map(|i| {
            let mut v = VideoRecord::new(VideoMeta::new(format!("v{i}"), 10.0, 60, g).unwrap());
            for s in 0..4 {
                v.shots
                    .push(Shot::new(s * 15, s * 15 + 15, ShotOrigin::ContentCut).unwrap());
            }
            v
        })
        .collect();
    let detector = MockDetector::generated(5, g);
    let clients = Clients {
        detector: &detector,
        tracker: &MockTracker,
        captioner: &MockCaptioner::default(),
        describer: Some(&MockDescriptionModel { seed: 5 }),
    };
    annotate_dataset(&Dataset::new(videos), clients, &AnnotateConfig::default())
        .unwrap()
        .0
}

fn pipeline_rules() -> Outcome {
    let fps = 30.0;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..300 {
        let lens: Vec<usize> = (0..rng.random_range(1..15)).map(|_| rng.random_range(1..120)).collect();
        let mut shots = Vec::new();
        let mut start = 0;
        for l in &lens {
            shots.push(Shot::new(start, start + l, ShotOrigin::ContentCut).unwrap());
            start += l;
        }
        match filter_shots(&shots, fps, 1.0, usize::MAX).map_err(|e| e.to_string())? {
            FilterOutcome::Kept { shots: kept } => {
                ensure(tiles(&kept, start), || format!("case {case}: output does not tile"))?;
                ensure(kept.len() == 1 || kept.iter().all(|s| s.duration_s(fps) >= 1.0), || {
                    format!("case {case}: a sub-1 s shot survived")
                })?;
            }
            other => return Err(format!("case {case}: unexpected {other:?}")),
        }
    }
    let eleven: Vec<Shot> = (0..11)
        .map(|i| Shot::new(i * 150, i * 150 + 150, ShotOrigin::ContentCut).unwrap())
        .collect();
    let outcome = filter_shots(&eleven, fps, 1.0, 10).map_err(|e| e.to_string())?;
    ensure(outcome == FilterOutcome::DiscardVideo { shot_count: 11 }, || {
        format!("11 shots: {outcome:?}")
    })?;

    let four: Vec<Shot> = (0..4)
        .map(|i| Shot::new(i * 20, i * 20 + 20, ShotOrigin::ContentCut).unwrap())
        .collect();
    let merged = merge_annotated_shots(&four, &BTreeSet::from([0, 1, 3]));
    ensure(
        merged.len() == 3 && tiles(&merged, 80) && merged[0].end_frame == 40,
        || format!("[✓,✓,✗,✓] gave {merged:?}"),
    )?;

    let original = review_fixture();
    let d = |v: &str, round, shot, verdict| ReviewDecision {
        video_id: v.into(),
        round,
        shot_index: shot,
        verdict,
        reviewer: "acceptance".into(),
        timestamp: "2026-01-01T00:00:00Z".into(),
    };
    let mut decisions = Vec::new();
    for v in &original.videos {
        let covered = v.covered_shots();
        if covered.len() < v.shots.len() {
            let verdict = if v.video_id() == "v0" {
                Verdict::MissingFound
            } else {
                Verdict::Keep
            };
            decisions.push(d(v.video_id(), Round::One, None, verdict));
        }
    }
    for v in &original.videos {
        if v.video_id() == "v1" {
            decisions.push(d("v1", Round::Two, None, Verdict::Incorrect));
        } else if let Some(&s) = v.covered_shots().iter().next() {
            decisions.push(d(v.video_id(), Round::Two, Some(s), Verdict::Redundant));
        }
    }
    let once = apply_review_decisions(&original, &decisions).map_err(|e| e.to_string())?;
    let twice = apply_review_decisions(&once, &decisions).map_err(|e| e.to_string())?;
    ensure(once == twice, || "not idempotent".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join("decisions.jsonl");
    let live =
        ReviewService::open(original.clone(), Some(&log), Box::new(SyntheticFrames)).map_err(|e| e.to_string())?;
    for dec in &decisions {
        live.submit(dec.clone()).map_err(|e| format!("{}: {e}", dec.video_id))?;
    }
    let replayed =
        ReviewService::open(original.clone(), Some(&log), Box::new(SyntheticFrames)).map_err(|e| e.to_string())?;
    let (a, b, c) = (
        live.dataset().to_json_string(),
        replayed.dataset().to_json_string(),
        once.to_json_string(),
    );
    ensure(a == b && b == c, || "replayed state differs".into())?;
    Ok(format!(
        "300 random tilings, 11-shot discard, 4→{} merge, {} decisions replayed",
        merged.len(),
        decisions.len()
    ))
}

fn stats_consistency() -> Outcome {
    let g = FrameGeometry::new(8, 8).unwrap();
    let (videos, shots) = (1456usize, 8710usize);
    let records: Vec<VideoRecord> = (0..videos)
        .map(|i| {
            // spread the surplus shots over the first videos
            let n = shots / videos + usize::from(i < shots % videos);
            let mut v = VideoRecord::new(VideoMeta::new(format!("vid{i:05}"), 30.0, n * 510, g).unwrap());
            for s in 0..n {
                v.shots
                    .push(Shot::new(s * 510, s * 510 + 510, ShotOrigin::Kts).unwrap());
            }
            v
        })
        .collect();
    let stats = dataset_stats(&Dataset::new(records)).map_err(|e| e.to_string())?;
    ensure(stats.video_count == videos && stats.shot_count == shots, || {
        format!("counts {} / {}", stats.video_count, stats.shot_count)
    })?;
    let mean = stats.mean_shots_per_video;
    close(mean, shots as f64 / videos as f64, 1e-12, "mean shots")?;
    ensure((5.95..=6.0).contains(&mean), || {
        format!("mean {mean} outside [5.95, 6.0]")
    })?;
    Ok(format!("{mean:.3} shots per video"))
}

fn token_arithmetic() -> Outcome {
    let b = token_budget(5, 256, 128, 4, 0).map_err(|e| e.to_string())?;
    ensure(b.fast_per_frame == 16, || {
        format!("fast/frame {}", b.fast_per_frame)
    })?;
    ensure(b.slow_total == 5 * 256 && b.fast_total == 128 * 16, || format!("{b:?}"))?;
    ensure(b.visual_total() == 3328 && b.grand_total == 3328, || {
        format!("total {}", b.grand_total)
    })?;
    ensure(MAX_SEQUENCE_LENGTH == 8192 && !b.exceeds_max_sequence, || {
        "budget check".into()
    })?;
    Ok("16/frame, slow 1280, fast 2048, total 3328 ≤ 8192".into())
}

fn rect(g: FrameGeometry) -> BinaryMask {
    BinaryMask::from_rect(g, 4, 4, 20, 16)
}

fn masklet(frames: impl IntoIterator<Item = usize>, g: FrameGeometry) -> Masklet {
    let mut m = Masklet::new("");
    for f in frames {
        m.insert(f, rect(g)).unwrap();
    }
    m
}

fn known_value_reports() -> Outcome {
    let g = FrameGeometry::new(32, 32).unwrap();
    let fps = 10.0;
    let meta = |id: &str| VideoMeta::new(id, fps, 50, g).unwrap();
    let seg = |a: f64, b: f64| TemporalSegment::new(a, b).unwrap();
    let item = |qid: &str, qtype, video: &str, gt_segment, gt_masklet: Option<Masklet>| QAItem {
        qid: qid.into(),
        qtype,
        question: format!("question {qid}"),
        video_id: video.into(),
        gt_segment,
        gt_masklet: gt_masklet.map(|mut m| {
            m.video_id = video.into();
            m
        }),
        category: None,
    };
    let mut bench = Benchmark::default();
    for id in ["a", "b", "c"] {
        bench.videos.insert(id.into(), meta(id));
    }
    for q in ["w1", "w2", "w3", "w4"] {
        bench.items.push(item(q, QType::When, "a", Some(seg(2.0, 6.0)), None));
    }
    for q in ["s1", "s2"] {
        bench
            .items
            .push(item(q, QType::Where, "b", None, Some(masklet(0..4, g))));
    }
    for q in ["c1", "c2"] {
        bench.items.push(item(
            q,
            QType::Combined,
            "c",
            Some(seg(1.0, 2.0)),
            Some(masklet(10..20, g)),
        ));
    }

    let pred = |qid: &str, segment: Option<TemporalSegment>, m: Option<Masklet>| Prediction {
        qid: qid.into(),
        segment,
        masklet: m,
        clip_scores: None,
    };
    let preds = [
        pred("w1", Some(seg(2.0, 6.0)), None),
        pred("w2", Some(seg(4.0, 8.0)), None),
        pred("w3", Some(seg(2.0, 4.0)), None),
        pred("s1", None, Some(masklet(0..3, g))),
        pred("c1", None, Some(masklet(10..15, g))),
        pred("c2", None, Some(masklet(10..28, g))),
    ];

    // expected values derived from the construction
    let when_tiou = [1.0, 2.0 / 6.0, 0.5, 0.0];
    let r1 = when_tiou.iter().filter(|&&t| t >= 0.5).count() as f64 / 4.0;
    let where_jf = (3.0 / 4.0 + 0.0) / 2.0;
    // c1: exact masks on half the gt span; c2: gt span exact plus 8 false-positive frames
    let (p1, g1, p2, g2) = (1.0, 5.0 / 10.0, 10.0 / 18.0, 1.0);
    let expected = [
        ("/overall/when/r1_at_0_5", r1),
        ("/overall/when/mean_tiou", when_tiou.iter().sum::<f64>() / 4.0),
        ("/overall/where/j", where_jf),
        ("/overall/where/f", where_jf),
        ("/overall/where/jf", where_jf),
        ("/overall/combined/mean_tiou", (0.5 / 1.0 + 1.0 / 1.8) / 2.0),
        ("/overall/combined/jf_p", (p1 + p2) / 2.0),
        ("/overall/combined/jf_g", (g1 + g2) / 2.0),
        ("/overall/combined/bi_fore_jf", (hm(p1, g1) + hm(p2, g2)) / 2.0),
        ("/overall/combined/whole_video_jf", (45.0 / 50.0 + 42.0 / 50.0) / 2.0),
    ];

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bench_path = dir.path().join("bench.jsonl");
    let pred_path = dir.path().join("preds.jsonl");
    let out_path = dir.path().join("report.json");
    std::fs::write(&bench_path, bench.to_jsonl()).map_err(|e| e.to_string())?;
    let lines: String = preds.iter().map(|p| serde_json::to_string(p).unwrap() + "\n").collect();
    std::fs::write(&pred_path, lines).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_loomkit"))
        .args(["eval", "--buckets", "--bench"])
        .arg(&bench_path)
        .arg("--pred")
        .arg(&pred_path)
        .arg("--out")
        .arg(&out_path)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        String::from_utf8_lossy(&status.stderr).into_owned()
    })?;
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out_path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (pointer, want) in expected {
        let got = report
            .pointer(pointer)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| format!("{pointer} missing from report"))?;
        close(got, want * 100.0, 0.05, pointer)?;
        worst = worst.max((got - want * 100.0).abs());
    }
    ensure(report["item_count"] == 8 && report["answered_count"] == 6, || {
        format!("counts {} / {}", report["item_count"], report["answered_count"])
    })?;
    Ok(format!(
        "{} aggregates, max deviation {worst:.3} points",
        expected.len()
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, Duration, fn() -> Outcome); 9] = [
        (
            "bi-fore J&F on the reference component rows",
            Duration::from_secs(1),
            reference_rows,
        ),
        (
            "harmonic-mean identity on 10k quadruples",
            Duration::from_secs(10),
            harmonic_identity,
        ),
        (
            "whole-video J&F inflates, bi-fore stays at q",
            Duration::from_secs(10),
            inflation,
        ),
        (
            "mask metrics match oracles on 1,000 pairs",
            Duration::from_secs(30),
            mask_oracles,
        ),
        (
            "KTS matches exhaustive enumeration on 200 series",
            Duration::from_secs(60),
            kts_oracle,
        ),
        (
            "pipeline filtering, merge and review replay rules",
            Duration::from_secs(30),
            pipeline_rules,
        ),
        (
            "dataset statistics on 1,456 videos / 8,710 shots",
            Duration::from_secs(10),
            stats_consistency,
        ),
        ("slow/fast token budget", Duration::from_secs(1), token_arithmetic),
        (
            "harness reports known-value predictions within 0.05",
            Duration::from_secs(30),
            known_value_reports,
        ),
    ];
    let mut failed = 0;
    for (name, budget, check) in checks {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, limit {budget:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} ({elapsed:.2?})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance check(s) failed");
        ExitCode::FAILURE
    }
}
