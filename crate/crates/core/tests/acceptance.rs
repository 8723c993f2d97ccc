//! Acceptance suite: one test per release criterion, each checked against
//! an independent oracle or a hand-derived known answer.
//!
//! Every randomized check runs on a pinned seed so the suite is
//! deterministic. The brute-force oracles here deliberately reimplement
//! the math from scratch (per-cut re-evaluation, exhaustive assignment
//! enumeration, rasterized overlap counting) rather than calling back
//! into the code they validate.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use videval_core::accuracy::{average_precision, pr_curve};
use videval_core::failure::{classify_false_negatives, FailureCategory, DEFAULT_EDGE_EPS};
use videval_core::ingest::{
    parse_voc, parse_yolo_labels, read_file, write_yolo_labels, ClassTable, Detection,
    FrameIdentity, GroundTruthFrame, GroundTruthObject,
};
use videval_core::matching::match_frame;
use videval_core::report::{
    match_all_frames, run_evaluate, write_outputs, ConfidenceMode, GtFormat, RunConfig,
};
use videval_core::stability::stability_report;
use videval_core::tracklets::{attach_detections, build_tracklets};
use videval_core::BBox;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn gt_object(class: &str, b: [f64; 4]) -> GroundTruthObject {
    GroundTruthObject {
        object_class: class.to_string(),
        bbox: BBox::new(b[0], b[1], b[2], b[3]).unwrap(),
    }
}

fn gt_frame(video: &str, frame: u64, objects: Vec<GroundTruthObject>) -> GroundTruthFrame {
    GroundTruthFrame {
        video_id: video.to_string(),
        frame_index: frame,
        objects,
    }
}

fn detection(video: &str, frame: u64, class: &str, conf: f64, b: [f64; 4]) -> Detection {
    Detection {
        video_id: video.to_string(),
        frame_index: frame,
        object_class: class.to_string(),
        confidence: conf,
        bbox: BBox::new(b[0], b[1], b[2], b[3]).unwrap(),
    }
}

fn classes_match(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

/// Overlap area computed from corner arithmetic, independently of the
/// geometry module's own intersection code path.
fn overlap_area(a: &BBox, b: &BBox) -> f64 {
    let w = a.x_max().min(b.x_max()) - a.x_min().max(b.x_min());
    let h = a.y_max().min(b.y_max()) - a.y_min().max(b.y_min());
    if w > 0.0 && h > 0.0 {
        w * h
    } else {
        0.0
    }
}

/// A random box with corners on the 1/8 grid, so overlaps between
/// independently drawn boxes are common.
fn eighth_grid_box(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let x0 = rng.gen_range(0..7);
    let x1 = rng.gen_range(x0 + 1..=7) + 1;
    let y0 = rng.gen_range(0..7);
    let y1 = rng.gen_range(y0 + 1..=7) + 1;
    [
        x0 as f64 / 8.0,
        y0 as f64 / 8.0,
        x1 as f64 / 8.0,
        y1 as f64 / 8.0,
    ]
}

// --- criterion 1: AP against per-cut re-evaluation ---

/// From-scratch true-positive count for a confidence-ordered kept set:
/// each detection claims its best still-free ground-truth box of the same
/// class at or above the threshold.
fn scratch_tp_count(kept: &[&Detection], frames: &[GroundTruthFrame], thr: f64) -> usize {
    let mut claimed: Vec<Vec<bool>> = frames.iter().map(|f| vec![false; f.objects.len()]).collect();
    let mut tp = 0;
    for det in kept {
        let Some(fi) = frames
            .iter()
            .position(|f| f.video_id == det.video_id && f.frame_index == det.frame_index)
        else {
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for (gi, obj) in frames[fi].objects.iter().enumerate() {
            if claimed[fi][gi] || !classes_match(&obj.object_class, &det.object_class) {
                continue;
            }
            let iou = det.bbox.iou(&obj.bbox);
            if iou >= thr && best.map_or(true, |(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        if let Some((gi, _)) = best {
            claimed[fi][gi] = true;
            tp += 1;
        }
    }
    tp
}

/// Enumerate every confidence cut, evaluate precision and recall of the
/// kept set from scratch, and accumulate recall-increase-weighted
/// precision.
fn cut_enumeration_ap(dets: &[Detection], frames: &[GroundTruthFrame], thr: f64) -> f64 {
    let total_gt: usize = frames.iter().map(|f| f.objects.len()).sum();
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for cut in 1..=order.len() {
        let kept: Vec<&Detection> = order[..cut].iter().map(|&i| &dets[i]).collect();
        let tp = scratch_tp_count(&kept, frames, thr);
        let precision = tp as f64 / cut as f64;
        let recall = tp as f64 / total_gt as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

#[test]
fn criterion_01_average_precision_matches_cut_enumeration_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut max_delta: f64 = 0.0;
    for _ in 0..500 {
        let n_frames = rng.gen_range(1..=2);
        let mut frames: Vec<GroundTruthFrame> = (0..n_frames)
            .map(|f| gt_frame("v", f, Vec::new()))
            .collect();
        let n_gt = rng.gen_range(1..=5);
        for _ in 0..n_gt {
            let f = rng.gen_range(0..n_frames) as usize;
            let b = eighth_grid_box(&mut rng);
            frames[f].objects.push(gt_object("obj", b));
        }
        let n_det = rng.gen_range(0..=5);
        // distinct confidences; cut enumeration is ambiguous under ties
        let mut confs: Vec<f64> = (0..n_det).map(|i| 0.1 + 0.8 * i as f64 / 5.0).collect();
        for i in (1..confs.len()).rev() {
            confs.swap(i, rng.gen_range(0..=i));
        }
        let dets: Vec<Detection> = confs
            .iter()
            .map(|&c| {
                let f = rng.gen_range(0..n_frames);
                detection("v", f, "obj", c, eighth_grid_box(&mut rng))
            })
            .collect();

        let curve = pr_curve(&dets, &frames, 0.5).unwrap();
        let ap = average_precision(&curve);
        let oracle = cut_enumeration_ap(&dets, &frames, 0.5);
        let delta = (ap - oracle).abs();
        max_delta = max_delta.max(delta);
        assert!(
            delta <= 1e-12,
            "AP {ap} vs cut-enumeration oracle {oracle} (delta {delta:.3e})"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("criterion 01 PASS: 500 streams, max |AP - oracle| = {max_delta:.3e}, {elapsed:?}");
}

// --- criterion 2: known-answer AP on the bundled fixture ---

#[test]
fn criterion_02_bundled_fixture_average_precision_known_answers() {
    let config = RunConfig::new(fixture("ap59/voc"), GtFormat::Voc, fixture("ap59/detections.jsonl"));
    let output = run_evaluate(&config).unwrap();
    let ap = output.report.evaluation.ap50;
    assert!(
        (ap - 5.0 / 9.0).abs() <= 1e-12,
        "ap50 {ap} differs from 5/9 by {:.3e}",
        (ap - 5.0 / 9.0).abs()
    );

    let mut perfect = config.clone();
    perfect.detections = fixture("ap59/detections_perfect.jsonl");
    let output = run_evaluate(&perfect).unwrap();
    let eval = &output.report.evaluation;
    assert_eq!(eval.ap50, 1.0);
    assert_eq!(eval.ap75, 1.0);
    assert_eq!(eval.ap_range, 1.0);
    println!(
        "criterion 02 PASS: fixture ap50 = {ap} (5/9 = {}), perfect detector suite = (1, 1, 1)",
        5.0 / 9.0
    );
}

// --- criterion 3: stability metrics vanish for a perfect detector ---

/// Random-walk ground truth: per video, a few objects drift in small
/// steps, so consecutive frames link.
fn random_walk_frames(rng: &mut ChaCha8Rng, video: &str, n_frames: u64, n_objects: usize) -> Vec<GroundTruthFrame> {
    let mut centers: Vec<(f64, f64, f64)> = (0..n_objects)
        .map(|_| {
            (
                rng.gen_range(0.2..0.8),
                rng.gen_range(0.2..0.8),
                rng.gen_range(0.05..0.12),
            )
        })
        .collect();
    (0..n_frames)
        .map(|f| {
            let objects = centers
                .iter_mut()
                .enumerate()
                .map(|(i, (cx, cy, half))| {
                    *cx = (*cx + rng.gen_range(-0.002..0.002)).clamp(0.15, 0.85);
                    *cy = (*cy + rng.gen_range(-0.002..0.002)).clamp(0.15, 0.85);
                    let class = if i % 2 == 0 { "diver" } else { "fish" };
                    gt_object(class, [*cx - *half, *cy - *half, *cx + *half, *cy + *half])
                })
                .collect();
            gt_frame(video, f, objects)
        })
        .collect()
}

/// One detection per ground-truth box, same box, same class.
fn perfect_detections(frames: &[GroundTruthFrame]) -> Vec<Detection> {
    frames
        .iter()
        .flat_map(|f| {
            f.objects.iter().map(|o| Detection {
                video_id: f.video_id.clone(),
                frame_index: f.frame_index,
                object_class: o.object_class.clone(),
                confidence: 0.9,
                bbox: o.bbox,
            })
        })
        .collect()
}

#[test]
fn criterion_03_perfect_detector_zeroes_stability_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut frames = Vec::new();
    for v in 0..10 {
        let video = format!("video{v:02}");
        let n_frames = rng.gen_range(5..=15);
        let n_objects = rng.gen_range(1..=3);
        frames.extend(random_walk_frames(&mut rng, &video, n_frames, n_objects));
    }
    let dets = perfect_detections(&frames);
    let matches = match_all_frames(&dets, &frames, 0.5).unwrap();
    let mut tracklets = build_tracklets(&frames, 0.5).unwrap();
    attach_detections(&mut tracklets, &matches).unwrap();
    let report = stability_report(&tracklets);

    assert!(report.translation_error.defined);
    assert!(report.scale_aspect_error.defined);
    assert!(report.fragmentation_error.defined);
    assert_eq!(report.translation_error.value, 0.0);
    assert_eq!(report.scale_aspect_error.value, 0.0);
    assert_eq!(report.fragmentation_error.value, 0.0);
    for t in &report.per_tracklet {
        assert_eq!(t.flip_count, 0);
    }
    println!(
        "criterion 03 PASS: {} tracklets, translation = scale-aspect = fragmentation = 0 exactly",
        report.per_tracklet.len()
    );
}

// --- criterion 4: translation error calibrated against known jitter ---

#[test]
fn criterion_04_translation_error_matches_known_jitter_sigma() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    // uniform on [-a, a] has population sigma a / sqrt(3)
    let sigma = 0.05;
    let a = sigma * 3.0_f64.sqrt();
    let n = 10_000u64;
    let gt_box = [0.3, 0.3, 0.7, 0.7];

    let frames: Vec<GroundTruthFrame> = (0..n)
        .map(|f| gt_frame("jitter", f, vec![gt_object("diver", gt_box)]))
        .collect();
    let dets: Vec<Detection> = (0..n)
        .map(|f| {
            let dx = (rng.gen::<f64>() * 2.0 - 1.0) * a;
            let dy = (rng.gen::<f64>() * 2.0 - 1.0) * a;
            detection(
                "jitter",
                f,
                "diver",
                0.9,
                [gt_box[0] + dx, gt_box[1] + dy, gt_box[2] + dx, gt_box[3] + dy],
            )
        })
        .collect();

    let matches = match_all_frames(&dets, &frames, 0.3).unwrap();
    let matched: usize = matches.iter().map(|m| m.tp()).sum();
    assert_eq!(matched, n as usize, "every jittered detection should match");

    let mut tracklets = build_tracklets(&frames, 0.5).unwrap();
    assert_eq!(tracklets.len(), 1);
    attach_detections(&mut tracklets, &matches).unwrap();
    let report = stability_report(&tracklets);
    let measured = report.translation_error.value;
    let expected = 2.0 * sigma;
    assert!(
        (measured - expected).abs() <= 0.05 * expected,
        "translation error {measured} outside {expected} +/- 5%"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 04 PASS: translation error {measured:.6} vs expected {expected:.2} (+/- 5%), {elapsed:?}"
    );
}

// --- criterion 5: fragmentation known answers ---

#[test]
fn criterion_05_fragmentation_known_patterns() {
    let cases: [(&[bool], f64); 3] = [
        (&[true, false, true, false, true], 1.0),
        (&[true, true, false, false, true], 0.5),
        (&[true, true, true, true, true], 0.0),
    ];
    let b = [0.4, 0.4, 0.6, 0.6];
    for (pattern, expected) in cases {
        let frames: Vec<GroundTruthFrame> = (0..pattern.len() as u64)
            .map(|f| gt_frame("v", f, vec![gt_object("diver", b)]))
            .collect();
        let dets: Vec<Detection> = pattern
            .iter()
            .enumerate()
            .filter(|(_, &detected)| detected)
            .map(|(f, _)| detection("v", f as u64, "diver", 0.9, b))
            .collect();
        let matches = match_all_frames(&dets, &frames, 0.5).unwrap();
        let mut tracklets = build_tracklets(&frames, 0.5).unwrap();
        attach_detections(&mut tracklets, &matches).unwrap();
        let report = stability_report(&tracklets);
        assert_eq!(report.per_tracklet.len(), 1);
        assert_eq!(
            report.per_tracklet[0].fragmentation,
            Some(expected),
            "pattern {pattern:?}"
        );
    }
    println!("criterion 05 PASS: flip patterns give fragmentation 1.0, 0.5, 0.0 exactly");
}

// --- criterion 6: tracklet partition and per-step optimal linking ---

/// Exhaustive best link assignment between one frame's boxes and the
/// next: maximum link count, then maximum total IOU. Box counts are kept
/// at two or below so full enumeration is trivial.
fn best_link_assignment(
    prev: &[(&str, BBox)],
    cur: &[(&str, BBox)],
    link_iou: f64,
) -> (usize, f64) {
    fn recurse(
        prev: &[(&str, BBox)],
        cur: &[(&str, BBox)],
        link_iou: f64,
        ci: usize,
        used: &mut Vec<bool>,
    ) -> (usize, f64) {
        if ci == cur.len() {
            return (0, 0.0);
        }
        // option: leave cur[ci] unlinked
        let mut best = recurse(prev, cur, link_iou, ci + 1, used);
        for pi in 0..prev.len() {
            if used[pi] || !classes_match(prev[pi].0, cur[ci].0) {
                continue;
            }
            let iou = prev[pi].1.iou(&cur[ci].1);
            if iou < link_iou {
                continue;
            }
            used[pi] = true;
            let (c, s) = recurse(prev, cur, link_iou, ci + 1, used);
            used[pi] = false;
            let cand = (c + 1, s + iou);
            if cand.0 > best.0 || (cand.0 == best.0 && cand.1 > best.1) {
                best = cand;
            }
        }
        best
    }
    let mut used = vec![false; prev.len()];
    recurse(prev, cur, link_iou, 0, &mut used)
}

/// Two drifting objects with independent lifespans; at most two boxes per
/// frame so the exhaustive oracle stays exhaustive.
fn two_slot_video(rng: &mut ChaCha8Rng, video: &str) -> Vec<GroundTruthFrame> {
    let n_frames = rng.gen_range(3..=8);
    let mut slots = Vec::new();
    for s in 0..2 {
        let born = rng.gen_range(0..n_frames);
        let dies = rng.gen_range(born..=n_frames);
        let cx: f64 = 0.25 + 0.5 * s as f64 + rng.gen_range(-0.05..0.05);
        let cy: f64 = rng.gen_range(0.3..0.7);
        let class = if rng.gen_bool(0.5) { "diver" } else { "fish" };
        slots.push((born, dies, cx, cy, class));
    }
    (0..n_frames)
        .map(|f| {
            let objects = slots
                .iter_mut()
                .filter(|(born, dies, ..)| *born <= f && f < *dies)
                .map(|(_, _, cx, cy, class)| {
                    *cx = (*cx + rng.gen_range(-0.01..0.01)).clamp(0.1, 0.9);
                    *cy = (*cy + rng.gen_range(-0.01..0.01)).clamp(0.1, 0.9);
                    gt_object(class, [*cx - 0.075, *cy - 0.075, *cx + 0.075, *cy + 0.075])
                })
                .collect();
            gt_frame(video, f, objects)
        })
        .collect()
}

#[test]
fn criterion_06_tracklet_partition_and_optimal_linking() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let link_iou = 0.5;
    let mut total_links_checked = 0usize;
    for v in 0..200 {
        let video = format!("video{v:03}");
        let frames = two_slot_video(&mut rng, &video);
        let total_boxes: usize = frames.iter().map(|f| f.objects.len()).sum();
        let tracklets = build_tracklets(&frames, link_iou).unwrap();

        // partition: every ground-truth slot appears in exactly one tracklet
        let sum_lengths: usize = tracklets.iter().map(|t| t.len()).sum();
        assert_eq!(sum_lengths, total_boxes, "{video}: tracklet lengths must sum to box count");
        let mut slots: Vec<(u64, usize)> = tracklets
            .iter()
            .flat_map(|t| t.frames.iter().map(|tf| (tf.frame_index, tf.gt_index)))
            .collect();
        slots.sort_unstable();
        let mut expected: Vec<(u64, usize)> = frames
            .iter()
            .flat_map(|f| (0..f.objects.len()).map(move |gi| (f.frame_index, gi)))
            .collect();
        expected.sort_unstable();
        assert_eq!(slots, expected, "{video}: tracklets must cover each box exactly once");

        // per consecutive frame pair, the greedy links must achieve the
        // exhaustive optimum (count, then total IOU)
        let mut tracklet_of: std::collections::HashMap<(u64, usize), usize> =
            std::collections::HashMap::new();
        for (ti, t) in tracklets.iter().enumerate() {
            for tf in &t.frames {
                tracklet_of.insert((tf.frame_index, tf.gt_index), ti);
            }
        }
        for w in frames.windows(2) {
            if w[1].frame_index != w[0].frame_index + 1 {
                continue;
            }
            let prev: Vec<(&str, BBox)> = w[0]
                .objects
                .iter()
                .map(|o| (o.object_class.as_str(), o.bbox))
                .collect();
            let cur: Vec<(&str, BBox)> = w[1]
                .objects
                .iter()
                .map(|o| (o.object_class.as_str(), o.bbox))
                .collect();
            let (best_count, best_sum) = best_link_assignment(&prev, &cur, link_iou);

            let mut got_count = 0usize;
            let mut got_sum = 0.0f64;
            for (gi_cur, o_cur) in w[1].objects.iter().enumerate() {
                for (gi_prev, o_prev) in w[0].objects.iter().enumerate() {
                    if tracklet_of[&(w[0].frame_index, gi_prev)]
                        == tracklet_of[&(w[1].frame_index, gi_cur)]
                    {
                        got_count += 1;
                        got_sum += o_prev.bbox.iou(&o_cur.bbox);
                    }
                }
            }
            assert_eq!(got_count, best_count, "{video} frame {}", w[1].frame_index);
            assert!(
                (got_sum - best_sum).abs() <= 1e-9,
                "{video} frame {}: greedy IOU sum {got_sum} vs optimal {best_sum}",
                w[1].frame_index
            );
            total_links_checked += best_count;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "criterion 06 PASS: 200 videos, lengths partition the boxes, {total_links_checked} links match the exhaustive optimum, {elapsed:?}"
    );
}

// --- criterion 7: analytic IOU against a rasterized oracle ---

/// Count of cell centers (i + 0.5) / cells inside [lo, hi], closed.
fn cells_inside(lo: f64, hi: f64, cells: u32) -> u64 {
    let n = cells as f64;
    let first = (lo * n - 0.5).ceil().max(0.0) as i64;
    let last = (hi * n - 0.5).floor().min(n - 1.0) as i64;
    (last - first + 1).max(0) as u64
}

/// IOU by counting raster cell centers inside each box on a grid. Counts
/// are separable per axis, so the full count is a product.
fn raster_iou(a: &BBox, b: &BBox, cells: u32) -> f64 {
    let count = |bb: &BBox| {
        cells_inside(bb.x_min(), bb.x_max(), cells) * cells_inside(bb.y_min(), bb.y_max(), cells)
    };
    let ix_lo = a.x_min().max(b.x_min());
    let ix_hi = a.x_max().min(b.x_max());
    let iy_lo = a.y_min().max(b.y_min());
    let iy_hi = a.y_max().min(b.y_max());
    let inter = if ix_lo < ix_hi && iy_lo < iy_hi {
        cells_inside(ix_lo, ix_hi, cells) * cells_inside(iy_lo, iy_hi, cells)
    } else {
        0
    };
    let union = count(a) + count(b) - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[test]
fn criterion_07_analytic_iou_matches_raster_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let cells = 1000u32;
    // corners on the raster's own grid lines keep the cell count an exact
    // measure of length, so the oracle carries no discretization error of
    // its own and the tolerance only absorbs float rounding
    let grid_box = |rng: &mut ChaCha8Rng, near: Option<&[i64; 4]>| -> ([i64; 4], BBox) {
        let (x0, y0) = match near {
            Some(b) => (
                (b[0] + rng.gen_range(-100..=100)).clamp(0, 800),
                (b[1] + rng.gen_range(-100..=100)).clamp(0, 800),
            ),
            None => (rng.gen_range(0..800), rng.gen_range(0..800)),
        };
        let w = rng.gen_range(50..=199);
        let h = rng.gen_range(50..=199);
        let c = [x0, y0, (x0 + w).min(1000), (y0 + h).min(1000)];
        let b = BBox::new(
            c[0] as f64 / 1000.0,
            c[1] as f64 / 1000.0,
            c[2] as f64 / 1000.0,
            c[3] as f64 / 1000.0,
        )
        .unwrap();
        (c, b)
    };
    let mut max_delta: f64 = 0.0;
    let mut overlapping = 0usize;
    for _ in 0..1000 {
        let (ca, a) = grid_box(&mut rng, None);
        // bias the second box toward the first so intersections are common
        let (_, b) = if rng.gen_bool(0.8) {
            grid_box(&mut rng, Some(&ca))
        } else {
            grid_box(&mut rng, None)
        };
        let analytic = a.iou(&b);
        let raster = raster_iou(&a, &b, cells);
        let delta = (analytic - raster).abs();
        max_delta = max_delta.max(delta);
        if analytic > 0.0 {
            overlapping += 1;
        }
        assert!(
            delta <= 5e-3,
            "analytic {analytic} vs raster {raster} (delta {delta:.3e})"
        );
    }
    assert!(overlapping > 400, "want plenty of overlapping pairs, got {overlapping}");
    println!(
        "criterion 07 PASS: 1000 pairs ({overlapping} overlapping), max |analytic - raster| = {max_delta:.3e}"
    );
}

// --- criterion 8: matching conservation and exhaustive agreement ---

/// Maximum achievable true-positive count over all one-to-one
/// assignments, by full enumeration.
fn exhaustive_tp_count(dets: &[Detection], frame: &GroundTruthFrame, thr: f64) -> usize {
    fn recurse(
        dets: &[Detection],
        frame: &GroundTruthFrame,
        thr: f64,
        di: usize,
        claimed: &mut Vec<bool>,
    ) -> usize {
        if di == dets.len() {
            return 0;
        }
        let mut best = recurse(dets, frame, thr, di + 1, claimed);
        for gi in 0..frame.objects.len() {
            if claimed[gi] {
                continue;
            }
            let obj = &frame.objects[gi];
            if !classes_match(&obj.object_class, &dets[di].object_class) {
                continue;
            }
            if dets[di].bbox.iou(&obj.bbox) < thr {
                continue;
            }
            claimed[gi] = true;
            best = best.max(1 + recurse(dets, frame, thr, di + 1, claimed));
            claimed[gi] = false;
        }
        best
    }
    let mut claimed = vec![false; frame.objects.len()];
    recurse(dets, frame, thr, 0, &mut claimed)
}

/// A fuzzed frame: palette ground truth plus detections that are mostly
/// jittered copies of the ground truth, with a few strays.
fn fuzzed_frame(rng: &mut ChaCha8Rng, max_gt: usize, max_det: usize) -> (GroundTruthFrame, Vec<Detection>) {
    let classes = ["diver", "fish"];
    let n_gt = rng.gen_range(0..=max_gt);
    let mut objects = Vec::new();
    for _ in 0..n_gt {
        let class = classes[rng.gen_range(0..classes.len())];
        objects.push(gt_object(class, eighth_grid_box(rng)));
    }
    let frame = gt_frame("v", 0, objects);
    let n_det = rng.gen_range(0..=max_det);
    let dets: Vec<Detection> = (0..n_det)
        .map(|_| {
            let conf = rng.gen_range(0.05..0.99);
            if !frame.objects.is_empty() && rng.gen_bool(0.7) {
                let src = &frame.objects[rng.gen_range(0..frame.objects.len())];
                let jitter = rng.gen_range(-0.02..0.02);
                let b = [
                    (src.bbox.x_min() + jitter).clamp(0.0, 0.98),
                    src.bbox.y_min(),
                    (src.bbox.x_max() + jitter).clamp(0.02, 1.0),
                    src.bbox.y_max(),
                ];
                detection("v", 0, &src.object_class, conf, b)
            } else {
                let class = classes[rng.gen_range(0..classes.len())];
                detection("v", 0, class, conf, eighth_grid_box(rng))
            }
        })
        .collect();
    (frame, dets)
}

#[test]
fn criterion_08_matching_conservation_and_exhaustive_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let thr = 0.5;

    // conservation identities on larger fuzzed frames
    for _ in 0..400 {
        let (frame, dets) = fuzzed_frame(&mut rng, 4, 4);
        let result = match_frame(&dets, &frame, thr).unwrap();
        assert_eq!(result.tp() + result.fp(), dets.len());
        assert_eq!(result.tp() + result.false_negatives(), frame.objects.len());
        let mut claimed: Vec<usize> = result.tp_pairs.iter().map(|p| p.gt_index).collect();
        claimed.sort_unstable();
        claimed.dedup();
        assert_eq!(claimed.len(), result.tp(), "each box claimed at most once");
    }

    // greedy agrees with the exhaustive optimum on small frames
    let mut checked = 0usize;
    for _ in 0..600 {
        let (frame, dets) = fuzzed_frame(&mut rng, 2, 2);
        let greedy = match_frame(&dets, &frame, thr).unwrap().tp();
        let optimal = exhaustive_tp_count(&dets, &frame, thr);
        assert_eq!(greedy, optimal, "greedy {greedy} vs exhaustive {optimal}");
        checked += 1;
    }
    println!(
        "criterion 08 PASS: conservation on 400 fuzzed frames, greedy = exhaustive optimum on {checked} small frames"
    );
}

// --- criterion 9: format round-trips and golden parses ---

#[test]
fn criterion_09_yolo_round_trip_and_voc_golden_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let table = ClassTable::new(vec!["diver".into(), "fish".into(), "buoy".into()]).unwrap();
    let mut max_delta: f64 = 0.0;
    for i in 0..1000u64 {
        let n = rng.gen_range(0..=5);
        let objects = (0..n)
            .map(|_| {
                // margins keep six-decimal rounding from pushing a corner
                // outside the frame or collapsing a side
                let w = rng.gen_range(0.002..0.5);
                let h = rng.gen_range(0.002..0.5);
                let cx = rng.gen_range(w / 2.0 + 0.001..0.999 - w / 2.0);
                let cy = rng.gen_range(h / 2.0 + 0.001..0.999 - h / 2.0);
                let class = table.name(rng.gen_range(0..table.len())).unwrap();
                gt_object(class, [cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0])
            })
            .collect();
        let frame = gt_frame("vid", i, objects);
        let text = write_yolo_labels(&frame, &table).unwrap();
        let parsed = parse_yolo_labels(&text, &table, FrameIdentity::new("vid", i)).unwrap();
        assert_eq!(parsed.objects.len(), frame.objects.len());
        for (orig, round) in frame.objects.iter().zip(&parsed.objects) {
            assert!(classes_match(&orig.object_class, &round.object_class));
            let o = orig.bbox.corners();
            let r = [round.bbox.x_min, round.bbox.y_min, round.bbox.x_max, round.bbox.y_max];
            for (a, b) in o.iter().zip(&r) {
                let delta = (a - b).abs();
                max_delta = max_delta.max(delta);
                assert!(delta <= 1e-6, "coordinate drift {delta:.3e}");
            }
        }
    }

    // golden VOC document with hand-expected structure
    let text = read_file(&fixture("corpus/voc/poolA_000002.xml")).unwrap();
    let frame = parse_voc(&text, None, None).unwrap();
    assert_eq!(frame.video_id, "poolA");
    assert_eq!(frame.frame_index, 2);
    assert_eq!(frame.objects.len(), 3);
    let expected = [
        ("diver", [77.0 / 640.0, 48.0 / 480.0, 141.0 / 640.0, 96.0 / 480.0]),
        ("buoy", [0.5, 0.5, 0.7, 0.75]),
        ("diver", [0.6, 0.6, 0.8, 0.9]),
    ];
    for (obj, (class, b)) in frame.objects.iter().zip(&expected) {
        assert_eq!(&obj.object_class, class);
        assert_eq!(obj.bbox.x_min, b[0]);
        assert_eq!(obj.bbox.y_min, b[1]);
        assert_eq!(obj.bbox.x_max, b[2]);
        assert_eq!(obj.bbox.y_max, b[3]);
    }
    println!(
        "criterion 09 PASS: 1000 label round-trips, max coordinate drift {max_delta:.3e}; golden voc parse exact"
    );
}

// --- criterion 10: failure categories partition the false negatives ---

#[test]
fn criterion_10_failure_taxonomy_partitions_false_negatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let eps = DEFAULT_EDGE_EPS;
    let mut total_fns = 0usize;
    for _ in 0..300 {
        let (mut frame, dets) = fuzzed_frame(&mut rng, 5, 3);
        // push some boxes to the frame edge so every category occurs
        for obj in frame.objects.iter_mut() {
            if rng.gen_bool(0.3) {
                let b = obj.bbox;
                obj.bbox = match rng.gen_range(0..4) {
                    0 => BBox::new(0.0, b.y_min(), b.x_max(), b.y_max()).unwrap(),
                    1 => BBox::new(b.x_min(), 0.0, b.x_max(), b.y_max()).unwrap(),
                    2 => BBox::new(b.x_min(), b.y_min(), 1.0, b.y_max()).unwrap(),
                    _ => BBox::new(b.x_min(), b.y_min(), b.x_max(), 1.0).unwrap(),
                };
            }
        }
        let frames = vec![frame];
        let matches = vec![match_frame(&dets, &frames[0], 0.5).unwrap()];
        let breakdown = classify_false_negatives(&matches, &frames, eps).unwrap();

        // exact partition of the false-negative set
        let mut fn_set: Vec<usize> = matches[0].fn_gt_indices.clone();
        fn_set.sort_unstable();
        let mut recorded: Vec<usize> = breakdown.records.iter().map(|r| r.gt_index).collect();
        recorded.sort_unstable();
        assert_eq!(fn_set, recorded, "records must cover each miss exactly once");
        assert_eq!(breakdown.total_false_negatives, fn_set.len());
        assert_eq!(breakdown.counts.total(), fn_set.len());

        // every category label matches a direct re-evaluation of the
        // defining predicates
        for record in &breakdown.records {
            let b = &frames[0].objects[record.gt_index].bbox;
            let edge = b.x_min() <= eps
                || b.y_min() <= eps
                || b.x_max() >= 1.0 - eps
                || b.y_max() >= 1.0 - eps;
            let occluded = frames[0]
                .objects
                .iter()
                .enumerate()
                .any(|(gi, o)| gi != record.gt_index && overlap_area(b, &o.bbox) > 0.0);
            let expected = match (edge, occluded) {
                (true, true) => FailureCategory::Both,
                (true, false) => FailureCategory::EdgeOfFrame,
                (false, true) => FailureCategory::Occluded,
                (false, false) => FailureCategory::Other,
            };
            assert_eq!(record.category, expected);
        }

        // marginal tallies are consistent with the disjoint categories
        assert_eq!(
            breakdown.marginal_edge_of_frame,
            breakdown.counts.edge_of_frame + breakdown.counts.both
        );
        assert_eq!(
            breakdown.marginal_occluded,
            breakdown.counts.occluded + breakdown.counts.both
        );
        total_fns += fn_set.len();
    }
    assert!(total_fns > 200, "fuzz should produce a healthy miss count, got {total_fns}");
    println!("criterion 10 PASS: categories partition {total_fns} misses across 300 fuzzed frames");
}

// --- criterion 11: byte-identical reports ---

#[test]
fn criterion_11_repeated_runs_are_byte_identical_modulo_timestamp() {
    let mut config = RunConfig::new(
        fixture("corpus/voc"),
        GtFormat::Voc,
        fixture("corpus/detections.jsonl"),
    );
    config.manifest = Some(fixture("corpus/manifest.json"));
    config.confidence = ConfidenceMode::Auto;

    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    write_outputs(&run_evaluate(&config).unwrap(), &out_a).unwrap();
    write_outputs(&run_evaluate(&config).unwrap(), &out_b).unwrap();

    for name in ["report.json", "pr_curve.csv", "stability_per_tracklet.csv", "failures.csv"] {
        let a = std::fs::read_to_string(out_a.join(name)).unwrap();
        let b = std::fs::read_to_string(out_b.join(name)).unwrap();
        if name == "report.json" {
            let strip = |s: &str| {
                s.lines()
                    .filter(|l| !l.contains("\"generated_at\""))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            assert_eq!(strip(&a), strip(&b), "{name} must be byte-identical modulo timestamp");
        } else {
            assert_eq!(a, b, "{name} must be byte-identical");
        }
    }

    // sanity-check the corpus numbers themselves while we are here
    let output = run_evaluate(&config).unwrap();
    let eval = &output.report.evaluation;
    assert!((eval.ap50 - 14.0 / 19.0).abs() < 1e-12);
    assert_eq!(eval.true_positives, 14);
    assert_eq!(eval.false_positives, 0);
    assert_eq!(eval.false_negatives, 5);
    assert_eq!(output.report.failures.counts.edge_of_frame, 1);
    assert_eq!(output.report.failures.counts.occluded, 2);
    assert_eq!(output.report.failures.counts.both, 0);
    assert_eq!(output.report.failures.counts.other, 2);
    println!("criterion 11 PASS: two runs on the bundled corpus agree byte-for-byte (timestamp aside)");
}
