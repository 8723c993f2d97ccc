//! Precision/recall machinery: ranked curves, the AP family, mean overlap,
//! and operating-threshold selection.
//!
//! Average precision follows the recall-increase-weighted mean exactly:
//! AP = Σ (R_k − R_{k−1}) · P_k down the ranked detection list, with no
//! interpolation. Interpolated variants exist for comparing against tools
//! that smooth the curve, but they are opt-in and labeled in the report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{same_class, Detection, GroundTruthFrame};
use crate::matching::{greedy_frame_claims, FrameMatchResult};

/// One point of a ranked precision/recall sweep: cumulative precision and
/// recall after admitting every detection down to `confidence`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub confidence: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// CSV export for plotting: `confidence,precision,recall`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["confidence", "precision", "recall"])
            .map_err(csv_err)?;
        for p in &self.points {
            w.write_record([
                format!("{}", p.confidence),
                format!("{}", p.precision),
                format!("{}", p.recall),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Sweep the confidence threshold down the ranked detection list.
///
/// Detections are ranked by descending confidence across the whole dataset
/// and matched greedily within their frames in rank order. Confidence ties
/// resolve by the same rule as single-frame matching (better-overlapping
/// detection first, then input order), and across frames by video id and
/// frame index, so the curve is a pure function of the inputs.
///
/// Detections pointing at frames absent from the ground truth are counted
/// as false positives; recall's denominator is the total ground-truth
/// object count, which must be nonzero.
pub fn pr_curve(
    detections: &[Detection],
    frames: &[GroundTruthFrame],
    match_iou: f64,
) -> Result<PrCurve> {
    let gt_total: usize = frames.iter().map(|f| f.objects.len()).sum();
    if gt_total == 0 {
        return Err(Error::ZeroGroundTruth);
    }

    use std::collections::BTreeMap;
    let mut by_frame: BTreeMap<(&str, u64), Vec<usize>> = BTreeMap::new();
    for (i, d) in detections.iter().enumerate() {
        by_frame
            .entry((d.video_id.as_str(), d.frame_index))
            .or_default()
            .push(i);
    }

    // (confidence, video, frame, position in frame order, tp)
    let mut records: Vec<(f64, &str, u64, usize, bool)> = Vec::with_capacity(detections.len());
    let empty_frame = |video_id: &str, frame_index: u64| GroundTruthFrame {
        video_id: video_id.to_string(),
        frame_index,
        objects: Vec::new(),
    };
    let mut seen_keys = std::collections::BTreeSet::new();
    for frame in frames {
        let key = (frame.video_id.as_str(), frame.frame_index);
        seen_keys.insert(key);
        let Some(indices) = by_frame.get(&key) else {
            continue;
        };
        push_frame_records(detections, indices, frame, match_iou, &mut records);
    }
    for (key, indices) in &by_frame {
        if !seen_keys.contains(key) {
            let frame = empty_frame(key.0, key.1);
            push_frame_records(detections, indices, &frame, match_iou, &mut records);
        }
    }

    records.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.cmp(b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });

    let mut points = Vec::with_capacity(records.len());
    let mut tp = 0usize;
    for (k, record) in records.iter().enumerate() {
        if record.4 {
            tp += 1;
        }
        points.push(PrPoint {
            confidence: record.0,
            precision: tp as f64 / (k + 1) as f64,
            recall: tp as f64 / gt_total as f64,
        });
    }
    Ok(PrCurve { points })
}

fn push_frame_records<'a>(
    detections: &'a [Detection],
    indices: &[usize],
    frame: &GroundTruthFrame,
    match_iou: f64,
    records: &mut Vec<(f64, &'a str, u64, usize, bool)>,
) {
    let subset: Vec<Detection> = indices.iter().map(|&i| detections[i].clone()).collect();
    let claims = greedy_frame_claims(&subset, frame, match_iou);
    for (pos, (&local, claim)) in claims.order.iter().zip(&claims.claims).enumerate() {
        let d = &detections[indices[local]];
        records.push((d.confidence, d.video_id.as_str(), d.frame_index, pos, claim.is_some()));
    }
}

/// How to summarize a curve into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApInterpolation {
    /// Recall-increase-weighted mean of precision, the native definition.
    None,
    /// Mean of interpolated precision at recalls 0.0, 0.1, .., 1.0.
    ElevenPoint,
    /// Mean of interpolated precision at recalls 0.00, 0.01, .., 1.00.
    Coco101,
}

/// AP with no interpolation: Σ (R_k − R_{k−1}) · P_k, R_0 = 0.
pub fn average_precision(curve: &PrCurve) -> f64 {
    let mut ap = 0.0;
    let mut previous_recall = 0.0;
    for p in &curve.points {
        ap += (p.recall - previous_recall) * p.precision;
        previous_recall = p.recall;
    }
    ap
}

pub fn average_precision_with(curve: &PrCurve, interpolation: ApInterpolation) -> f64 {
    match interpolation {
        ApInterpolation::None => average_precision(curve),
        ApInterpolation::ElevenPoint => interpolated_ap(curve, 11),
        ApInterpolation::Coco101 => interpolated_ap(curve, 101),
    }
}

/// Mean over `samples` evenly spaced recall levels of the best precision at
/// or beyond each level.
fn interpolated_ap(curve: &PrCurve, samples: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..samples {
        let level = i as f64 / (samples - 1) as f64;
        let best = curve
            .points
            .iter()
            .filter(|p| p.recall >= level)
            .map(|p| p.precision)
            .fold(0.0, f64::max);
        total += best;
    }
    total / samples as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApAtThreshold {
    pub iou_threshold: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApSuite {
    pub ap50: f64,
    pub ap75: f64,
    /// Mean AP over the ten thresholds 0.50, 0.55, .., 0.95.
    pub ap_range: f64,
    pub per_threshold: Vec<ApAtThreshold>,
}

/// The ten-threshold grid, written as exact hundredths so a box pair whose
/// overlap is a round decimal lands on the threshold bit-exactly.
pub fn iou_threshold_grid() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// AP at 0.50 and 0.75 plus the grid mean. The per-threshold sweeps are
/// independent and run in parallel.
pub fn ap_suite(
    detections: &[Detection],
    frames: &[GroundTruthFrame],
    interpolation: ApInterpolation,
) -> Result<ApSuite> {
    let grid = iou_threshold_grid();
    let per_threshold: Vec<ApAtThreshold> = grid
        .par_iter()
        .map(|&iou_threshold| {
            pr_curve(detections, frames, iou_threshold).map(|curve| ApAtThreshold {
                iou_threshold,
                ap: average_precision_with(&curve, interpolation),
            })
        })
        .collect::<Result<_>>()?;
    let ap_range = per_threshold.iter().map(|t| t.ap).sum::<f64>() / per_threshold.len() as f64;
    Ok(ApSuite {
        ap50: per_threshold[0].ap,
        ap75: per_threshold[5].ap,
        ap_range,
        per_threshold,
    })
}

/// Which boxes the reported mean overlap averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanIouMode {
    /// Mean over matched (true-positive) pairs at the operating threshold.
    TruePositives,
    /// Mean over ground truths of each one's best same-class overlap,
    /// counting undetected objects as zero.
    BestPerGroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanIou {
    pub value: f64,
    /// False when the sample set was empty; `value` is then 0 by convention.
    pub defined: bool,
    pub mode: MeanIouMode,
    pub sample_count: usize,
}

/// Mean overlap across all matched pairs.
pub fn mean_iou(matches: &[FrameMatchResult]) -> MeanIou {
    let ious: Vec<f64> = matches
        .iter()
        .flat_map(|m| m.tp_pairs.iter().map(|p| p.iou))
        .collect();
    MeanIou {
        value: if ious.is_empty() {
            0.0
        } else {
            ious.iter().sum::<f64>() / ious.len() as f64
        },
        defined: !ious.is_empty(),
        mode: MeanIouMode::TruePositives,
        sample_count: ious.len(),
    }
}

/// Alternative reading: every ground truth contributes its best same-class
/// overlap among the detections kept at the operating threshold, zero when
/// nothing overlaps it.
pub fn mean_iou_best_per_gt(
    detections: &[Detection],
    frames: &[GroundTruthFrame],
) -> MeanIou {
    use std::collections::BTreeMap;
    let mut by_frame: BTreeMap<(&str, u64), Vec<&Detection>> = BTreeMap::new();
    for d in detections {
        by_frame
            .entry((d.video_id.as_str(), d.frame_index))
            .or_default()
            .push(d);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for frame in frames {
        let dets = by_frame
            .get(&(frame.video_id.as_str(), frame.frame_index))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        for gt in &frame.objects {
            let best = dets
                .iter()
                .filter(|d| same_class(&d.object_class, &gt.object_class))
                .map(|d| gt.bbox.iou(&d.bbox))
                .fold(0.0, f64::max);
            total += best;
            count += 1;
        }
    }
    MeanIou {
        value: if count == 0 { 0.0 } else { total / count as f64 },
        defined: count > 0,
        mode: MeanIouMode::BestPerGroundTruth,
        sample_count: count,
    }
}

/// The operating point chosen from a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSelection {
    pub confidence: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when every point scored F1 = 0; the selection then falls back
    /// to the most confident point rather than meaning anything.
    pub degenerate: bool,
}

/// Pick the confidence maximizing F1 = 2PR/(P+R). Ties go to the higher
/// confidence; an all-zero curve returns its most confident point, flagged.
pub fn select_confidence_threshold(curve: &PrCurve) -> Result<ThresholdSelection> {
    let first = curve.points.first().ok_or(Error::EmptyCurve)?;
    let f1_of = |p: &PrPoint| {
        let denom = p.precision + p.recall;
        if denom > 0.0 {
            2.0 * p.precision * p.recall / denom
        } else {
            0.0
        }
    };
    // Points run from high confidence to low, so strict > keeps the most
    // confident point on ties.
    let mut best = (first, f1_of(first));
    for p in &curve.points[1..] {
        let f1 = f1_of(p);
        if f1 > best.1 {
            best = (p, f1);
        }
    }
    let (point, f1) = best;
    Ok(ThresholdSelection {
        confidence: point.confidence,
        precision: point.precision,
        recall: point.recall,
        f1,
        degenerate: f1 == 0.0,
    })
}
