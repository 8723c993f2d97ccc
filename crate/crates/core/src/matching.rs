//! Detection-to-ground-truth matching within a single frame.
//!
//! Greedy, confidence-ordered, one-to-one: detections are processed from
//! most to least confident, and each claims the not-yet-claimed ground
//! truth of the same class with the highest overlap, provided that overlap
//! clears the threshold. Greedy matching can assign one fewer pair than an
//! exhaustive search in rigged geometries, but it is the convention the
//! rest of the detection literature scores against and it keeps every
//! match explainable by one local rule.
//!
//! All orderings are total, so a frame always matches the same way:
//! confidence ties are broken toward the detection with the higher best
//! overlap anywhere in the frame, then input order; overlap ties between
//! candidate ground truths resolve to the lower index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{same_class, Detection, GroundTruthFrame};

/// A matched detection with the ground truth it claimed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpPair {
    pub detection: Detection,
    /// Index into the frame's object list.
    pub gt_index: usize,
    pub iou: f64,
}

/// Outcome of matching one frame at a fixed confidence cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMatchResult {
    pub video_id: String,
    pub frame_index: u64,
    /// In processing order (most confident first).
    pub tp_pairs: Vec<TpPair>,
    /// In processing order.
    pub fp_detections: Vec<Detection>,
    /// Ascending ground-truth indices that no detection claimed.
    pub fn_gt_indices: Vec<usize>,
}

impl FrameMatchResult {
    pub fn tp(&self) -> usize {
        self.tp_pairs.len()
    }

    pub fn fp(&self) -> usize {
        self.fp_detections.len()
    }

    pub fn false_negatives(&self) -> usize {
        self.fn_gt_indices.len()
    }
}

/// Per-frame greedy claims, shared by [`match_frame`] and the
/// precision/recall sweep.
#[derive(Debug, Clone)]
pub(crate) struct FrameClaims {
    /// Detection indices in processing order.
    pub order: Vec<usize>,
    /// For each entry of `order`: the claimed ground-truth index and its
    /// overlap, or `None` for a false positive.
    pub claims: Vec<Option<(usize, f64)>>,
}

pub(crate) fn greedy_frame_claims(
    detections: &[Detection],
    frame: &GroundTruthFrame,
    iou_threshold: f64,
) -> FrameClaims {
    // Static best overlap per detection, against every ground truth of its
    // class. Used only to order confidence ties, so it deliberately ignores
    // claiming.
    let best_anywhere: Vec<f64> = detections
        .iter()
        .map(|d| {
            frame
                .objects
                .iter()
                .filter(|g| same_class(&g.object_class, &d.object_class))
                .map(|g| g.bbox.iou(&d.bbox))
                .fold(0.0, f64::max)
        })
        .collect();

    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .confidence
            .total_cmp(&detections[a].confidence)
            .then(best_anywhere[b].total_cmp(&best_anywhere[a]))
            .then(a.cmp(&b))
    });

    let mut claimed = vec![false; frame.objects.len()];
    let claims = order
        .iter()
        .map(|&di| {
            let detection = &detections[di];
            let mut best: Option<(usize, f64)> = None;
            for (gi, gt) in frame.objects.iter().enumerate() {
                if claimed[gi] || !same_class(&gt.object_class, &detection.object_class) {
                    continue;
                }
                let iou = gt.bbox.iou(&detection.bbox);
                if iou < iou_threshold {
                    continue;
                }
                // Strict > keeps the lowest index on ties.
                if best.map_or(true, |(_, b)| iou > b) {
                    best = Some((gi, iou));
                }
            }
            if let Some((gi, _)) = best {
                claimed[gi] = true;
            }
            best
        })
        .collect();

    FrameClaims { order, claims }
}

/// Match one frame's detections against its ground truth.
///
/// Every detection must carry this frame's identity; mixing frames is a
/// caller bug and is rejected rather than silently mis-scored.
pub fn match_frame(
    detections: &[Detection],
    frame: &GroundTruthFrame,
    iou_threshold: f64,
) -> Result<FrameMatchResult> {
    for d in detections {
        if d.video_id != frame.video_id || d.frame_index != frame.frame_index {
            return Err(Error::MixedFrame {
                det_video: d.video_id.clone(),
                det_frame: d.frame_index,
                frame_video: frame.video_id.clone(),
                frame_index: frame.frame_index,
            });
        }
    }

    let FrameClaims { order, claims } = greedy_frame_claims(detections, frame, iou_threshold);
    let mut tp_pairs = Vec::new();
    let mut fp_detections = Vec::new();
    let mut claimed = vec![false; frame.objects.len()];
    for (&di, claim) in order.iter().zip(&claims) {
        match claim {
            Some((gi, iou)) => {
                claimed[*gi] = true;
                tp_pairs.push(TpPair {
                    detection: detections[di].clone(),
                    gt_index: *gi,
                    iou: *iou,
                });
            }
            None => fp_detections.push(detections[di].clone()),
        }
    }
    let fn_gt_indices = (0..frame.objects.len()).filter(|&i| !claimed[i]).collect();

    Ok(FrameMatchResult {
        video_id: frame.video_id.clone(),
        frame_index: frame.frame_index,
        tp_pairs,
        fp_detections,
        fn_gt_indices,
    })
}
