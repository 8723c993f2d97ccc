//! Why ground truths get missed.
//!
//! Each false negative is sorted into one of four exclusive buckets: its
//! box touches the frame edge (the object is partly out of view), it
//! overlaps another ground truth (occlusion), both at once, or neither.
//! The exclusive partition keeps the fractions summing to one; the
//! marginal edge/occlusion totals are also reported for comparison with
//! tallies that double-count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::ingest::GroundTruthFrame;
use crate::matching::FrameMatchResult;

pub const DEFAULT_EDGE_EPS: f64 = 1e-6;

/// True when the box touches the frame boundary within `eps`. Annotations
/// clamped at ingest sit exactly on the boundary, so the default tolerance
/// only needs to absorb float noise.
pub fn is_edge_of_frame(b: &BBox, eps: f64) -> bool {
    b.x_min().min(b.y_min()) <= eps || b.x_max() >= 1.0 - eps || b.y_max() >= 1.0 - eps
}

/// True when any other ground-truth box in the frame overlaps this one
/// with positive area. Class is irrelevant; occlusion is geometry.
pub fn is_occluded(b: &BBox, others: &[BBox]) -> bool {
    others.iter().any(|o| b.iou(o) > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    EdgeOfFrame,
    Occluded,
    Both,
    Other,
}

impl FailureCategory {
    pub fn label(&self) -> &'static str {
        match self {
            FailureCategory::EdgeOfFrame => "edge_of_frame",
            FailureCategory::Occluded => "occluded",
            FailureCategory::Both => "both",
            FailureCategory::Other => "other",
        }
    }
}

/// One categorized false negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub video_id: String,
    pub frame_index: u64,
    pub gt_index: usize,
    pub object_class: String,
    #[serde(rename = "box")]
    pub gt_box: BBox,
    pub category: FailureCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub edge_of_frame: usize,
    pub occluded: usize,
    pub both: usize,
    pub other: usize,
}

impl CategoryCounts {
    pub fn total(&self) -> usize {
        self.edge_of_frame + self.occluded + self.both + self.other
    }

    fn bump(&mut self, category: FailureCategory) {
        match category {
            FailureCategory::EdgeOfFrame => self.edge_of_frame += 1,
            FailureCategory::Occluded => self.occluded += 1,
            FailureCategory::Both => self.both += 1,
            FailureCategory::Other => self.other += 1,
        }
    }
}

/// Exclusive fractions of the FN total; all zero when there are no FNs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryFractions {
    pub edge_of_frame: f64,
    pub occluded: f64,
    pub both: f64,
    pub other: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureBreakdown {
    pub total_false_negatives: usize,
    pub counts: CategoryCounts,
    pub fractions: CategoryFractions,
    /// Non-exclusive totals: every FN touching the edge, every FN
    /// overlapped, regardless of the other condition.
    pub marginal_edge_of_frame: usize,
    pub marginal_occluded: usize,
    pub edge_eps: f64,
    pub per_video: BTreeMap<String, CategoryCounts>,
    pub records: Vec<FailureRecord>,
}

/// Categorize every unmatched ground truth in `matches`.
///
/// `frames` must contain the frame behind each match result; the false
/// negatives are looked up there to recover their boxes and neighbors.
pub fn classify_false_negatives(
    matches: &[FrameMatchResult],
    frames: &[GroundTruthFrame],
    edge_eps: f64,
) -> Result<FailureBreakdown> {
    let by_key: BTreeMap<(&str, u64), &GroundTruthFrame> = frames
        .iter()
        .map(|f| ((f.video_id.as_str(), f.frame_index), f))
        .collect();

    let mut counts = CategoryCounts::default();
    let mut per_video: BTreeMap<String, CategoryCounts> = BTreeMap::new();
    let mut marginal_edge = 0usize;
    let mut marginal_occluded = 0usize;
    let mut records = Vec::new();

    for result in matches {
        if result.fn_gt_indices.is_empty() {
            continue;
        }
        let frame = by_key
            .get(&(result.video_id.as_str(), result.frame_index))
            .ok_or_else(|| Error::UnknownGroundTruth {
                video_id: result.video_id.clone(),
                frame_index: result.frame_index,
                gt_index: result.fn_gt_indices[0],
            })?;
        for &gt_index in &result.fn_gt_indices {
            let object = frame.objects.get(gt_index).ok_or_else(|| Error::UnknownGroundTruth {
                video_id: result.video_id.clone(),
                frame_index: result.frame_index,
                gt_index,
            })?;
            let others: Vec<BBox> = frame
                .objects
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != gt_index)
                .map(|(_, o)| o.bbox)
                .collect();
            let edge = is_edge_of_frame(&object.bbox, edge_eps);
            let occluded = is_occluded(&object.bbox, &others);
            let category = match (edge, occluded) {
                (true, true) => FailureCategory::Both,
                (true, false) => FailureCategory::EdgeOfFrame,
                (false, true) => FailureCategory::Occluded,
                (false, false) => FailureCategory::Other,
            };
            marginal_edge += edge as usize;
            marginal_occluded += occluded as usize;
            counts.bump(category);
            per_video
                .entry(result.video_id.clone())
                .or_default()
                .bump(category);
            records.push(FailureRecord {
                video_id: result.video_id.clone(),
                frame_index: result.frame_index,
                gt_index,
                object_class: object.object_class.clone(),
                gt_box: object.bbox,
                category,
            });
        }
    }

    let total = counts.total();
    let frac = |n: usize| if total > 0 { n as f64 / total as f64 } else { 0.0 };
    Ok(FailureBreakdown {
        total_false_negatives: total,
        fractions: CategoryFractions {
            edge_of_frame: frac(counts.edge_of_frame),
            occluded: frac(counts.occluded),
            both: frac(counts.both),
            other: frac(counts.other),
        },
        counts,
        marginal_edge_of_frame: marginal_edge,
        marginal_occluded,
        edge_eps,
        per_video,
        records,
    })
}

/// Bar-chart-ready CSV: one row per category plus the marginals.
pub fn write_failures_csv<W: std::io::Write>(
    breakdown: &FailureBreakdown,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["category", "count", "fraction"])
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    let rows = [
        ("edge_of_frame", breakdown.counts.edge_of_frame, breakdown.fractions.edge_of_frame),
        ("occluded", breakdown.counts.occluded, breakdown.fractions.occluded),
        ("both", breakdown.counts.both, breakdown.fractions.both),
        ("other", breakdown.counts.other, breakdown.fractions.other),
    ];
    for (label, count, fraction) in rows {
        w.write_record([label.to_string(), count.to_string(), format!("{fraction}")])
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}
