//! Dataset distribution summaries: where boxes sit in the frame, how big
//! they are, and how videos split across tags.
//!
//! Everything here is plot-ready data, not plots. Binning conventions are
//! pinned: a value exactly on a bin boundary lands in the higher bin, and
//! the top edge folds into the last bin.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{GroundTruthFrame, VideoManifest};

pub const DEFAULT_GRID: usize = 50;
pub const DEFAULT_AREA_BINS: usize = 50;

/// Bin index for a normalized value: floor(v·g), clamped so 1.0 stays in
/// the last bin. Boundary values k/g floor to k, the higher bin.
fn grid_bin(v: f64, grid: usize) -> usize {
    ((v * grid as f64).floor() as usize).min(grid - 1)
}

/// Counts of box centers over a g×g grid. `counts[y][x]` is the cell
/// covering x ∈ [x/g, (x+1)/g), y likewise, with the top row/column
/// closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    pub grid: usize,
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

impl Histogram2D {
    pub fn count(&self, x_bin: usize, y_bin: usize) -> u64 {
        self.counts[y_bin][x_bin]
    }

    /// CSV export: `x_bin,y_bin,count`, row-major, zero rows included so
    /// the grid reshapes without guesswork.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x_bin", "y_bin", "count"])
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
        for (y, row) in self.counts.iter().enumerate() {
            for (x, count) in row.iter().enumerate() {
                w.write_record([x.to_string(), y.to_string(), count.to_string()])
                    .map_err(|e| Error::Config(format!("csv: {e}")))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Where box centers fall in the frame.
pub fn centroid_distribution(frames: &[GroundTruthFrame], grid: usize) -> Result<Histogram2D> {
    if grid < 1 {
        return Err(Error::Config("centroid grid must be at least 1".to_string()));
    }
    let mut counts = vec![vec![0u64; grid]; grid];
    let mut total = 0u64;
    for frame in frames {
        for object in &frame.objects {
            let (cx, cy) = object.bbox.center();
            counts[grid_bin(cy, grid)][grid_bin(cx, grid)] += 1;
            total += 1;
        }
    }
    Ok(Histogram2D { grid, counts, total })
}

/// Box-area counts over explicit bin edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram1D {
    /// len = bins + 1, strictly increasing, spanning [0, 1].
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram1D {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bin_start", "bin_end", "count"])
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
        for (i, count) in self.counts.iter().enumerate() {
            w.write_record([
                format!("{}", self.edges[i]),
                format!("{}", self.edges[i + 1]),
                count.to_string(),
            ])
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Equal-width edges 0, 1/n, .., 1.
pub fn default_area_edges() -> Vec<f64> {
    (0..=DEFAULT_AREA_BINS)
        .map(|i| i as f64 / DEFAULT_AREA_BINS as f64)
        .collect()
}

/// Distribution of normalized box areas (width × height).
pub fn area_distribution(frames: &[GroundTruthFrame], edges: &[f64]) -> Result<Histogram1D> {
    if edges.len() < 2 {
        return Err(Error::Config("area histogram needs at least one bin".to_string()));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("area bin edges must be strictly increasing".to_string()));
    }
    if edges[0] > 0.0 || edges[edges.len() - 1] < 1.0 {
        return Err(Error::Config("area bin edges must span [0, 1]".to_string()));
    }
    let mut counts = vec![0u64; edges.len() - 1];
    let mut total = 0u64;
    for frame in frames {
        for object in &frame.objects {
            let area = object.bbox.area();
            // Number of edges <= area, so a value on a boundary goes up;
            // the top edge clamps into the final bin.
            let idx = edges.partition_point(|&e| e <= area);
            let bin = idx.saturating_sub(1).min(counts.len() - 1);
            counts[bin] += 1;
            total += 1;
        }
    }
    Ok(Histogram1D {
        edges: edges.to_vec(),
        counts,
        total,
    })
}

/// One tag value's share of the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRow {
    pub tag: String,
    pub video_count: usize,
    /// Total frames per the manifest.
    pub frame_count: u64,
    /// Frames actually present in the annotation set.
    pub annotated_frame_count: u64,
    pub box_count: u64,
    pub video_fraction: f64,
    pub frame_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub by_split: Vec<TagRow>,
    pub by_environment: Vec<TagRow>,
    pub total_videos: usize,
    pub total_frames: u64,
    pub total_annotated_frames: u64,
    pub total_boxes: u64,
}

pub const UNTAGGED: &str = "untagged";

/// Tabulate videos, frames, and boxes by split tag and environment tag.
///
/// Percentages come in two weightings because "which share is bigger"
/// depends on whether a video or a frame is the unit; both are emitted.
/// Every annotated video must appear in the manifest.
pub fn split_summary(
    manifests: &[VideoManifest],
    frames: &[GroundTruthFrame],
) -> Result<SplitSummary> {
    let by_id: BTreeMap<&str, &VideoManifest> = manifests
        .iter()
        .map(|m| (m.video_id.as_str(), m))
        .collect();

    let mut unknown: Vec<String> = frames
        .iter()
        .map(|f| f.video_id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .map(String::from)
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(Error::UnknownVideos(unknown));
    }

    let mut annotated_frames: BTreeMap<&str, u64> = BTreeMap::new();
    let mut boxes: BTreeMap<&str, u64> = BTreeMap::new();
    for frame in frames {
        *annotated_frames.entry(frame.video_id.as_str()).or_default() += 1;
        *boxes.entry(frame.video_id.as_str()).or_default() += frame.objects.len() as u64;
    }

    let total_videos = manifests.len();
    let total_frames: u64 = manifests.iter().map(|m| m.frame_count).sum();
    let tabulate = |tag_of: &dyn Fn(&VideoManifest) -> Option<&str>| -> Vec<TagRow> {
        let mut rows: BTreeMap<String, TagRow> = BTreeMap::new();
        for m in manifests {
            let tag = tag_of(m).unwrap_or(UNTAGGED).to_string();
            let row = rows.entry(tag.clone()).or_insert_with(|| TagRow {
                tag,
                video_count: 0,
                frame_count: 0,
                annotated_frame_count: 0,
                box_count: 0,
                video_fraction: 0.0,
                frame_fraction: 0.0,
            });
            row.video_count += 1;
            row.frame_count += m.frame_count;
            row.annotated_frame_count += annotated_frames.get(m.video_id.as_str()).copied().unwrap_or(0);
            row.box_count += boxes.get(m.video_id.as_str()).copied().unwrap_or(0);
        }
        let mut rows: Vec<TagRow> = rows.into_values().collect();
        for row in &mut rows {
            row.video_fraction = if total_videos > 0 {
                row.video_count as f64 / total_videos as f64
            } else {
                0.0
            };
            row.frame_fraction = if total_frames > 0 {
                row.frame_count as f64 / total_frames as f64
            } else {
                0.0
            };
        }
        // Alphabetical, with the catch-all last.
        rows.sort_by(|a, b| {
            (a.tag == UNTAGGED)
                .cmp(&(b.tag == UNTAGGED))
                .then_with(|| a.tag.cmp(&b.tag))
        });
        rows
    };

    Ok(SplitSummary {
        by_split: tabulate(&|m| m.split_tag.as_deref()),
        by_environment: tabulate(&|m| m.environment_tag.as_deref()),
        total_videos,
        total_frames,
        total_annotated_frames: frames.len() as u64,
        total_boxes: frames.iter().map(|f| f.objects.len() as u64).sum(),
    })
}
