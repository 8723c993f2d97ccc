//! Temporal stability of detections along ground-truth tracklets.
//!
//! Three per-tracklet errors, averaged over their eligible tracklets:
//!
//! * translation: σ(x_d − x_g) + σ(y_d − y_g) over matched frames, where
//!   (x, y) are normalized box centers. Jitter shows up, constant bias
//!   does not.
//! * scale + aspect: σ(√(area_d / area_g)) + σ(aspect_d / aspect_g)
//!   over matched frames.
//! * fragmentation: adjacent detected/undetected status changes, f_t,
//!   normalized by l_t − 1. The first frame's status is a starting state,
//!   not a change.
//!
//! σ is the population standard deviation (divide by n). Tracklets with
//! fewer than two matched detections are excluded from the two σ-based
//! errors; fragmentation instead includes every tracklet of length ≥ 2,
//! matched or not, since a never-detected object simply has zero flips.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tracklets::Tracklet;

/// Population standard deviation: sqrt of the mean squared deviation.
pub fn population_std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    variance.sqrt()
}

fn matched_pairs(t: &Tracklet) -> impl Iterator<Item = (&crate::geometry::BBox, &crate::geometry::BBox)> {
    t.frames
        .iter()
        .filter_map(|f| f.detection.as_ref().map(|d| (&d.bbox, &f.gt_box)))
}

/// Center jitter of the matched detections. `None` when fewer than two
/// frames are matched, since a standard deviation needs at least two
/// samples to mean anything.
pub fn translation_error(t: &Tracklet) -> Option<f64> {
    if t.matched_count() < 2 {
        return None;
    }
    let mut dx = Vec::with_capacity(t.matched_count());
    let mut dy = Vec::with_capacity(t.matched_count());
    for (det, gt) in matched_pairs(t) {
        let (xd, yd) = det.center();
        let (xg, yg) = gt.center();
        dx.push(xd - xg);
        dy.push(yd - yg);
    }
    Some(population_std_dev(&dx) + population_std_dev(&dy))
}

/// The scale and aspect-ratio components, kept separate so the breakdown
/// can show which one moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleAspect {
    pub scale: f64,
    pub aspect: f64,
}

impl ScaleAspect {
    pub fn total(&self) -> f64 {
        self.scale + self.aspect
    }
}

/// Size jitter of the matched detections relative to their ground truth.
pub fn scale_aspect_error(t: &Tracklet) -> Option<ScaleAspect> {
    if t.matched_count() < 2 {
        return None;
    }
    let mut size_ratios = Vec::with_capacity(t.matched_count());
    let mut aspect_ratios = Vec::with_capacity(t.matched_count());
    for (det, gt) in matched_pairs(t) {
        size_ratios.push((det.area() / gt.area()).sqrt());
        aspect_ratios.push(det.aspect_ratio() / gt.aspect_ratio());
    }
    Some(ScaleAspect {
        scale: population_std_dev(&size_ratios),
        aspect: population_std_dev(&aspect_ratios),
    })
}

/// Number of adjacent-frame detected/undetected transitions.
pub fn fragment_count(t: &Tracklet) -> usize {
    t.frames
        .windows(2)
        .filter(|w| w[0].detection.is_some() != w[1].detection.is_some())
        .count()
}

/// Flips normalized by the l_t − 1 adjacent pairs. `None` for length-1
/// tracklets, which have no adjacent pairs.
pub fn fragmentation_error(t: &Tracklet) -> Option<f64> {
    if t.len() < 2 {
        return None;
    }
    Some(fragment_count(t) as f64 / (t.len() - 1) as f64)
}

/// One tracklet's row in the stability breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackletStability {
    pub tracklet_id: usize,
    pub video_id: String,
    pub object_class: String,
    pub length: usize,
    pub matched_count: usize,
    pub translation_error: Option<f64>,
    pub scale_error: Option<f64>,
    pub aspect_error: Option<f64>,
    pub scale_aspect_error: Option<f64>,
    pub flip_count: usize,
    pub fragmentation: Option<f64>,
}

/// A mean over the tracklets eligible for one metric. `value` is 0 when
/// `defined` is false, by the same convention as the accuracy report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub value: f64,
    pub defined: bool,
    /// Tracklets included in the mean.
    pub tracklet_count: usize,
    /// Tracklets excluded by this metric's eligibility rule.
    pub excluded: usize,
}

fn summarize(values: impl Iterator<Item = Option<f64>>) -> MetricSummary {
    let mut total = 0.0;
    let mut included = 0usize;
    let mut excluded = 0usize;
    for v in values {
        match v {
            Some(v) => {
                total += v;
                included += 1;
            }
            None => excluded += 1,
        }
    }
    MetricSummary {
        value: if included > 0 { total / included as f64 } else { 0.0 },
        defined: included > 0,
        tracklet_count: included,
        excluded,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub translation_error: MetricSummary,
    pub scale_aspect_error: MetricSummary,
    pub fragmentation_error: MetricSummary,
    pub per_tracklet: Vec<TrackletStability>,
}

/// Aggregate the three stability errors over tracklets that already carry
/// their matched detections.
pub fn stability_report(tracklets: &[Tracklet]) -> StabilityReport {
    // Per-tracklet work is independent; collect preserves order so the
    // sequential means below stay bit-identical run to run.
    let per_tracklet: Vec<TrackletStability> = tracklets
        .par_iter()
        .map(|t| {
            let sa = scale_aspect_error(t);
            TrackletStability {
                tracklet_id: t.tracklet_id,
                video_id: t.video_id.clone(),
                object_class: t.object_class.clone(),
                length: t.len(),
                matched_count: t.matched_count(),
                translation_error: translation_error(t),
                scale_error: sa.map(|s| s.scale),
                aspect_error: sa.map(|s| s.aspect),
                scale_aspect_error: sa.map(|s| s.total()),
                flip_count: fragment_count(t),
                fragmentation: fragmentation_error(t),
            }
        })
        .collect();

    StabilityReport {
        translation_error: summarize(per_tracklet.iter().map(|t| t.translation_error)),
        scale_aspect_error: summarize(per_tracklet.iter().map(|t| t.scale_aspect_error)),
        fragmentation_error: summarize(per_tracklet.iter().map(|t| t.fragmentation)),
        per_tracklet,
    }
}

/// Per-tracklet CSV export:
/// `tracklet_id,video_id,class,length,matched,e_c,e_sr,flips,fragmentation`.
pub fn write_stability_csv<W: std::io::Write>(
    report: &StabilityReport,
    writer: W,
) -> crate::error::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "tracklet_id",
        "video_id",
        "class",
        "length",
        "matched",
        "translation_error",
        "scale_aspect_error",
        "flip_count",
        "fragmentation",
    ])
    .map_err(|e| crate::error::Error::Config(format!("csv: {e}")))?;
    let opt = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
    for t in &report.per_tracklet {
        w.write_record([
            t.tracklet_id.to_string(),
            t.video_id.clone(),
            t.object_class.clone(),
            t.length.to_string(),
            t.matched_count.to_string(),
            opt(t.translation_error),
            opt(t.scale_aspect_error),
            t.flip_count.to_string(),
            opt(t.fragmentation),
        ])
        .map_err(|e| crate::error::Error::Config(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}
