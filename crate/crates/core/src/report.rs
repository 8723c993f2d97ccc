//! End-to-end evaluation runs and the JSON report they produce.
//!
//! A run report is a regression artifact: identical inputs and
//! configuration must serialize to identical bytes, timestamp aside. That
//! drives three rules here: stable orderings everywhere, every numeric
//! convention stamped into the report, and content digests of the inputs
//! so a diff can say *what* changed, not just that something did.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::accuracy::{
    ap_suite, mean_iou, mean_iou_best_per_gt, pr_curve, select_confidence_threshold,
    ApAtThreshold, ApInterpolation, MeanIou, MeanIouMode, PrCurve, ThresholdSelection,
};
use crate::error::{Error, Result};
use crate::failure::{classify_false_negatives, write_failures_csv, FailureBreakdown, DEFAULT_EDGE_EPS};
use crate::ingest::{
    filter_boxes, load_class_table, load_voc_dir, load_yolo_dir, parse_detections,
    parse_manifest, read_file, sort_and_check_frames, Detection, DetectionDiagnostic,
    DetectionParsePolicy, FilterDiagnostic, FilterPolicy, GroundTruthFrame, VideoManifest,
};
use crate::matching::{match_frame, FrameMatchResult};
use crate::stability::{stability_report, write_stability_csv, StabilityReport};
use crate::stats::{
    area_distribution, centroid_distribution, default_area_edges, split_summary, Histogram1D,
    Histogram2D, SplitSummary, DEFAULT_AREA_BINS, DEFAULT_GRID,
};
use crate::tracklets::{attach_detections, build_tracklets, Tracklet};

pub const TOOL_NAME: &str = "videval";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtFormat {
    Voc,
    Yolo,
}

/// Either a fixed operating confidence or "pick the F1-best one".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMode {
    Auto,
    Value(f64),
}

/// Everything a run needs. Paths plus every knob; the knobs all land in
/// the report's configuration stamp.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub gt_root: PathBuf,
    pub gt_format: GtFormat,
    /// Class-name table, required for YOLO ground truth.
    pub classes: Option<PathBuf>,
    pub detections: PathBuf,
    pub manifest: Option<PathBuf>,
    pub match_iou: f64,
    pub link_iou: f64,
    pub confidence: ConfidenceMode,
    pub filter_policy: FilterPolicy,
    pub detection_parse_policy: DetectionParsePolicy,
    pub ap_interpolation: ApInterpolation,
    pub mean_iou_mode: MeanIouMode,
    pub edge_eps: f64,
}

impl RunConfig {
    pub fn new(gt_root: impl Into<PathBuf>, gt_format: GtFormat, detections: impl Into<PathBuf>) -> Self {
        Self {
            gt_root: gt_root.into(),
            gt_format,
            classes: None,
            detections: detections.into(),
            manifest: None,
            match_iou: 0.5,
            link_iou: 0.5,
            confidence: ConfidenceMode::Auto,
            filter_policy: FilterPolicy::Reject,
            detection_parse_policy: DetectionParsePolicy::FailFast,
            ap_interpolation: ApInterpolation::None,
            mean_iou_mode: MeanIouMode::TruePositives,
            edge_eps: DEFAULT_EDGE_EPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                Err(Error::Config(format!("{name} {v} outside [0, 1]")))
            } else {
                Ok(())
            }
        };
        unit("match_iou", self.match_iou)?;
        unit("link_iou", self.link_iou)?;
        if let ConfidenceMode::Value(v) = self.confidence {
            unit("confidence threshold", v)?;
        }
        if !self.edge_eps.is_finite() || self.edge_eps < 0.0 {
            return Err(Error::Config(format!("edge tolerance {} must be >= 0", self.edge_eps)));
        }
        if self.gt_format == GtFormat::Yolo && self.classes.is_none() {
            return Err(Error::Config("YOLO ground truth needs a class table (--classes)".to_string()));
        }
        if self.gt_root.as_os_str().is_empty() || self.detections.as_os_str().is_empty() {
            return Err(Error::Config("empty input path".to_string()));
        }
        Ok(())
    }
}

/// Every convention that shapes a number in the report, spelled out so two
/// reports are comparable by eye.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigStamp {
    pub match_iou: f64,
    pub link_iou: f64,
    pub confidence_mode: String,
    pub filter_policy: FilterPolicy,
    pub detection_parse_policy: DetectionParsePolicy,
    pub ap_interpolation: ApInterpolation,
    pub ap_threshold_grid: Vec<f64>,
    pub mean_iou_mode: MeanIouMode,
    pub edge_eps: f64,
    /// Threshold comparisons accept equality.
    pub iou_comparison: String,
    /// Boxes are closed rectangles; shared edges have zero overlap.
    pub rectangle_model: String,
    /// Population standard deviation (divide by n).
    pub std_dev_convention: String,
    /// Tracklets with fewer matched detections are excluded from the
    /// σ-based stability errors.
    pub stability_min_matched: usize,
    /// A tracklet's first status is a starting state, not a flip.
    pub fragmentation_counts_initial_status: bool,
    /// Links never bridge missing frame indices.
    pub tracklets_require_consecutive_frames: bool,
}

impl ConfigStamp {
    fn from_config(config: &RunConfig) -> Self {
        Self {
            match_iou: config.match_iou,
            link_iou: config.link_iou,
            confidence_mode: match config.confidence {
                ConfidenceMode::Auto => "auto".to_string(),
                ConfidenceMode::Value(v) => format!("{v}"),
            },
            filter_policy: config.filter_policy,
            detection_parse_policy: config.detection_parse_policy,
            ap_interpolation: config.ap_interpolation,
            ap_threshold_grid: crate::accuracy::iou_threshold_grid(),
            mean_iou_mode: config.mean_iou_mode,
            edge_eps: config.edge_eps,
            iou_comparison: "greater_or_equal".to_string(),
            rectangle_model: "closed".to_string(),
            std_dev_convention: "population".to_string(),
            stability_min_matched: 2,
            fragmentation_counts_initial_status: false,
            tracklets_require_consecutive_frames: true,
        }
    }
}

/// SHA-256 content digests of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigests {
    /// Combined digest over the sorted annotation files (relative path and
    /// content each).
    pub ground_truth: String,
    pub ground_truth_files: usize,
    pub detections: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<String>,
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex_digest(&bytes))
}

/// Digest a directory of annotation files: each file's relative path and
/// content feed one running hash, in sorted path order.
fn tree_digest(root: &Path, extension: &str) -> Result<(String, usize)> {
    let files = crate::ingest::load::files_with_extension(root, extension)?;
    let mut hasher = Sha256::new();
    for path in &files {
        let rel = path.strip_prefix(root).unwrap_or(path);
        let rel: String = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        hasher.update(rel.as_bytes());
        hasher.update([0]);
        let bytes = std::fs::read(path).map_err(|source| Error::File {
            path: path.clone(),
            source,
        })?;
        hasher.update(&bytes);
        hasher.update([0xff]);
    }
    let out = hasher.finalize();
    Ok((out.iter().map(|b| format!("{b:02x}")).collect(), files.len()))
}

/// Accuracy headline: the AP family plus the operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSection {
    pub ap50: f64,
    pub ap75: f64,
    pub ap_range: f64,
    pub ap_per_threshold: Vec<ApAtThreshold>,
    pub mean_iou: MeanIou,
    pub threshold: ThresholdSelection,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub ground_truth_boxes: usize,
    pub detections_total: usize,
    pub detections_kept: usize,
}

/// Ingest noise worth surfacing next to the metrics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub filtered_boxes: Vec<FilterDiagnostic>,
    pub skipped_detections: Vec<DetectionDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub generated_at: String,
    pub config: ConfigStamp,
    pub inputs: InputDigests,
    pub evaluation: EvaluationSection,
    pub stability: StabilityReport,
    pub failures: FailureBreakdown,
    pub diagnostics: RunDiagnostics,
}

/// A full run's outputs: the JSON-able report plus the plot-ready series
/// that go to CSV sidecars.
#[derive(Debug, Clone)]
pub struct EvaluateOutput {
    pub report: RunReport,
    pub curve: PrCurve,
    pub tracklets: Vec<Tracklet>,
}

/// Load, filter, and order ground truth from a directory tree.
pub fn load_ground_truth(
    root: &Path,
    format: GtFormat,
    classes: Option<&Path>,
    manifest: Option<&[VideoManifest]>,
    policy: FilterPolicy,
) -> Result<(Vec<GroundTruthFrame>, Vec<FilterDiagnostic>)> {
    let raw = match format {
        GtFormat::Voc => load_voc_dir(root, manifest)?,
        GtFormat::Yolo => {
            let classes_path = classes.ok_or_else(|| {
                Error::Config("YOLO ground truth needs a class table".to_string())
            })?;
            let table = load_class_table(classes_path)?;
            load_yolo_dir(root, &table)?
        }
    };
    let (mut frames, diagnostics) = filter_boxes(raw, policy);
    sort_and_check_frames(&mut frames)?;
    Ok((frames, diagnostics))
}

fn load_manifest_file(path: Option<&Path>) -> Result<Option<Vec<VideoManifest>>> {
    match path {
        Some(path) => Ok(Some(parse_manifest(&read_file(path)?)?)),
        None => Ok(None),
    }
}

/// Group detections by frame and match every ground-truth frame, plus
/// phantom empty frames for detections that point nowhere, so their false
/// positives still count.
pub fn match_all_frames(
    detections: &[Detection],
    frames: &[GroundTruthFrame],
    match_iou: f64,
) -> Result<Vec<FrameMatchResult>> {
    use rayon::prelude::*;
    let mut by_key: BTreeMap<(&str, u64), Vec<Detection>> = BTreeMap::new();
    for d in detections {
        by_key
            .entry((d.video_id.as_str(), d.frame_index))
            .or_default()
            .push(d.clone());
    }
    let empty: Vec<Detection> = Vec::new();
    let mut jobs: Vec<(std::borrow::Cow<GroundTruthFrame>, &Vec<Detection>)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for frame in frames {
        let key = (frame.video_id.as_str(), frame.frame_index);
        seen.insert(key);
        let dets = by_key.get(&key).unwrap_or(&empty);
        jobs.push((std::borrow::Cow::Borrowed(frame), dets));
    }
    for (key, dets) in &by_key {
        if !seen.contains(key) {
            jobs.push((
                std::borrow::Cow::Owned(GroundTruthFrame {
                    video_id: key.0.to_string(),
                    frame_index: key.1,
                    objects: Vec::new(),
                }),
                dets,
            ));
        }
    }
    jobs.par_iter()
        .map(|(frame, dets)| match_frame(dets, frame, match_iou))
        .collect()
}

/// The full evaluation pipeline behind `evaluate`, `stability`, and
/// `failures`.
pub fn run_evaluate(config: &RunConfig) -> Result<EvaluateOutput> {
    config.validate()?;

    let manifest = load_manifest_file(config.manifest.as_deref())?;
    let (frames, filtered_boxes) = load_ground_truth(
        &config.gt_root,
        config.gt_format,
        config.classes.as_deref(),
        manifest.as_deref(),
        config.filter_policy,
    )?;
    let ground_truth_boxes: usize = frames.iter().map(|f| f.objects.len()).sum();
    if ground_truth_boxes == 0 {
        return Err(Error::ZeroGroundTruth);
    }

    let parsed = parse_detections(&read_file(&config.detections)?, config.detection_parse_policy)?;
    let detections = parsed.detections;

    let suite = ap_suite(&detections, &frames, config.ap_interpolation)?;
    let curve = pr_curve(&detections, &frames, config.match_iou)?;

    let threshold = match config.confidence {
        ConfidenceMode::Value(v) => {
            // Report the requested cutoff with the curve point it lands on.
            let at_or_below = curve
                .points
                .iter()
                .take_while(|p| p.confidence >= v)
                .last();
            ThresholdSelection {
                confidence: v,
                precision: at_or_below.map(|p| p.precision).unwrap_or(0.0),
                recall: at_or_below.map(|p| p.recall).unwrap_or(0.0),
                f1: at_or_below
                    .map(|p| {
                        let d = p.precision + p.recall;
                        if d > 0.0 { 2.0 * p.precision * p.recall / d } else { 0.0 }
                    })
                    .unwrap_or(0.0),
                degenerate: false,
            }
        }
        ConfidenceMode::Auto => {
            if curve.is_empty() {
                // No detections at all: nothing to pick, report a cutoff
                // that keeps nothing and say so.
                ThresholdSelection {
                    confidence: 1.0,
                    precision: 0.0,
                    recall: 0.0,
                    f1: 0.0,
                    degenerate: true,
                }
            } else {
                select_confidence_threshold(&curve)?
            }
        }
    };

    let kept: Vec<Detection> = detections
        .iter()
        .filter(|d| d.confidence >= threshold.confidence)
        .cloned()
        .collect();
    let matches = match_all_frames(&kept, &frames, config.match_iou)?;

    let true_positives: usize = matches.iter().map(|m| m.tp()).sum();
    let false_positives: usize = matches.iter().map(|m| m.fp()).sum();
    let false_negatives: usize = matches.iter().map(|m| m.false_negatives()).sum();
    let ratio = |num: usize, denom: usize| if denom > 0 { num as f64 / denom as f64 } else { 0.0 };
    let precision = ratio(true_positives, true_positives + false_positives);
    let recall = ratio(true_positives, true_positives + false_negatives);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    let iou_summary = match config.mean_iou_mode {
        MeanIouMode::TruePositives => mean_iou(&matches),
        MeanIouMode::BestPerGroundTruth => mean_iou_best_per_gt(&kept, &frames),
    };

    let mut tracklets = build_tracklets(&frames, config.link_iou)?;
    attach_detections(&mut tracklets, &matches)?;
    let stability = stability_report(&tracklets);
    let failures = classify_false_negatives(&matches, &frames, config.edge_eps)?;

    let extension = match config.gt_format {
        GtFormat::Voc => "xml",
        GtFormat::Yolo => "txt",
    };
    let (gt_digest, gt_files) = tree_digest(&config.gt_root, extension)?;
    let inputs = InputDigests {
        ground_truth: gt_digest,
        ground_truth_files: gt_files,
        detections: file_digest(&config.detections)?,
        manifest: config.manifest.as_deref().map(file_digest).transpose()?,
        classes: config.classes.as_deref().map(file_digest).transpose()?,
    };

    let report = RunReport {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        generated_at: chrono::Utc::now().to_rfc3339(),
        config: ConfigStamp::from_config(config),
        inputs,
        evaluation: EvaluationSection {
            ap50: suite.ap50,
            ap75: suite.ap75,
            ap_range: suite.ap_range,
            ap_per_threshold: suite.per_threshold,
            mean_iou: iou_summary,
            threshold,
            precision,
            recall,
            f1,
            true_positives,
            false_positives,
            false_negatives,
            ground_truth_boxes,
            detections_total: detections.len(),
            detections_kept: kept.len(),
        },
        stability,
        failures,
        diagnostics: RunDiagnostics {
            filtered_boxes,
            skipped_detections: parsed.skipped,
        },
    };

    Ok(EvaluateOutput {
        report,
        curve,
        tracklets,
    })
}

/// Write the canonical JSON report and its CSV sidecars into `dir`.
/// Returns the paths written.
pub fn write_outputs(output: &EvaluateOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let write = |name: &str, bytes: Vec<u8>, written: &mut Vec<PathBuf>| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| Error::File {
            path: path.clone(),
            source,
        })?;
        written.push(path);
        Ok(())
    };

    let mut report_json = serde_json::to_vec_pretty(&output.report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    report_json.push(b'\n');
    write("report.json", report_json, &mut written)?;

    let mut curve_csv = Vec::new();
    output.curve.write_csv(&mut curve_csv)?;
    write("pr_curve.csv", curve_csv, &mut written)?;

    let mut stability_csv = Vec::new();
    write_stability_csv(&output.report.stability, &mut stability_csv)?;
    write("stability_per_tracklet.csv", stability_csv, &mut written)?;

    let mut failures_csv = Vec::new();
    write_failures_csv(&output.report.failures, &mut failures_csv)?;
    write("failures.csv", failures_csv, &mut written)?;

    Ok(written)
}

/// Dataset statistics bundle for the `stats` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub tool: String,
    pub version: String,
    pub generated_at: String,
    pub centroid_grid: usize,
    pub area_bins: usize,
    pub summary: SplitSummary,
    pub centroids: Histogram2D,
    pub areas: Histogram1D,
}

pub fn run_stats(
    gt_root: &Path,
    format: GtFormat,
    classes: Option<&Path>,
    manifest_path: &Path,
    filter_policy: FilterPolicy,
    grid: usize,
) -> Result<StatsReport> {
    let manifest = parse_manifest(&read_file(manifest_path)?)?;
    let (frames, _) = load_ground_truth(gt_root, format, classes, Some(&manifest), filter_policy)?;
    let summary = split_summary(&manifest, &frames)?;
    let centroids = centroid_distribution(&frames, grid)?;
    let areas = area_distribution(&frames, &default_area_edges())?;
    Ok(StatsReport {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        generated_at: chrono::Utc::now().to_rfc3339(),
        centroid_grid: grid,
        area_bins: DEFAULT_AREA_BINS,
        summary,
        centroids,
        areas,
    })
}

pub fn default_stats_grid() -> usize {
    DEFAULT_GRID
}
