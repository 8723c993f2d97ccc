//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid box [{x_min}, {y_min}, {x_max}, {y_max}]: {reason}")]
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        reason: String,
    },

    #[error("degenerate box for {context}: zero {axis} after normalization")]
    DegenerateBox { context: String, axis: String },

    #[error("invalid frame size {width}x{height}: both dimensions must be >= 1")]
    InvalidFrameSize { width: u32, height: u32 },

    #[error("XML parse error at byte {offset} (line {line}, column {column}): {message}")]
    Xml {
        offset: usize,
        line: u32,
        column: u32,
        message: String,
    },

    #[error("invalid annotation document{}: {message}", fmt_ctx(.context))]
    VocSchema {
        context: Option<String>,
        message: String,
    },

    #[error("cannot derive frame identity from '{name}': expected <video_id>_<frame_index>")]
    FrameIdentity { name: String },

    #[error("label line {line}: {message}")]
    YoloLine { line: usize, message: String },

    #[error("detection line {line}: {message}")]
    DetectionLine { line: usize, message: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("class table: {0}")]
    ClassTable(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    FileFormat { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("duplicate frame index {frame_index} in video '{video_id}'")]
    DuplicateFrame { video_id: String, frame_index: u64 },

    #[error("frames for video '{video_id}' are not sorted by frame index (saw {frame_index} after {previous})")]
    UnsortedFrames {
        video_id: String,
        frame_index: u64,
        previous: u64,
    },

    #[error("detection for {det_video}#{det_frame} does not belong to frame {frame_video}#{frame_index}")]
    MixedFrame {
        det_video: String,
        det_frame: u64,
        frame_video: String,
        frame_index: u64,
    },

    #[error("match result references unknown ground truth: video '{video_id}' frame {frame_index} object {gt_index}")]
    UnknownGroundTruth {
        video_id: String,
        frame_index: u64,
        gt_index: usize,
    },

    #[error("ground truth object claimed twice: video '{video_id}' frame {frame_index} object {gt_index}")]
    DuplicateClaim {
        video_id: String,
        frame_index: u64,
        gt_index: usize,
    },

    #[error("no ground truth boxes: recall is undefined")]
    ZeroGroundTruth,

    #[error("empty precision-recall curve")]
    EmptyCurve,

    #[error("videos present in annotations but missing from the manifest: {0:?}")]
    UnknownVideos(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for failures caused by what the inputs contain (as opposed to
    /// files that cannot be read at all).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::File { .. })
    }
}

fn fmt_ctx(ctx: &Option<String>) -> String {
    match ctx {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}
