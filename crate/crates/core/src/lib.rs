//! Evaluation toolkit for video object detectors.
//!
//! Takes per-frame ground-truth annotations (Pascal VOC XML or YOLO label
//! files) plus a detector's scored output stream, and produces accuracy
//! (precision/recall, average precision over an IOU threshold sweep),
//! temporal stability of matched boxes across frames, a breakdown of what
//! kinds of objects get missed, and dataset distribution summaries.
//!
//! The library is deterministic by construction: no randomness, stable
//! orderings everywhere, and every numeric convention stamped into the
//! run report.

pub mod accuracy;
pub mod error;
pub mod failure;
pub mod geometry;
pub mod ingest;
pub mod matching;
pub mod report;
pub mod stability;
pub mod stats;
pub mod tracklets;

pub use error::{Error, Result};
pub use geometry::{BBox, FrameSize, RawBox};
