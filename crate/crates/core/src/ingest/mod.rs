//! Annotation and detection-stream parsing.
//!
//! Parsers emit *raw* frames whose boxes have not been range-checked;
//! [`filter::filter_boxes`] applies the out-of-range policy and produces
//! validated [`GroundTruthFrame`]s. Detection streams are validated at
//! parse time because their wire format is already normalized.

pub mod detections;
pub mod filter;
pub mod load;
pub mod manifest;
pub mod voc;
pub mod yolo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, RawBox};

pub use detections::{parse_detections, DetectionDiagnostic, DetectionParsePolicy, ParsedDetections};
pub use filter::{filter_boxes, filter_frame, BoxFix, FilterDiagnostic, FilterPolicy};
pub use load::{load_class_table, load_voc_dir, load_yolo_dir, read_file};
pub use manifest::{parse_manifest, VideoManifest};
pub use voc::parse_voc;
pub use yolo::{parse_yolo_labels, write_yolo_labels};

/// One annotated object with a validated box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub object_class: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

/// All ground-truth annotations for one video frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFrame {
    pub video_id: String,
    pub frame_index: u64,
    pub objects: Vec<GroundTruthObject>,
}

/// Parser output before the range filter has run.
#[derive(Debug, Clone, PartialEq)]
pub struct RawObject {
    pub object_class: String,
    pub bbox: RawBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame {
    pub video_id: String,
    pub frame_index: u64,
    pub objects: Vec<RawObject>,
}

/// One scored detector output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub video_id: String,
    pub frame_index: u64,
    #[serde(rename = "class")]
    pub object_class: String,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

impl Detection {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence) || self.confidence.is_nan() {
            return Err(Error::Config(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        if self.object_class.trim().is_empty() {
            return Err(Error::Config("empty detection class".to_string()));
        }
        Ok(())
    }
}

/// Class labels are compared case-insensitively after trimming; annotation
/// tools disagree on capitalization.
pub fn same_class(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

/// Sort frames into `(video_id, frame_index)` order and reject duplicates.
/// Everything downstream assumes this ordering.
pub fn sort_and_check_frames(frames: &mut [GroundTruthFrame]) -> Result<()> {
    frames.sort_by(|a, b| {
        a.video_id
            .cmp(&b.video_id)
            .then(a.frame_index.cmp(&b.frame_index))
    });
    for pair in frames.windows(2) {
        if pair[0].video_id == pair[1].video_id && pair[0].frame_index == pair[1].frame_index {
            return Err(Error::DuplicateFrame {
                video_id: pair[1].video_id.clone(),
                frame_index: pair[1].frame_index,
            });
        }
    }
    Ok(())
}

/// `(video_id, frame_index)` derived from the `<video_id>_<frame_index>`
/// filename convention. The index segment is the part after the last
/// underscore, so video ids may themselves contain underscores; zero
/// padding keeps lexicographic order equal to temporal order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrameIdentity {
    pub video_id: String,
    pub frame_index: u64,
}

impl FrameIdentity {
    pub fn new(video_id: impl Into<String>, frame_index: u64) -> Self {
        Self {
            video_id: video_id.into(),
            frame_index,
        }
    }

    /// Parse from a file name or stem, e.g. `poolA_000042.jpg` or
    /// `poolA_000042`.
    pub fn from_name(name: &str) -> Result<Self> {
        let stem = match name.rsplit_once('.') {
            Some((stem, ext)) if !ext.contains('_') && !stem.is_empty() => stem,
            _ => name,
        };
        let (video_id, index) = stem
            .rsplit_once('_')
            .ok_or_else(|| Error::FrameIdentity {
                name: name.to_string(),
            })?;
        if video_id.is_empty() {
            return Err(Error::FrameIdentity {
                name: name.to_string(),
            });
        }
        let frame_index = index.parse::<u64>().map_err(|_| Error::FrameIdentity {
            name: name.to_string(),
        })?;
        Ok(Self {
            video_id: video_id.to_string(),
            frame_index,
        })
    }
}

/// Ordered class-name table for index-based label formats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    names: Vec<String>,
}

impl ClassTable {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(|n| n.trim().to_string()).collect();
        if names.iter().any(|n| n.is_empty()) {
            return Err(Error::ClassTable("empty class name".to_string()));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].iter().any(|b| same_class(a, b)) {
                return Err(Error::ClassTable(format!("duplicate class name '{a}'")));
            }
        }
        Ok(Self { names })
    }

    /// Parse a plain-text table: one class name per line, blank lines skipped.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
        )
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| same_class(n, name))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}
