//! Detector output stream: one JSON object per line.
//!
//! Keys: `video_id`, `frame_index`, `class`, `confidence`,
//! `box: [x_min, y_min, x_max, y_max]` in frame fractions. Boxes are
//! validated during deserialization, so a detection that parses is usable
//! as-is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Detection;

/// What to do with a line that fails to parse or validate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionParsePolicy {
    /// Abort on the first bad line.
    FailFast,
    /// Drop bad lines, keeping a diagnostic for each.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionDiagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedDetections {
    pub detections: Vec<Detection>,
    pub skipped: Vec<DetectionDiagnostic>,
}

/// Parse a detection stream. Blank lines are ignored; line numbers in
/// errors and diagnostics are 1-based.
pub fn parse_detections(text: &str, policy: DetectionParsePolicy) -> Result<ParsedDetections> {
    let mut out = ParsedDetections::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<Detection, String> = serde_json::from_str(line)
            .map_err(|e| e.to_string())
            .and_then(|d: Detection| d.validate().map(|()| d).map_err(|e| e.to_string()));
        match parsed {
            Ok(detection) => out.detections.push(detection),
            Err(message) => match policy {
                DetectionParsePolicy::FailFast => {
                    return Err(Error::DetectionLine {
                        line: line_no,
                        message,
                    })
                }
                DetectionParsePolicy::Skip => out.skipped.push(DetectionDiagnostic {
                    line: line_no,
                    message,
                }),
            },
        }
    }
    Ok(out)
}

/// Render detections back to the line format, in input order.
pub fn write_detections(detections: &[Detection]) -> String {
    let mut out = String::new();
    for d in detections {
        out.push_str(&serde_json::to_string(d).expect("detection serializes"));
        out.push('\n');
    }
    out
}
