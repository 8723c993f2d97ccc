//! YOLO label text format.
//!
//! One line per object: `class_index center_x center_y width height`,
//! all fractions of the frame. Class names live in a separate table, so
//! both directions take a [`ClassTable`].

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::RawBox;
use crate::ingest::{ClassTable, FrameIdentity, GroundTruthFrame, RawFrame, RawObject};

/// Parse the label lines for one frame. Blank lines are allowed; anything
/// else must be five whitespace-separated fields with in-range values.
pub fn parse_yolo_labels(
    text: &str,
    classes: &ClassTable,
    identity: FrameIdentity,
) -> Result<RawFrame> {
    let mut objects = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(line_err(
                line_no,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let class_index: usize = fields[0]
            .parse()
            .map_err(|_| line_err(line_no, format!("class index is not an integer: '{}'", fields[0])))?;
        let object_class = classes
            .name(class_index)
            .ok_or_else(|| {
                line_err(
                    line_no,
                    format!("class index {class_index} outside table of {} names", classes.len()),
                )
            })?
            .to_string();
        let mut values = [0.0f64; 4];
        for (slot, field) in values.iter_mut().zip(&fields[1..]) {
            let v: f64 = field
                .parse()
                .map_err(|_| line_err(line_no, format!("not a number: '{field}'")))?;
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(line_err(line_no, format!("value {field} outside [0, 1]")));
            }
            *slot = v;
        }
        let [cx, cy, w, h] = values;
        objects.push(RawObject {
            object_class,
            bbox: RawBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0),
        });
    }
    Ok(RawFrame {
        video_id: identity.video_id,
        frame_index: identity.frame_index,
        objects,
    })
}

/// Render one frame's objects as label lines, six decimal places per value.
pub fn write_yolo_labels(frame: &GroundTruthFrame, classes: &ClassTable) -> Result<String> {
    let mut out = String::new();
    for object in &frame.objects {
        let class_index = classes.index_of(&object.object_class).ok_or_else(|| {
            Error::ClassTable(format!("class '{}' not in table", object.object_class))
        })?;
        let (cx, cy) = object.bbox.center();
        writeln!(
            out,
            "{class_index} {cx:.6} {cy:.6} {:.6} {:.6}",
            object.bbox.width(),
            object.bbox.height()
        )
        .expect("string write");
    }
    Ok(out)
}

fn line_err(line: usize, message: String) -> Error {
    Error::YoloLine { line, message }
}
