//! Out-of-range box policy.
//!
//! Annotation exports routinely contain boxes that poke past the frame
//! edge. The default policy drops them; the clamp policy clips them back
//! into the frame and only drops what remains degenerate. Every repair or
//! drop is recorded so a run report can show what the filter did.

use serde::{Deserialize, Serialize};

use crate::ingest::{GroundTruthFrame, GroundTruthObject, RawFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPolicy {
    /// Drop any box that is not already a valid in-frame rectangle.
    Reject,
    /// Clip coordinates into `[0, 1]`, dropping boxes that end up empty.
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxFix {
    Dropped,
    Clamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDiagnostic {
    pub video_id: String,
    pub frame_index: u64,
    /// Position within the frame's object list, before filtering.
    pub object_index: usize,
    pub fix: BoxFix,
    pub message: String,
}

/// Apply the policy to one frame. Frames whose objects are all dropped
/// stay in the output as empty frames; an annotated frame with nothing in
/// it is still evidence.
pub fn filter_frame(frame: RawFrame, policy: FilterPolicy) -> (GroundTruthFrame, Vec<FilterDiagnostic>) {
    let mut objects = Vec::with_capacity(frame.objects.len());
    let mut diagnostics = Vec::new();
    for (object_index, raw) in frame.objects.into_iter().enumerate() {
        let diag = |fix: BoxFix, message: String| FilterDiagnostic {
            video_id: frame.video_id.clone(),
            frame_index: frame.frame_index,
            object_index,
            fix,
            message,
        };
        match raw.bbox.validate() {
            Ok(bbox) => objects.push(GroundTruthObject {
                object_class: raw.object_class,
                bbox,
            }),
            Err(original_err) => match policy {
                FilterPolicy::Reject => {
                    diagnostics.push(diag(BoxFix::Dropped, original_err.to_string()));
                }
                FilterPolicy::Clamp => {
                    let b = raw.bbox;
                    let clamped = crate::geometry::RawBox::new(
                        b.x_min.clamp(0.0, 1.0),
                        b.y_min.clamp(0.0, 1.0),
                        b.x_max.clamp(0.0, 1.0),
                        b.y_max.clamp(0.0, 1.0),
                    );
                    match clamped.validate() {
                        Ok(bbox) => {
                            diagnostics.push(diag(
                                BoxFix::Clamped,
                                format!("clipped into frame: {original_err}"),
                            ));
                            objects.push(GroundTruthObject {
                                object_class: raw.object_class,
                                bbox,
                            });
                        }
                        Err(_) => {
                            diagnostics.push(diag(
                                BoxFix::Dropped,
                                format!("empty after clipping: {original_err}"),
                            ));
                        }
                    }
                }
            },
        }
    }
    (
        GroundTruthFrame {
            video_id: frame.video_id,
            frame_index: frame.frame_index,
            objects,
        },
        diagnostics,
    )
}

pub fn filter_boxes(
    frames: Vec<RawFrame>,
    policy: FilterPolicy,
) -> (Vec<GroundTruthFrame>, Vec<FilterDiagnostic>) {
    let mut out = Vec::with_capacity(frames.len());
    let mut diagnostics = Vec::new();
    for frame in frames {
        let (frame, mut diags) = filter_frame(frame, policy);
        out.push(frame);
        diagnostics.append(&mut diags);
    }
    (out, diagnostics)
}
