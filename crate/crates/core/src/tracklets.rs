//! Per-object ground-truth tracklets.
//!
//! The annotations carry no object identities, so continuity is recovered
//! by overlap: a ground-truth box in frame t+1 continues the tracklet of
//! the same-class box in frame t it overlaps best. Links are greedy in
//! descending overlap and strictly one-to-one, and never bridge a gap in
//! the frame numbering; a skipped frame ends every open tracklet, because
//! guessing across unannotated frames would fabricate continuity that the
//! stability metrics would then score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::ingest::{same_class, Detection, GroundTruthFrame};
use crate::matching::FrameMatchResult;

/// One frame of a tracklet: the ground-truth box, and the detection that
/// claimed it once matches are attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackletFrame {
    pub frame_index: u64,
    /// Index into the source frame's object list.
    pub gt_index: usize,
    pub gt_box: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<Detection>,
}

/// A single object's run of consecutive annotated frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracklet {
    pub tracklet_id: usize,
    pub video_id: String,
    pub object_class: String,
    pub frames: Vec<TrackletFrame>,
}

impl Tracklet {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frames where a detection claimed this object.
    pub fn matched_count(&self) -> usize {
        self.frames.iter().filter(|f| f.detection.is_some()).count()
    }

    pub fn first_frame_index(&self) -> u64 {
        self.frames.first().map(|f| f.frame_index).unwrap_or(0)
    }

    pub fn last_frame_index(&self) -> u64 {
        self.frames.last().map(|f| f.frame_index).unwrap_or(0)
    }
}

/// Build tracklets for every video in `frames`.
///
/// Frames must arrive grouped by video with strictly ascending frame
/// indices within each video ([`crate::ingest::sort_and_check_frames`]
/// produces that order). Tracklet ids count up in creation order, so the
/// output is stable for a given input.
pub fn build_tracklets(frames: &[GroundTruthFrame], link_iou: f64) -> Result<Vec<Tracklet>> {
    if !(0.0..=1.0).contains(&link_iou) || link_iou.is_nan() {
        return Err(Error::Config(format!(
            "link overlap threshold {link_iou} outside [0, 1]"
        )));
    }

    // Each video must be one contiguous run; a video that reappears after
    // another means the caller skipped sort_and_check_frames.
    let mut last_seen: std::collections::HashMap<&str, u64> = std::collections::HashMap::new();
    let mut previous_video: Option<&str> = None;
    for frame in frames {
        let reappearing =
            previous_video != Some(frame.video_id.as_str()) && last_seen.contains_key(frame.video_id.as_str());
        if reappearing {
            return Err(Error::UnsortedFrames {
                video_id: frame.video_id.clone(),
                frame_index: frame.frame_index,
                previous: last_seen[frame.video_id.as_str()],
            });
        }
        last_seen.insert(frame.video_id.as_str(), frame.frame_index);
        previous_video = Some(frame.video_id.as_str());
    }

    let mut tracklets: Vec<Tracklet> = Vec::new();
    let mut video_start = 0;
    while video_start < frames.len() {
        let video_id = &frames[video_start].video_id;
        let video_end = frames[video_start..]
            .iter()
            .position(|f| &f.video_id != video_id)
            .map(|p| video_start + p)
            .unwrap_or(frames.len());
        build_video_tracklets(&frames[video_start..video_end], link_iou, &mut tracklets)?;
        video_start = video_end;
    }
    Ok(tracklets)
}

fn build_video_tracklets(
    frames: &[GroundTruthFrame],
    link_iou: f64,
    tracklets: &mut Vec<Tracklet>,
) -> Result<()> {
    // Tracklet indices still extendable into the current frame.
    let mut open: Vec<usize> = Vec::new();
    let mut previous_index: Option<u64> = None;

    for frame in frames {
        if let Some(prev) = previous_index {
            if frame.frame_index == prev {
                return Err(Error::DuplicateFrame {
                    video_id: frame.video_id.clone(),
                    frame_index: frame.frame_index,
                });
            }
            if frame.frame_index < prev {
                return Err(Error::UnsortedFrames {
                    video_id: frame.video_id.clone(),
                    frame_index: frame.frame_index,
                    previous: prev,
                });
            }
            if frame.frame_index != prev + 1 {
                // Gap in the annotation stream: nothing carries across it.
                open.clear();
            }
        }

        // Candidate links: (overlap, gt index in previous frame, object
        // index in this frame, open-slot position). Sorted so the best
        // overlap links first; ties prefer the earlier-frame object with
        // the lower index, then the lower index in this frame.
        let mut candidates: Vec<(f64, usize, usize, usize)> = Vec::new();
        for (slot, &ti) in open.iter().enumerate() {
            let tracklet = &tracklets[ti];
            let last = tracklet.frames.last().expect("open tracklet has frames");
            for (oi, object) in frame.objects.iter().enumerate() {
                if !same_class(&object.object_class, &tracklet.object_class) {
                    continue;
                }
                let iou = last.gt_box.iou(&object.bbox);
                if iou >= link_iou {
                    candidates.push((iou, last.gt_index, oi, slot));
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });

        let mut slot_taken = vec![false; open.len()];
        let mut object_linked = vec![None; frame.objects.len()];
        for (_, _, oi, slot) in candidates {
            if slot_taken[slot] || object_linked[oi].is_some() {
                continue;
            }
            slot_taken[slot] = true;
            object_linked[oi] = Some(open[slot]);
        }

        let mut next_open = Vec::with_capacity(frame.objects.len());
        for (oi, object) in frame.objects.iter().enumerate() {
            let ti = match object_linked[oi] {
                Some(ti) => ti,
                None => {
                    tracklets.push(Tracklet {
                        tracklet_id: tracklets.len(),
                        video_id: frame.video_id.clone(),
                        object_class: object.object_class.clone(),
                        frames: Vec::new(),
                    });
                    tracklets.len() - 1
                }
            };
            tracklets[ti].frames.push(TrackletFrame {
                frame_index: frame.frame_index,
                gt_index: oi,
                gt_box: object.bbox,
                detection: None,
            });
            next_open.push(ti);
        }

        open = next_open;
        previous_index = Some(frame.frame_index);
    }
    Ok(())
}

/// Record which detections claimed which tracklet frames.
///
/// Each true-positive pair names a `(video, frame, gt_index)` slot; that
/// slot must exist in exactly one tracklet and may only be claimed once.
pub fn attach_detections(
    tracklets: &mut [Tracklet],
    matches: &[FrameMatchResult],
) -> Result<()> {
    use std::collections::HashMap;
    let mut slots: HashMap<(&str, u64, usize), (usize, usize)> = HashMap::new();
    for (ti, tracklet) in tracklets.iter().enumerate() {
        for (fi, frame) in tracklet.frames.iter().enumerate() {
            slots.insert((tracklet.video_id.as_str(), frame.frame_index, frame.gt_index), (ti, fi));
        }
    }

    let mut assignments: Vec<(usize, usize, Detection)> = Vec::new();
    for result in matches {
        for pair in &result.tp_pairs {
            let key = (result.video_id.as_str(), result.frame_index, pair.gt_index);
            let &(ti, fi) = slots.get(&key).ok_or_else(|| Error::UnknownGroundTruth {
                video_id: result.video_id.clone(),
                frame_index: result.frame_index,
                gt_index: pair.gt_index,
            })?;
            assignments.push((ti, fi, pair.detection.clone()));
        }
    }

    for (ti, fi, detection) in assignments {
        let frame = &mut tracklets[ti].frames[fi];
        if frame.detection.is_some() {
            return Err(Error::DuplicateClaim {
                video_id: tracklets[ti].video_id.clone(),
                frame_index: frame.frame_index,
                gt_index: frame.gt_index,
            });
        }
        frame.detection = Some(detection);
    }
    Ok(())
}
