//! Video manifest: per-video metadata the annotations themselves lack.
//!
//! A manifest is a JSON array of entries. Frame rate defaults to the
//! capture rate of our recording rigs (20 fps) when absent; environment
//! and split tags are optional and only feed the distribution stats.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FrameSize;

pub const DEFAULT_FPS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub video_id: String,
    pub frame_count: u64,
    pub frame_size: FrameSize,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default)]
    pub environment_tag: Option<String>,
    #[serde(default)]
    pub split_tag: Option<String>,
}

fn default_fps() -> f64 {
    DEFAULT_FPS
}

/// Parse and validate a manifest document.
pub fn parse_manifest(text: &str) -> Result<Vec<VideoManifest>> {
    let entries: Vec<VideoManifest> =
        serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
    let mut seen = BTreeMap::new();
    for (i, entry) in entries.iter().enumerate() {
        if entry.video_id.trim().is_empty() {
            return Err(Error::Manifest(format!("entry {i}: empty video_id")));
        }
        if let Some(first) = seen.insert(entry.video_id.as_str(), i) {
            return Err(Error::Manifest(format!(
                "duplicate video_id '{}' (entries {first} and {i})",
                entry.video_id
            )));
        }
        if !entry.fps.is_finite() || entry.fps <= 0.0 {
            return Err(Error::Manifest(format!(
                "entry {i} ('{}'): fps must be a positive number, got {}",
                entry.video_id, entry.fps
            )));
        }
        FrameSize::new(entry.frame_size.width, entry.frame_size.height)?;
    }
    Ok(entries)
}

/// Lookup table keyed by video id.
pub fn index_manifest(entries: &[VideoManifest]) -> BTreeMap<&str, &VideoManifest> {
    entries.iter().map(|e| (e.video_id.as_str(), e)).collect()
}
