//! Filesystem loaders for annotation directories.
//!
//! Directory walks are sorted by path so a run over the same tree always
//! sees files in the same order.

use std::fs;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::ingest::manifest::{index_manifest, VideoManifest};
use crate::ingest::{parse_voc, parse_yolo_labels, ClassTable, FrameIdentity, RawFrame};

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn files_with_extension(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| dir.to_path_buf());
            match e.into_io_error() {
                Some(source) => Error::File { path, source },
                None => Error::FileFormat {
                    path,
                    message: "walk cycle".to_string(),
                },
            }
        })?;
        if entry.file_type().is_file()
            && entry
                .path()
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case(extension))
        {
            paths.push(entry.into_path());
        }
    }
    paths.sort();
    Ok(paths)
}

fn file_stem(path: &Path) -> Option<&str> {
    path.file_stem().and_then(|s| s.to_str())
}

/// Load every `.xml` document under `dir`.
///
/// The manifest, when given, supplies a frame-size fallback for documents
/// missing `<size>`. The fallback is looked up by the identity in the file
/// stem; a document whose `<filename>` points at a different video only
/// loses the fallback, not the parse.
pub fn load_voc_dir(dir: &Path, manifest: Option<&[VideoManifest]>) -> Result<Vec<RawFrame>> {
    let index = manifest.map(index_manifest);
    let mut frames = Vec::new();
    for path in files_with_extension(dir, "xml")? {
        let text = read_file(&path)?;
        let stem = file_stem(&path);
        let size_fallback = stem
            .and_then(|s| FrameIdentity::from_name(s).ok())
            .and_then(|id| {
                index
                    .as_ref()
                    .and_then(|ix| ix.get(id.video_id.as_str()))
                    .map(|m| m.frame_size)
            });
        let frame = parse_voc(&text, size_fallback, stem).map_err(|e| annotate(&path, e))?;
        frames.push(frame);
    }
    Ok(frames)
}

/// Load every `.txt` label file under `dir`, skipping any file named after
/// the class table itself.
pub fn load_yolo_dir(dir: &Path, classes: &ClassTable) -> Result<Vec<RawFrame>> {
    let mut frames = Vec::new();
    for path in files_with_extension(dir, "txt")? {
        let stem = file_stem(&path).unwrap_or_default();
        if stem.eq_ignore_ascii_case("classes") {
            continue;
        }
        let identity = FrameIdentity::from_name(stem).map_err(|e| annotate(&path, e))?;
        let text = read_file(&path)?;
        let frame = parse_yolo_labels(&text, classes, identity).map_err(|e| annotate(&path, e))?;
        frames.push(frame);
    }
    Ok(frames)
}

pub fn load_class_table(path: &Path) -> Result<ClassTable> {
    ClassTable::parse(&read_file(path)?).map_err(|e| annotate(path, e))
}

/// Wrap a parse error with the file it came from, unless it already names one.
fn annotate(path: &Path, error: Error) -> Error {
    match error {
        e @ (Error::File { .. } | Error::FileFormat { .. } | Error::Io(_)) => e,
        e => Error::FileFormat {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    }
}
