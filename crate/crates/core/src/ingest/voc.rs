//! Pascal VOC annotation XML.
//!
//! One document describes one frame. Box coordinates are absolute pixels
//! and get normalized by the frame size here; out-of-range results are
//! preserved for the downstream filter to judge.

use roxmltree::{Document, Node};

use crate::error::{Error, Result};
use crate::geometry::{normalize, FrameSize};
use crate::ingest::{FrameIdentity, RawFrame, RawObject};

/// Parse one VOC document.
///
/// The frame identity comes from the `<filename>` element when present,
/// otherwise from `identity_fallback` (typically the annotation file's own
/// stem). The frame size likewise prefers the `<size>` element and falls
/// back to `size_fallback` (typically from the video manifest).
pub fn parse_voc(
    text: &str,
    size_fallback: Option<FrameSize>,
    identity_fallback: Option<&str>,
) -> Result<RawFrame> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        Error::Xml {
            offset: byte_offset(text, pos.row, pos.col),
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "annotation" {
        return Err(schema_err(
            None,
            format!("root element is <{}>, expected <annotation>", root.tag_name().name()),
        ));
    }

    let identity = match child_text(root, "filename") {
        Some(name) => FrameIdentity::from_name(name.trim())?,
        None => match identity_fallback {
            Some(name) => FrameIdentity::from_name(name)?,
            None => {
                return Err(schema_err(None, "missing <filename> and no fallback identity"));
            }
        },
    };

    let size = match root.children().find(|n| n.has_tag_name("size")) {
        Some(size_node) => {
            let width = required_u32(size_node, "width")?;
            let height = required_u32(size_node, "height")?;
            FrameSize::new(width, height)?
        }
        None => size_fallback.ok_or_else(|| {
            schema_err(Some(&identity.video_id), "missing <size> and no fallback frame size")
        })?,
    };

    let mut objects = Vec::new();
    for (index, object) in root
        .children()
        .filter(|n| n.has_tag_name("object"))
        .enumerate()
    {
        let context = format!("{} object {}", identity.video_id, index);
        let name = child_text(object, "name")
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| schema_err(Some(&context), "missing or empty <name>"))?;
        let bndbox = object
            .children()
            .find(|n| n.has_tag_name("bndbox"))
            .ok_or_else(|| schema_err(Some(&context), "missing <bndbox>"))?;
        let x_min = required_f64(bndbox, "xmin", &context)?;
        let y_min = required_f64(bndbox, "ymin", &context)?;
        let x_max = required_f64(bndbox, "xmax", &context)?;
        let y_max = required_f64(bndbox, "ymax", &context)?;
        let bbox = normalize(x_min, y_min, x_max, y_max, size)?;
        objects.push(RawObject {
            object_class: name.to_string(),
            bbox,
        });
    }

    Ok(RawFrame {
        video_id: identity.video_id,
        frame_index: identity.frame_index,
        objects,
    })
}

/// roxmltree reports 1-based line/column; recover the byte offset for
/// editors that jump by offset.
fn byte_offset(text: &str, row: u32, col: u32) -> usize {
    let mut line = 1u32;
    let mut column = 1u32;
    for (i, ch) in text.char_indices() {
        if line == row && column == col {
            return i;
        }
        if ch == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    text.len()
}

fn schema_err(context: Option<&str>, message: impl Into<String>) -> Error {
    Error::VocSchema {
        context: context.map(String::from),
        message: message.into(),
    }
}

fn child_text<'a>(node: Node<'a, 'a>, name: &str) -> Option<&'a str> {
    node.children()
        .find(|n| n.has_tag_name(name))
        .and_then(|n| n.text())
}

fn required_u32(node: Node, name: &str) -> Result<u32> {
    let text = child_text(node, name)
        .map(str::trim)
        .ok_or_else(|| schema_err(None, format!("missing <{name}>")))?;
    text.parse::<u32>()
        .map_err(|_| schema_err(None, format!("<{name}> is not an integer: '{text}'")))
}

fn required_f64(node: Node, name: &str, context: &str) -> Result<f64> {
    let text = child_text(node, name)
        .map(str::trim)
        .ok_or_else(|| schema_err(Some(context), format!("missing <{name}>")))?;
    let value = text
        .parse::<f64>()
        .map_err(|_| schema_err(Some(context), format!("<{name}> is not numeric: '{text}'")))?;
    if !value.is_finite() {
        return Err(schema_err(Some(context), format!("<{name}> is not finite")));
    }
    Ok(value)
}
