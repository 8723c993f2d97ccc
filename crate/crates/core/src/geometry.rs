//! Normalized bounding boxes and the geometric primitives built on them.
//!
//! All coordinates inside the toolkit are unitless fractions of the frame
//! width/height. Pixel-based inputs are normalized once at the ingest
//! boundary and everything downstream works on [`BBox`].

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A validated, normalized, axis-aligned bounding box.
///
/// Invariants: `0 <= x_min < x_max <= 1` and `0 <= y_min < y_max <= 1`,
/// so width and height are strictly positive. Construct through
/// [`BBox::new`]; a value of this type always satisfies the invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

/// An unvalidated corner quad straight out of a parser.
///
/// Raw boxes may exceed `[0, 1]` or have inverted corners; the ingest
/// filter decides what becomes a [`BBox`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

/// Pixel dimensions of a video frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSize {
    pub width: u32,
    pub height: u32,
}

impl FrameSize {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(Error::InvalidFrameSize { width, height });
        }
        Ok(Self { width, height })
    }
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let reject = |reason: &str| Error::InvalidBox {
            x_min,
            y_min,
            x_max,
            y_max,
            reason: reason.to_string(),
        };
        if !(x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite()) {
            return Err(reject("coordinates must be finite"));
        }
        if x_min < 0.0 || y_min < 0.0 || x_max > 1.0 || y_max > 1.0 {
            return Err(reject("coordinates must lie in [0, 1]"));
        }
        if x_min >= x_max {
            return Err(reject("x_min must be < x_max"));
        }
        if y_min >= y_max {
            return Err(reject("y_min must be < y_max"));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Normalized area, in (0, 1].
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Aspect ratio width/height.
    pub fn aspect_ratio(&self) -> f64 {
        self.width() / self.height()
    }

    /// Center point `((x_min + x_max) / 2, (y_min + y_max) / 2)`.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    /// Intersection over union with `other`.
    ///
    /// Returns a ratio in `[0, 1]`; disjoint boxes give 0, and boxes are
    /// treated as closed rectangles whose zero-area contact (a shared edge
    /// or corner) also counts as 0.
    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let iy = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        let intersection = ix * iy;
        if intersection <= 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - intersection;
        intersection / union
    }

    pub fn as_raw(&self) -> RawBox {
        RawBox {
            x_min: self.x_min,
            y_min: self.y_min,
            x_max: self.x_max,
            y_max: self.y_max,
        }
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

impl RawBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// Validate into a [`BBox`].
    pub fn validate(&self) -> Result<BBox> {
        BBox::new(self.x_min, self.y_min, self.x_max, self.y_max)
    }
}

/// Normalize a pixel-coordinate rectangle against the frame size.
///
/// Divides x coordinates by the frame width and y coordinates by the frame
/// height. Deliberately does not clamp: out-of-range pixel coordinates come
/// out as out-of-range fractions for the ingest filter policy to handle.
/// A rectangle with zero width or height is rejected here because no filter
/// policy can repair it.
pub fn normalize(
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    size: FrameSize,
) -> Result<RawBox> {
    let w = f64::from(size.width);
    let h = f64::from(size.height);
    let raw = RawBox::new(x_min / w, y_min / h, x_max / w, y_max / h);
    let degenerate = |axis: &str| Error::DegenerateBox {
        context: "pixel rectangle".to_string(),
        axis: axis.to_string(),
    };
    if !(raw.x_min.is_finite() && raw.y_min.is_finite() && raw.x_max.is_finite() && raw.y_max.is_finite()) {
        return Err(degenerate("extent (non-finite coordinates)"));
    }
    if raw.x_max - raw.x_min <= 0.0 {
        return Err(degenerate("width"));
    }
    if raw.y_max - raw.y_min <= 0.0 {
        return Err(degenerate("height"));
    }
    Ok(raw)
}

// Boxes cross serialization boundaries as [x_min, y_min, x_max, y_max];
// deserialization re-validates so no invalid box can enter through JSON.
impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.corners().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x_min, y_min, x_max, y_max] = <[f64; 4]>::deserialize(deserializer)?;
        BBox::new(x_min, y_min, x_max, y_max).map_err(D::Error::custom)
    }
}
