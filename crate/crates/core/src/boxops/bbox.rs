use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Class id of the single "face" class.
pub const FACE_LABEL: u32 = 0;

/// Axis-aligned box in pixel coordinates with strictly positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let b = BBox { x1, y1, x2, y2 };
        if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidBox(format!("non-finite coordinates {b:?}")));
        }
        if !(x2 > x1 && y2 > y1) {
            return Err(Error::InvalidBox(format!(
                "[{x1}, {y1}, {x2}, {y2}] has no positive area"
            )));
        }
        Ok(b)
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Intersection with the rectangle `[x0, x1) × [y0, y1)`; `None` when
    /// nothing with positive area remains.
    pub fn clip(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> Option<BBox> {
        BBox::new(self.x1.max(x0), self.y1.max(y0), self.x2.min(x1), self.y2.min(y1)).ok()
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox {
            x1: self.x1 + dx,
            y1: self.y1 + dy,
            x2: self.x2 + dx,
            y2: self.y2 + dy,
        }
    }

    /// Scale x and y coordinates independently. Panics on non-positive
    /// factors, which would break the area invariant.
    pub fn scale(&self, sx: f64, sy: f64) -> BBox {
        assert!(sx > 0.0 && sy > 0.0, "box scale factors must be positive");
        BBox {
            x1: self.x1 * sx,
            y1: self.y1 * sy,
            x2: self.x2 * sx,
            y2: self.y2 * sy,
        }
    }
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    (inter / (a.area() + b.area() - inter)).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
    pub model_id: String,
    pub label: u32,
}

impl Detection {
    pub fn new(bbox: BBox, score: f64, model_id: impl Into<String>) -> Self {
        Detection {
            bbox,
            score,
            model_id: model_id.into(),
            label: FACE_LABEL,
        }
    }
}

/// The module-wide detection order: score descending, then box coordinates
/// ascending (`x1`, `y1`, `x2`, `y2`).
pub fn detection_order(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.bbox.x1.total_cmp(&b.bbox.x1))
        .then_with(|| a.bbox.y1.total_cmp(&b.bbox.y1))
        .then_with(|| a.bbox.x2.total_cmp(&b.bbox.x2))
        .then_with(|| a.bbox.y2.total_cmp(&b.bbox.y2))
}
