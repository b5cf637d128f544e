use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ImageAnnotations;
use crate::imgcore::{resize_bilinear, Image};
use crate::{Error, Result};

/// Allowed multi-scale training sizes, from `min` to `max` (`[w, h]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiScaleRange {
    pub min: [usize; 2],
    pub max: [usize; 2],
}

impl Default for MultiScaleRange {
    fn default() -> Self {
        MultiScaleRange {
            min: [2160, 1440],
            max: [4320, 2880],
        }
    }
}

impl MultiScaleRange {
    pub fn validate(&self) -> Result<()> {
        if self.min.contains(&0) || self.min[0] > self.max[0] || self.min[1] > self.max[1] {
            return Err(Error::Parameter(format!("bad multi-scale range {:?}..{:?}", self.min, self.max)));
        }
        Ok(())
    }

    pub fn contains(&self, target: [usize; 2]) -> bool {
        (0..2).all(|i| (self.min[i]..=self.max[i]).contains(&target[i]))
    }

    /// Draw a target by interpolating uniformly between `min` and `max`,
    /// with one shared parameter for both axes so the aspect ratio follows
    /// the range.
    pub fn sample(&self, rng: &mut impl Rng) -> [usize; 2] {
        let t: f64 = rng.random();
        let lerp = |i: usize| {
            let (lo, hi) = (self.min[i] as f64, self.max[i] as f64);
            ((lo + t * (hi - lo)).round() as usize).clamp(self.min[i], self.max[i])
        };
        [lerp(0), lerp(1)]
    }
}

fn check_pair(ann: &ImageAnnotations, img: &Image) -> Result<()> {
    if ann.width != img.width() || ann.height != img.height() {
        return Err(Error::Shape(format!(
            "annotations for {} describe {}x{}, image is {}x{}",
            ann.image_path,
            ann.width,
            ann.height,
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Resize an image to `target` (`[w, h]`) and scale its boxes to match.
/// Range checks against a [`MultiScaleRange`] are left to the caller.
pub fn resize_with_boxes(
    ann: &ImageAnnotations,
    img: &Image,
    target: [usize; 2],
) -> Result<(Image, ImageAnnotations)> {
    check_pair(ann, img)?;
    let [tw, th] = target;
    let out = resize_bilinear(img, tw, th)?;
    let (sx, sy) = (tw as f64 / ann.width as f64, th as f64 / ann.height as f64);
    let boxes = ann.boxes.iter().map(|b| b.scale(sx, sy)).collect();
    Ok((
        out,
        ImageAnnotations {
            image_path: ann.image_path.clone(),
            width: tw,
            height: th,
            boxes,
        },
    ))
}

/// Output of [`crop_with_boxes`].
#[derive(Debug, Clone)]
pub struct Crop {
    pub image: Image,
    pub annotations: ImageAnnotations,
    /// Top-left corner of the crop in the source image.
    pub origin: (usize, usize),
    /// Set when the requested size exceeded the image and was reduced.
    pub clamped: bool,
}

/// Minimum fraction of a box's area that must survive clipping.
const MIN_RETAINED_AREA: f64 = 0.3;

/// Random `crop_w × crop_h` crop with a uniformly drawn origin.
///
/// Boxes are moved into the crop frame. A box is dropped if its center falls
/// outside the crop or if clipping leaves less than 30% of its area; the
/// rest are clipped to the crop.
pub fn crop_with_boxes(
    ann: &ImageAnnotations,
    img: &Image,
    crop_w: usize,
    crop_h: usize,
    rng: &mut impl Rng,
) -> Result<Crop> {
    check_pair(ann, img)?;
    if crop_w == 0 || crop_h == 0 {
        return Err(Error::Parameter(format!("crop size must be positive, got {crop_w}x{crop_h}")));
    }
    let clamped = crop_w > img.width() || crop_h > img.height();
    let cw = crop_w.min(img.width());
    let ch = crop_h.min(img.height());
    let x0 = rng.random_range(0..=img.width() - cw);
    let y0 = rng.random_range(0..=img.height() - ch);
    let image = img.crop(x0, y0, cw, ch)?;
    let (fw, fh) = (cw as f64, ch as f64);
    let boxes = ann
        .boxes
        .iter()
        .filter_map(|b| {
            let moved = b.translate(-(x0 as f64), -(y0 as f64));
            let (cx, cy) = moved.center();
            if !(0.0..=fw).contains(&cx) || !(0.0..=fh).contains(&cy) {
                return None;
            }
            let clipped = moved.clip(0.0, 0.0, fw, fh)?;
            (clipped.area() >= MIN_RETAINED_AREA * b.area()).then_some(clipped)
        })
        .collect();
    Ok(Crop {
        image,
        annotations: ImageAnnotations {
            image_path: ann.image_path.clone(),
            width: cw,
            height: ch,
            boxes,
        },
        origin: (x0, y0),
        clamped,
    })
}
