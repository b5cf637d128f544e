use super::Image;
use crate::{Error, Result};

/// Half-pixel-center interpolation taps along one axis.
///
/// Output sample `i` reads source position `(i + 0.5) * src / dst - 0.5`,
/// clamped to the source extent, and blends its two neighbours.
#[derive(Debug, Clone)]
pub struct ResampleAxis {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
    pub frac: Vec<f64>,
}

impl ResampleAxis {
    pub fn new(src: usize, dst: usize) -> Self {
        let scale = src as f64 / dst as f64;
        let last = (src - 1) as f64;
        let mut axis = ResampleAxis {
            lo: Vec::with_capacity(dst),
            hi: Vec::with_capacity(dst),
            frac: Vec::with_capacity(dst),
        };
        for i in 0..dst {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = pos.floor() as usize;
            axis.lo.push(lo);
            axis.hi.push((lo + 1).min(src - 1));
            axis.frac.push(pos - lo as f64);
        }
        axis
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }
}

/// Resample one plane of `sw × sh` samples to `dw × dh`.
pub(crate) fn resample_plane(plane: &[f64], sw: usize, xs: &ResampleAxis, ys: &ResampleAxis) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for ((&y0, &y1), &fy) in ys.lo.iter().zip(&ys.hi).zip(&ys.frac) {
        let (r0, r1) = (&plane[y0 * sw..], &plane[y1 * sw..]);
        for ((&x0, &x1), &fx) in xs.lo.iter().zip(&xs.hi).zip(&xs.frac) {
            let top = r0[x0] * (1.0 - fx) + r0[x1] * fx;
            let bottom = r1[x0] * (1.0 - fx) + r1[x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Bilinear resize with half-pixel-center alignment.
pub fn resize_bilinear(img: &Image, new_w: usize, new_h: usize) -> Result<Image> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::Parameter(format!(
            "resize target must be at least 1x1, got {new_w}x{new_h}"
        )));
    }
    if new_w == img.width() && new_h == img.height() {
        return Ok(img.clone());
    }
    let xs = ResampleAxis::new(img.width(), new_w);
    let ys = ResampleAxis::new(img.height(), new_h);
    let planes = img
        .planes()
        .map(|p| resample_plane(p, img.width(), &xs, &ys))
        .collect();
    Image::from_planes(new_w, new_h, planes, img.linear_range())
}
