//! Image representation and the low-level raster operations shared by every
//! enhancement stage.

mod blur;
mod color;
mod png_io;
mod resize;

pub use blur::{gaussian_blur, gaussian_blur_direct, KernelSpec};
pub use color::to_grayscale;
pub use png_io::{decode_png, encode_png, read_png_dimensions};
pub use resize::{resize_bilinear, ResampleAxis};
pub(crate) use resize::resample_plane;

use crate::{Error, Result};

/// Planar floating-point raster.
///
/// Samples are stored channel-major: `data[c * width * height + y * width + x]`.
/// Values are nominally in `[0, 1]`; intermediate results that may leave that
/// range (log-domain retinex output, for example) carry `linear_range = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
    linear_range: bool,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_range(width, height, channels, data, true)
    }

    /// Raster whose samples are not guaranteed to lie in `[0, 1]`.
    pub fn unbounded(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_range(width, height, channels, data, false)
    }

    fn with_range(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
        linear_range: bool,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!(
                "images carry 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "{width}x{height}x{channels} image needs {} samples, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
            linear_range,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Build an image from per-pixel closure `f(x, y, c)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    /// Assemble single-channel planes of equal size into one image.
    pub fn from_planes(width: usize, height: usize, planes: Vec<Vec<f64>>, linear_range: bool) -> Result<Self> {
        let channels = planes.len();
        let data = planes.concat();
        Self::with_range(width, height, channels, data, linear_range)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn linear_range(&self) -> bool {
        self.linear_range
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn planes(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.pixel_count())
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[c * self.pixel_count() + y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn same_dimensions(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Clamp every sample into `[0, 1]`, marking the result as in range.
    pub fn clamped(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            linear_range: true,
        }
    }

    /// Apply `f` to every sample. The result keeps this image's range flag.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
            linear_range: self.linear_range,
        }
    }

    /// Rectangular sub-image with top-left corner `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Shape(format!(
                "crop {w}x{h}+{x0}+{y0} does not fit a {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for plane in self.planes() {
            for y in y0..y0 + h {
                data.extend_from_slice(&plane[y * self.width + x0..y * self.width + x0 + w]);
            }
        }
        Image::with_range(w, h, self.channels, data, self.linear_range)
    }

    pub(crate) fn require_rgb(&self, op: &str) -> Result<()> {
        if self.channels != 3 {
            return Err(Error::Shape(format!(
                "{op} requires a 3-channel image, got {} channel(s)",
                self.channels
            )));
        }
        Ok(())
    }

    pub(crate) fn require_linear(&self, op: &str) -> Result<()> {
        if !self.linear_range {
            return Err(Error::Range(format!(
                "{op} requires an image whose samples lie in [0, 1]"
            )));
        }
        Ok(())
    }
}
