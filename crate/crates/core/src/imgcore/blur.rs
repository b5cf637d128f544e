//! Separable Gaussian filtering with edge-replicated borders.
//!
//! Small kernels run as a direct sliding sum. Large kernels (the retinex
//! surrounds reach sigma = 250, a 1501-tap kernel) are applied through FFT
//! convolution of the edge-padded lines, which computes the same truncated
//! kernel, so the two routes agree to rounding error.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::Image;
use crate::{Error, Result};

/// Kernels with at most this radius run through the direct route.
const DIRECT_MAX_RADIUS: usize = 32;

/// Sampled, truncated and normalized 1-D Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    sigma: f64,
    radius: usize,
    /// Taps for offsets `-radius..=radius`.
    weights: Vec<f64>,
}

impl KernelSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!(
                "gaussian sigma must be positive and finite, got {sigma}"
            )));
        }
        let radius = (3.0 * sigma).ceil() as usize;
        let denom = 2.0 * sigma * sigma;
        let raw: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let d = i as f64 - radius as f64;
                (-d * d / denom).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.into_iter().map(|w| w / total).collect();
        Ok(KernelSpec {
            sigma,
            radius,
            weights,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at signed offset `d` from the center, zero outside the support.
    pub fn weight_at(&self, d: isize) -> f64 {
        let r = self.radius as isize;
        if d < -r || d > r {
            0.0
        } else {
            self.weights[(d + r) as usize]
        }
    }
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    let kernel = KernelSpec::new(sigma)?;
    if kernel.radius <= DIRECT_MAX_RADIUS {
        Ok(blur_with(img, |plane, w, h| blur_plane_direct(plane, w, h, &kernel)))
    } else {
        let mut fft = FftLineFilter::new(&kernel);
        Ok(blur_with(img, |plane, w, h| fft.blur_plane(plane, w, h)))
    }
}

/// Reference route: direct separable convolution regardless of kernel size.
pub fn gaussian_blur_direct(img: &Image, sigma: f64) -> Result<Image> {
    let kernel = KernelSpec::new(sigma)?;
    Ok(blur_with(img, |plane, w, h| blur_plane_direct(plane, w, h, &kernel)))
}

fn blur_with(img: &Image, mut f: impl FnMut(&[f64], usize, usize) -> Vec<f64>) -> Image {
    let (w, h) = (img.width(), img.height());
    let planes = img.planes().map(|p| f(p, w, h)).collect();
    Image::from_planes(w, h, planes, img.linear_range()).expect("blur preserves shape")
}

fn transpose(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = src[y * w + x];
        }
    }
    out
}

fn blur_plane_direct(plane: &[f64], w: usize, h: usize, k: &KernelSpec) -> Vec<f64> {
    let rows = direct_lines(plane, w, h, k);
    let cols = direct_lines(&transpose(&rows, w, h), h, w, k);
    transpose(&cols, h, w)
}

fn direct_lines(src: &[f64], len: usize, lines: usize, k: &KernelSpec) -> Vec<f64> {
    let r = k.radius as isize;
    let last = len as isize - 1;
    let mut out = vec![0.0; src.len()];
    for (line, dst) in src.chunks_exact(len).zip(out.chunks_exact_mut(len)).take(lines) {
        for (i, o) in dst.iter_mut().enumerate() {
            let i = i as isize;
            let mut acc = 0.0;
            for (t, &wt) in k.weights.iter().enumerate() {
                let j = (i + t as isize - r).clamp(0, last) as usize;
                acc += wt * line[j];
            }
            *o = acc;
        }
    }
    out
}

/// FFT-backed line filter. Lines are edge-padded by the kernel radius so the
/// circular convolution never wraps into the samples we keep, and two real
/// lines travel through each complex transform (real and imaginary parts).
struct FftLineFilter<'k> {
    kernel: &'k KernelSpec,
    planner: FftPlanner<f64>,
    cache: Option<(usize, Plan)>,
}

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_spectrum: Vec<f64>,
}

impl<'k> FftLineFilter<'k> {
    fn new(kernel: &'k KernelSpec) -> Self {
        FftLineFilter {
            kernel,
            planner: FftPlanner::new(),
            cache: None,
        }
    }

    fn plan(&mut self, size: usize) -> &Plan {
        if self.cache.as_ref().map(|(n, _)| *n) != Some(size) {
            let forward = self.planner.plan_fft_forward(size);
            let inverse = self.planner.plan_fft_inverse(size);
            let r = self.kernel.radius as isize;
            let mut taps = vec![Complex::new(0.0, 0.0); size];
            for d in -r..=r {
                taps[d.rem_euclid(size as isize) as usize].re = self.kernel.weight_at(d);
            }
            forward.process(&mut taps);
            // Symmetric real kernel: the spectrum is real. Fold in the 1/N of
            // the unnormalized inverse transform.
            let norm = 1.0 / size as f64;
            let kernel_spectrum = taps.iter().map(|c| c.re * norm).collect();
            self.cache = Some((
                size,
                Plan {
                    forward,
                    inverse,
                    kernel_spectrum,
                },
            ));
        }
        &self.cache.as_ref().unwrap().1
    }

    fn blur_plane(&mut self, plane: &[f64], w: usize, h: usize) -> Vec<f64> {
        let rows = self.lines(plane, w, h);
        let cols = self.lines(&transpose(&rows, w, h), h, w);
        transpose(&cols, h, w)
    }

    fn lines(&mut self, src: &[f64], len: usize, lines: usize) -> Vec<f64> {
        let r = self.kernel.radius;
        let size = fast_fft_len(len + 2 * r);
        let plan = self.plan(size);
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        let mut scratch =
            vec![Complex::new(0.0, 0.0); plan.forward.get_inplace_scratch_len().max(plan.inverse.get_inplace_scratch_len())];
        let mut out = vec![0.0; src.len()];
        let mut line_idx = 0;
        while line_idx < lines {
            let a = &src[line_idx * len..(line_idx + 1) * len];
            let b = (line_idx + 1 < lines).then(|| &src[(line_idx + 1) * len..(line_idx + 2) * len]);
            for (j, slot) in buf.iter_mut().enumerate() {
                if j < len + 2 * r {
                    let s = (j as isize - r as isize).clamp(0, len as isize - 1) as usize;
                    *slot = Complex::new(a[s], b.map_or(0.0, |b| b[s]));
                } else {
                    *slot = Complex::new(0.0, 0.0);
                }
            }
            plan.forward.process_with_scratch(&mut buf, &mut scratch);
            for (z, &k) in buf.iter_mut().zip(&plan.kernel_spectrum) {
                *z *= k;
            }
            plan.inverse.process_with_scratch(&mut buf, &mut scratch);
            let dst = &mut out[line_idx * len..(line_idx + 1) * len];
            for (i, o) in dst.iter_mut().enumerate() {
                *o = buf[i + r].re;
            }
            if b.is_some() {
                let dst = &mut out[(line_idx + 1) * len..(line_idx + 2) * len];
                for (i, o) in dst.iter_mut().enumerate() {
                    *o = buf[i + r].im;
                }
            }
            line_idx += 2;
        }
        out
    }
}

/// Smallest length ≥ `n` of the form 2^a·3^b·5^c.
fn fast_fft_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}
