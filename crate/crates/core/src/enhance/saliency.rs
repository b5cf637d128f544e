//! Spectral-residual saliency.
//!
//! The log-amplitude spectrum of a small grayscale copy is compared with its
//! 3×3 local average; the residual, recombined with the original phase and
//! transformed back, highlights statistically unexpected image content.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::imgcore::{gaussian_blur, resize_bilinear, to_grayscale, Image};
use crate::{Error, Result};

/// Width of the working copy the spectrum is computed on.
pub const SALIENCY_WIDTH: usize = 64;
pub const DEFAULT_SMOOTH_SIGMA: f64 = 2.5;
const MIN_SIDE: usize = 8;
/// Amplitude floor relative to the mean amplitude. Keeps the log finite and
/// scale equivariant; without it the exact spectral zeros of synthetic
/// inputs dominate the residual.
const AMPLITUDE_FLOOR: f64 = 1e-2;

fn fft2(data: &mut [Complex<f64>], w: usize, h: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = data[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            data[y * w + x] = col[y];
        }
    }
}

/// 3×3 mean with periodic wrap, matching the periodicity of the spectrum.
fn box3_periodic(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in [h - 1, 0, 1] {
                for dx in [w - 1, 0, 1] {
                    acc += src[((y + dy) % h) * w + (x + dx) % w];
                }
            }
            out[y * w + x] = acc / 9.0;
        }
    }
    out
}

fn min_max_normalize(values: &mut [f64]) {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi > lo {
        let span = hi - lo;
        values.iter_mut().for_each(|v| *v = (*v - lo) / span);
    } else {
        values.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Single-channel saliency map in `[0, 1]` at the input's resolution.
///
/// A flat input has no residual and yields an all-zero map.
pub fn spectral_saliency(img: &Image, smooth_sigma: f64) -> Result<Image> {
    if img.width() < MIN_SIDE || img.height() < MIN_SIDE {
        return Err(Error::Size(format!(
            "saliency needs at least {MIN_SIDE}x{MIN_SIDE} pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    if !(smooth_sigma > 0.0) {
        return Err(Error::Parameter(format!(
            "saliency smoothing sigma must be positive, got {smooth_sigma}"
        )));
    }
    let gray = if img.channels() == 3 {
        to_grayscale(img)?
    } else {
        img.clone()
    };
    let w = SALIENCY_WIDTH;
    let h = ((img.height() as f64 * w as f64 / img.width() as f64).round() as usize).max(1);
    let small = resize_bilinear(&gray, w, h)?;

    let (lo, hi) = small
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Image::filled(img.width(), img.height(), 1, 0.0);
    }

    let mut spectrum: Vec<Complex<f64>> = small.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut spectrum, w, h, false);
    let mean_amp = spectrum.iter().map(|z| z.norm()).sum::<f64>() / spectrum.len() as f64;
    let floor = mean_amp * AMPLITUDE_FLOOR;
    let log_amp: Vec<f64> = spectrum.iter().map(|z| (z.norm() + floor).ln()).collect();
    let phase: Vec<f64> = spectrum.iter().map(|z| z.arg()).collect();
    let avg = box3_periodic(&log_amp, w, h);
    for (i, z) in spectrum.iter_mut().enumerate() {
        *z = Complex::from_polar((log_amp[i] - avg[i]).exp(), phase[i]);
    }
    fft2(&mut spectrum, w, h, true);
    let energy: Vec<f64> = spectrum.iter().map(|z| z.norm_sqr()).collect();

    let energy = Image::unbounded(w, h, 1, energy)?;
    let smooth = gaussian_blur(&energy, smooth_sigma)?;
    let full = resize_bilinear(&smooth, img.width(), img.height())?;
    let mut values = full.into_data();
    min_max_normalize(&mut values);
    Image::new(img.width(), img.height(), 1, values)
}
