//! Normal-to-dark domain transfer: darken, add sensor-like noise, then run
//! the same retinex enhancement the low-light images receive.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::enhance::{msrcr, MsrcrConfig};
use crate::imgcore::Image;
use crate::rng::{derive_seed, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DarkenConfig {
    pub gamma_range: [f64; 2],
    /// Multiplicative dimming factor range.
    pub scale_range: [f64; 2],
    /// Signal-independent noise standard deviation.
    pub sigma_read: f64,
    /// Signal-dependent noise coefficient: variance grows as `sigma_shot² · v`.
    pub sigma_shot: f64,
    pub seed: u64,
}

impl Default for DarkenConfig {
    fn default() -> Self {
        DarkenConfig {
            gamma_range: [2.0, 3.5],
            scale_range: [0.1, 0.35],
            sigma_read: 0.02,
            sigma_shot: 0.06,
            seed: 0,
        }
    }
}

impl DarkenConfig {
    pub fn validate(&self) -> Result<()> {
        let [g_lo, g_hi] = self.gamma_range;
        if !(1.0 <= g_lo && g_lo <= g_hi && g_hi.is_finite()) {
            return Err(Error::Parameter(format!(
                "gamma range must satisfy 1 <= lo <= hi, got [{g_lo}, {g_hi}]"
            )));
        }
        let [s_lo, s_hi] = self.scale_range;
        if !(0.0 < s_lo && s_lo <= s_hi && s_hi <= 1.0) {
            return Err(Error::Parameter(format!(
                "scale range must satisfy 0 < lo <= hi <= 1, got [{s_lo}, {s_hi}]"
            )));
        }
        if !(self.sigma_read >= 0.0) || !(self.sigma_shot >= 0.0) {
            return Err(Error::Parameter("noise sigmas must be non-negative".into()));
        }
        Ok(())
    }
}

/// `scale · v^gamma` per sample.
pub fn darken(img: &Image, gamma: f64, scale: f64) -> Result<Image> {
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(Error::Parameter(format!("gamma must be >= 1, got {gamma}")));
    }
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::Parameter(format!("scale must lie in (0, 1], got {scale}")));
    }
    img.require_linear("darken")?;
    Ok(img.map(|v| scale * v.powf(gamma)))
}

/// Raw noise draws `n ~ N(0, sqrt(sigma_shot² · v + sigma_read²))`, one per
/// sample, in plane layout.
///
/// Draw order is row-major over pixels with the channel index varying
/// fastest, independent of the planar storage.
pub fn sample_noise<R: Rng + ?Sized>(img: &Image, cfg: &DarkenConfig, rng: &mut R) -> Vec<f64> {
    let n = img.pixel_count();
    let channels = img.channels();
    let data = img.data();
    let mut noise = vec![0.0; data.len()];
    let shot2 = cfg.sigma_shot * cfg.sigma_shot;
    let read2 = cfg.sigma_read * cfg.sigma_read;
    for p in 0..n {
        for c in 0..channels {
            let i = c * n + p;
            let z: f64 = rng.sample(StandardNormal);
            let std = (shot2 * data[i].max(0.0) + read2).sqrt();
            noise[i] = std * z;
        }
    }
    noise
}

/// Add heteroscedastic Gaussian noise and clamp into `[0, 1]`.
pub fn add_noise<R: Rng + ?Sized>(img: &Image, cfg: &DarkenConfig, rng: &mut R) -> Result<Image> {
    img.require_linear("add_noise")?;
    let noise = sample_noise(img, cfg, rng);
    let data = img
        .data()
        .iter()
        .zip(noise)
        .map(|(&v, n)| (v + n).clamp(0.0, 1.0))
        .collect();
    Image::new(img.width(), img.height(), img.channels(), data)
}

/// Parameters drawn for one image, for the run manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferParams {
    pub gamma: f64,
    pub scale: f64,
    /// Seed of the per-image stream the parameters and noise came from.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TransferOutput {
    pub image: Image,
    /// The darkened, noisy image before retinex enhancement.
    pub degraded: Image,
    pub params: TransferParams,
}

fn sample_range<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    let u: f64 = rng.random();
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * u
    }
}

/// Darken → noise → MSRCR for the image at `image_index`. All randomness
/// comes from the stream derived from `(cfg.seed, image_index)`: gamma is
/// drawn first, then scale, then the noise field.
pub fn transfer_pipeline(
    img: &Image,
    cfg: &DarkenConfig,
    msrcr_cfg: &MsrcrConfig,
    image_index: u64,
) -> Result<TransferOutput> {
    cfg.validate()?;
    img.require_rgb("transfer_pipeline")?;
    let mut rng = stream(cfg.seed, image_index);
    let gamma = sample_range(&mut rng, cfg.gamma_range);
    let scale = sample_range(&mut rng, cfg.scale_range);
    let dark = darken(img, gamma, scale)?;
    let degraded = add_noise(&dark, cfg, &mut rng)?;
    let image = msrcr(&degraded, msrcr_cfg)?;
    Ok(TransferOutput {
        image,
        degraded,
        params: TransferParams {
            gamma,
            scale,
            seed: derive_seed(cfg.seed, image_index),
        },
    })
}
