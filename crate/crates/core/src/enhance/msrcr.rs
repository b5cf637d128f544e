//! Multi-scale retinex with color restoration.
//!
//! Per channel `i` and surround scale `n`:
//!
//! ```text
//! MSR_i = Σ_n w_n · [ln(I_i + ε) − ln(G_σn * I_i + ε)]
//! CRF_i = β · [ln(α·I_i + ε) − ln(I_R + I_G + I_B + ε)]
//! out_i = balance(MSR_i · CRF_i)
//! ```
//!
//! where `balance` clips each channel at its `clip_fraction` and
//! `1 − clip_fraction` quantiles and stretches linearly onto `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::imgcore::{gaussian_blur, Image};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsrcrConfig {
    /// Surround Gaussian sigmas in pixels, strictly increasing.
    pub scales: Vec<f64>,
    /// Per-scale weights; must sum to 1.
    pub weights: Vec<f64>,
    /// Color-restoration gain.
    pub alpha_c: f64,
    /// Color-restoration slope.
    pub beta: f64,
    pub epsilon: f64,
    /// Mass clipped from each tail before the final stretch.
    pub clip_fraction: f64,
}

impl Default for MsrcrConfig {
    fn default() -> Self {
        MsrcrConfig {
            scales: vec![15.0, 80.0, 250.0],
            weights: vec![1.0 / 3.0; 3],
            alpha_c: 125.0,
            beta: 46.0,
            epsilon: 1e-6,
            clip_fraction: 0.01,
        }
    }
}

impl MsrcrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::Parameter("msrcr needs at least one scale".into()));
        }
        if self.weights.len() != self.scales.len() {
            return Err(Error::Parameter(format!(
                "{} scales but {} weights",
                self.scales.len(),
                self.weights.len()
            )));
        }
        if self.scales.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Parameter("msrcr scales must be positive".into()));
        }
        if self.scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("msrcr scales must be strictly increasing".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("msrcr weights sum to {total}, not 1")));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Parameter("msrcr epsilon must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.clip_fraction) {
            return Err(Error::Parameter(format!(
                "clip_fraction must lie in [0, 0.5), got {}",
                self.clip_fraction
            )));
        }
        Ok(())
    }
}

/// Multi-scale retinex output before color restoration and balancing.
pub fn multi_scale_retinex(img: &Image, cfg: &MsrcrConfig) -> Result<Image> {
    cfg.validate()?;
    img.require_rgb("msrcr")?;
    img.require_linear("msrcr")?;
    let eps = cfg.epsilon;
    let log_in: Vec<f64> = img.data().iter().map(|&v| (v + eps).ln()).collect();
    let mut acc = vec![0.0; log_in.len()];
    for (&sigma, &weight) in cfg.scales.iter().zip(&cfg.weights) {
        let surround = gaussian_blur(img, sigma)?;
        for ((a, &l), &s) in acc.iter_mut().zip(&log_in).zip(surround.data()) {
            *a += weight * (l - (s + eps).ln());
        }
    }
    Image::unbounded(img.width(), img.height(), 3, acc)
}

/// Chromatic restoration factor per channel.
pub fn color_restoration(img: &Image, cfg: &MsrcrConfig) -> Result<Image> {
    img.require_rgb("color_restoration")?;
    let eps = cfg.epsilon;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let log_sum: Vec<f64> = (0..img.pixel_count())
        .map(|i| (r[i] + g[i] + b[i] + eps).ln())
        .collect();
    let planes = img
        .planes()
        .map(|p| {
            p.iter()
                .zip(&log_sum)
                .map(|(&v, &ls)| cfg.beta * ((cfg.alpha_c * v + eps).ln() - ls))
                .collect()
        })
        .collect();
    Image::from_planes(img.width(), img.height(), planes, false)
}

/// Order statistic at rank `k` of `values` (0-based).
fn order_stat(values: &mut [f64], k: usize) -> f64 {
    let (_, v, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    *v
}

/// Clip spans at or below this are treated as a flat channel.
const FLAT_SPAN: f64 = 1e-9;

/// Per-channel quantile clip and stretch onto `[0, 1]`. A channel whose clip
/// bounds coincide (span ≤ 1e-9) maps to 0.5 everywhere.
pub fn simplest_color_balance(img: &Image, clip_fraction: f64) -> Result<Image> {
    if !(0.0..0.5).contains(&clip_fraction) {
        return Err(Error::Parameter(format!(
            "clip_fraction must lie in [0, 0.5), got {clip_fraction}"
        )));
    }
    let n = img.pixel_count();
    let lo_rank = ((clip_fraction * n as f64).floor() as usize).min(n - 1);
    let hi_rank = (((1.0 - clip_fraction) * n as f64).ceil() as usize)
        .saturating_sub(1)
        .max(lo_rank);
    let planes = img
        .planes()
        .map(|p| {
            let mut scratch = p.to_vec();
            let lo = order_stat(&mut scratch, lo_rank);
            let hi = order_stat(&mut scratch, hi_rank);
            if !(hi - lo > FLAT_SPAN) {
                return vec![0.5; n];
            }
            let span = hi - lo;
            p.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
        })
        .collect();
    Image::from_planes(img.width(), img.height(), planes, true)
}

pub fn msrcr(img: &Image, cfg: &MsrcrConfig) -> Result<Image> {
    let msr = multi_scale_retinex(img, cfg)?;
    let crf = color_restoration(img, cfg)?;
    let product: Vec<f64> = msr
        .data()
        .iter()
        .zip(crf.data())
        .map(|(m, c)| m * c)
        .collect();
    let product = Image::unbounded(img.width(), img.height(), 3, product)?;
    simplest_color_balance(&product, cfg.clip_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> MsrcrConfig {
        MsrcrConfig {
            scales: vec![2.0, 6.0, 20.0],
            ..MsrcrConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        MsrcrConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            MsrcrConfig { scales: vec![], weights: vec![], ..Default::default() },
            MsrcrConfig { scales: vec![80.0, 15.0, 250.0], ..Default::default() },
            MsrcrConfig { weights: vec![0.5, 0.5, 0.5], ..Default::default() },
            MsrcrConfig { clip_fraction: 0.5, ..Default::default() },
            MsrcrConfig { scales: vec![-1.0, 2.0, 3.0], ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn constant_image_has_zero_retinex_and_flat_output() {
        let img = Image::filled(24, 16, 3, 0.4).unwrap();
        let msr = multi_scale_retinex(&img, &small_cfg()).unwrap();
        assert!(msr.data().iter().all(|v| v.abs() < 1e-12));
        let out = msrcr(&img, &small_cfg()).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.5));
        assert!(out.linear_range());
    }

    #[test]
    fn gray_pixels_share_the_restoration_factor() {
        // CRF = 46 ln(125 v + eps) - 46 ln(3 v + eps) -> 46 ln(125/3) = 171.566
        // for v >> eps.
        for v in [0.05, 0.5, 0.9] {
            let img = Image::filled(1, 1, 3, v).unwrap();
            let crf = color_restoration(&img, &MsrcrConfig::default()).unwrap();
            let expected = 46.0 * ((125.0 * v + 1e-6_f64).ln() - (3.0 * v + 1e-6_f64).ln());
            for &c in crf.data() {
                assert!((c - expected).abs() < 1e-9);
                assert!((c - 46.0 * (125.0f64 / 3.0).ln()).abs() < 1e-3);
            }
        }
        assert!((46.0 * (125.0f64 / 3.0).ln() - 171.566).abs() < 1e-3);
    }

    #[test]
    fn grayscale_input_is_a_shape_error() {
        let img = Image::filled(8, 8, 1, 0.3).unwrap();
        assert!(matches!(msrcr(&img, &small_cfg()), Err(Error::Shape(_))));
    }

    #[test]
    fn retinex_cancels_exposure_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = Image::from_fn(32, 24, 3, |_, _, _| rng.random_range(0.05..1.0)).unwrap();
        let dim = img.map(|v| 0.25 * v);
        let a = multi_scale_retinex(&img, &small_cfg()).unwrap();
        let b = multi_scale_retinex(&dim, &small_cfg()).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-3);
        }
    }

    #[test]
    fn color_balance_hits_both_ends() {
        let img = Image::unbounded(100, 1, 1, (0..100).map(|i| i as f64 * 3.0 - 7.0).collect()).unwrap();
        let out = simplest_color_balance(&img, 0.01).unwrap();
        let d = out.data();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[98], 1.0);
        assert_eq!(d[99], 1.0);
        assert!(d[50] > 0.0 && d[50] < 1.0);
        let zero_clip = simplest_color_balance(&img, 0.0).unwrap();
        assert_eq!(zero_clip.data()[0], 0.0);
        assert_eq!(zero_clip.data()[99], 1.0);
        assert!(zero_clip.data()[1] > 0.0);
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = Image::from_fn(20, 20, 3, |_, _, _| rng.random::<f64>()).unwrap();
        assert_eq!(msrcr(&img, &small_cfg()).unwrap(), msrcr(&img, &small_cfg()).unwrap());
    }
}
