use serde::{Deserialize, Serialize};

use crate::imgcore::Image;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Weight of the saliency map in the blend.
    pub alpha: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { alpha: 0.3 }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Parameter(format!(
                "fusion alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// `alpha * saliency + (1 - alpha) * enhanced`, with the single-channel
/// saliency map broadcast over every channel of `enhanced`.
pub fn fuse_saliency(enhanced: &Image, saliency: &Image, cfg: &FusionConfig) -> Result<Image> {
    cfg.validate()?;
    if !enhanced.same_dimensions(saliency) {
        return Err(Error::Shape(format!(
            "saliency map is {}x{} but the enhanced image is {}x{}",
            saliency.width(),
            saliency.height(),
            enhanced.width(),
            enhanced.height()
        )));
    }
    if saliency.channels() != 1 {
        return Err(Error::Shape(format!(
            "saliency map must be single-channel, got {} channels",
            saliency.channels()
        )));
    }
    let a = cfg.alpha;
    let s = saliency.plane(0);
    let planes = enhanced
        .planes()
        .map(|p| p.iter().zip(s).map(|(&m, &s)| a * s + (1.0 - a) * m).collect())
        .collect();
    Image::from_planes(
        enhanced.width(),
        enhanced.height(),
        planes,
        enhanced.linear_range() && saliency.linear_range(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_alpha_blend() {
        let m = Image::filled(1, 1, 3, 0.0).unwrap();
        let s = Image::filled(1, 1, 1, 1.0).unwrap();
        let out = fuse_saliency(&m, &s, &FusionConfig::default()).unwrap();
        for &v in out.data() {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoints_are_identities() {
        let m = Image::from_fn(3, 2, 3, |x, y, c| (x + y + c) as f64 / 8.0).unwrap();
        let s = Image::from_fn(3, 2, 1, |x, y, _| (x * y) as f64 / 4.0).unwrap();
        let zero = fuse_saliency(&m, &s, &FusionConfig { alpha: 0.0 }).unwrap();
        assert_eq!(zero, m);
        let one = fuse_saliency(&m, &s, &FusionConfig { alpha: 1.0 }).unwrap();
        for plane in one.planes() {
            assert_eq!(plane, s.plane(0));
        }
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let m = Image::filled(3, 2, 3, 0.5).unwrap();
        let s = Image::filled(2, 3, 1, 0.5).unwrap();
        assert!(matches!(fuse_saliency(&m, &s, &FusionConfig::default()), Err(Error::Shape(_))));
        let rgb = Image::filled(3, 2, 3, 0.5).unwrap();
        assert!(matches!(fuse_saliency(&m, &rgb, &FusionConfig::default()), Err(Error::Shape(_))));
        assert!(fuse_saliency(&m, &Image::filled(3, 2, 1, 0.0).unwrap(), &FusionConfig { alpha: 1.5 }).is_err());
    }

    proptest! {
        #[test]
        fn output_is_convex_combination(alpha in 0.0f64..=1.0, s in 0.0f64..=1.0, m in 0.0f64..=1.0) {
            let mi = Image::filled(1, 1, 3, m).unwrap();
            let si = Image::filled(1, 1, 1, s).unwrap();
            let out = fuse_saliency(&mi, &si, &FusionConfig { alpha }).unwrap();
            for &v in out.data() {
                prop_assert!(v >= s.min(m) - 1e-15 && v <= s.max(m) + 1e-15);
            }
        }
    }
}
