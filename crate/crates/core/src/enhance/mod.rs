//! Retinex enhancement, saliency extraction and their blend.
//!
//! The usual chain is [`msrcr`] on the dark input, [`spectral_saliency`] on
//! the enhanced result, then [`fuse_saliency`] to overlay the saliency map
//! with weight `alpha` (0.3 by default).

mod fusion;
mod msrcr;
mod saliency;

pub use fusion::{fuse_saliency, FusionConfig};
pub use msrcr::{color_restoration, msrcr, multi_scale_retinex, simplest_color_balance, MsrcrConfig};
pub use saliency::{spectral_saliency, DEFAULT_SMOOTH_SIGMA, SALIENCY_WIDTH};
