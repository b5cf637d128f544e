//! Zero-reference curve enhancement.
//!
//! Light enhancement is modelled as `n` applications of the quadratic curve
//! `x ← x + A·x·(1 − x)` with a spatially varying, per-channel parameter map
//! `A ∈ [−1, 1]`. The maps live on a coarse grid that is bilinearly
//! upsampled to the image, and are fitted per image by projected gradient
//! descent against four non-reference losses (exposure, color constancy,
//! spatial consistency and illumination smoothness).

mod curve;
mod format;
mod loss;
mod optimize;

pub use curve::{apply_curve, CurveMap};
pub use loss::{dce_loss, loss_and_gradient, DceLossConfig, LossBreakdown};
pub use optimize::{optimize_curve, CurveFit, OptimizeConfig};
