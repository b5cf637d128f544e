//! Detection boxes and the ensemble stack: IoU, hard NMS, Soft-NMS,
//! weighted boxes fusion and test-time-augmentation merging.
//!
//! Every ordering in this module uses the same total order on detections:
//! score descending, then `x1`, `y1`, `x2`, `y2` ascending. Fusion results
//! are therefore independent of input order.

mod bbox;
mod ensemble;
mod io;
mod nms;
mod tta;
mod wbf;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use bbox::{detection_order, iou, BBox, Detection, FACE_LABEL};
pub use ensemble::{ensemble, Leaf};
pub use io::{format_detections, parse_detections, read_detections, write_detections};
pub use nms::{nms, soft_nms};
pub use tta::{tta_backmap, Transform, TransformKind};
pub use wbf::{wbf, FUSED_MODEL_ID};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoftNmsMethod {
    Linear,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    pub iou_thr_nms: f64,
    pub soft_nms_method: SoftNmsMethod,
    pub soft_nms_sigma: f64,
    pub soft_nms_iou: f64,
    pub soft_nms_score_floor: f64,
    pub wbf_iou: f64,
    pub wbf_skip_score: f64,
    /// Score multiplier per model id; models not listed weigh 1.
    pub model_weights: BTreeMap<String, f64>,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            iou_thr_nms: 0.5,
            soft_nms_method: SoftNmsMethod::Linear,
            soft_nms_sigma: 0.5,
            soft_nms_iou: 0.3,
            soft_nms_score_floor: 0.001,
            wbf_iou: 0.55,
            wbf_skip_score: 0.0,
            model_weights: BTreeMap::new(),
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("iou_thr_nms", self.iou_thr_nms),
            ("soft_nms_iou", self.soft_nms_iou),
            ("soft_nms_score_floor", self.soft_nms_score_floor),
            ("wbf_iou", self.wbf_iou),
            ("wbf_skip_score", self.wbf_skip_score),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.soft_nms_sigma > 0.0) {
            return Err(Error::Parameter(format!(
                "soft_nms_sigma must be positive, got {}",
                self.soft_nms_sigma
            )));
        }
        if let Some((id, w)) = self.model_weights.iter().find(|(_, &w)| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Parameter(format!("weight of model `{id}` must be positive, got {w}")));
        }
        Ok(())
    }

    pub fn weight_of(&self, model_id: &str) -> f64 {
        self.model_weights.get(model_id).copied().unwrap_or(1.0)
    }
}
