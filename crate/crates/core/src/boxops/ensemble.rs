use super::{soft_nms, tta_backmap, wbf, Detection, FusionParams, Transform};
use crate::Result;

/// Predictions of one model under one test-time transform, in the
/// coordinates of the transformed image.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub model_id: String,
    pub transform: Transform,
    pub detections: Vec<Detection>,
}

/// Full fusion stack for one image: each leaf is mapped back to original
/// coordinates and passed through Soft-NMS, then all leaves are fused with
/// WBF, each leaf counting as one model.
pub fn ensemble(leaves: &[Leaf], p: &FusionParams) -> Result<Vec<Detection>> {
    let per_leaf = leaves
        .iter()
        .map(|leaf| {
            let mapped = tta_backmap(&leaf.detections, leaf.transform)?;
            soft_nms(&mapped, p)
        })
        .collect::<Result<Vec<_>>>()?;
    wbf(&per_leaf, p)
}
