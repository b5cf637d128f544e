use super::{detection_order, iou, Detection, FusionParams, SoftNmsMethod};
use crate::{Error, Result};

/// Index of the first detection that is greatest under [`detection_order`].
fn best_index(pool: &[Detection]) -> usize {
    let mut best = 0;
    for i in 1..pool.len() {
        if detection_order(&pool[i], &pool[best]).is_lt() {
            best = i;
        }
    }
    best
}

/// Classic greedy NMS: keep the best box, delete everything overlapping it
/// by more than `iou_thr`, repeat.
pub fn nms(dets: &[Detection], iou_thr: f64) -> Vec<Detection> {
    let mut sorted = dets.to_vec();
    sorted.sort_by(detection_order);
    let mut keep: Vec<Detection> = Vec::new();
    for d in sorted {
        if keep.iter().all(|k| iou(&k.bbox, &d.bbox) <= iou_thr) {
            keep.push(d);
        }
    }
    keep
}

/// Soft-NMS over the detections of one model.
///
/// Repeatedly moves the best remaining detection to the output and decays
/// the scores of the rest by their overlap with it: linear decay
/// `s·(1 − iou)` above `soft_nms_iou`, or gaussian decay
/// `s·exp(−iou² / soft_nms_sigma)` everywhere. Detections whose score falls
/// below `soft_nms_score_floor` are discarded.
pub fn soft_nms(dets: &[Detection], p: &FusionParams) -> Result<Vec<Detection>> {
    p.validate()?;
    if let Some(first) = dets.first() {
        if let Some(other) = dets.iter().find(|d| d.model_id != first.model_id) {
            return Err(Error::Usage(format!(
                "soft_nms runs per model, got detections from `{}` and `{}`",
                first.model_id, other.model_id
            )));
        }
    }
    let mut pool: Vec<Detection> = dets
        .iter()
        .filter(|d| d.score >= p.soft_nms_score_floor)
        .cloned()
        .collect();
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let best = pool.remove(best_index(&pool));
        for d in &mut pool {
            let overlap = iou(&best.bbox, &d.bbox);
            match p.soft_nms_method {
                SoftNmsMethod::Linear => {
                    if overlap > p.soft_nms_iou {
                        d.score *= 1.0 - overlap;
                    }
                }
                SoftNmsMethod::Gaussian => {
                    d.score *= (-(overlap * overlap) / p.soft_nms_sigma).exp();
                }
            }
        }
        pool.retain(|d| d.score >= p.soft_nms_score_floor);
        out.push(best);
    }
    Ok(out)
}
