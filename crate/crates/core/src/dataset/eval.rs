use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::ImageAnnotations;
use crate::boxops::{iou, Detection};
use crate::{Error, Result};

/// Matching and integration rules, echoed in every report.
pub const PROTOCOL: &str = "single class; detections pooled and sorted by score desc, then image index, then x1; \
each detection takes the highest-iou unmatched ground truth of its image (ties to the earliest), TP if iou >= iou_thr; \
AP = all-points area under the precision envelope";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApReport {
    pub ap: f64,
    pub n_images: usize,
    pub n_gt: usize,
    pub n_det: usize,
    pub iou_thr: f64,
    /// `[recall, precision]` after each detection in ranked order.
    pub pr_curve: Vec<[f64; 2]>,
    pub protocol: String,
}

/// Average precision of pooled detections against ground truth.
///
/// `dets` maps image identifiers to their detections; every key must name
/// an image in `gts`. Images without an entry have no detections.
pub fn evaluate_map(
    gts: &[ImageAnnotations],
    dets: &BTreeMap<String, Vec<Detection>>,
    iou_thr: f64,
) -> Result<ApReport> {
    if !(iou_thr > 0.0 && iou_thr < 1.0) {
        return Err(Error::Parameter(format!("iou_thr must lie in (0, 1), got {iou_thr}")));
    }
    let index: HashMap<&str, usize> = gts.iter().enumerate().map(|(i, g)| (g.image_path.as_str(), i)).collect();
    let mut pooled: Vec<(usize, &Detection)> = Vec::new();
    for (id, list) in dets {
        let &img = index.get(id.as_str()).ok_or_else(|| Error::UnknownImage(id.clone()))?;
        pooled.extend(list.iter().map(|d| (img, d)));
    }
    pooled.sort_by(|(ia, a), (ib, b)| {
        b.score
            .total_cmp(&a.score)
            .then(ia.cmp(ib))
            .then_with(|| a.bbox.x1().total_cmp(&b.bbox.x1()))
            .then_with(|| {
                // Remaining coordinates only make the order total.
                let (ca, cb) = (a.bbox.coords(), b.bbox.coords());
                ca[1..].iter().zip(&cb[1..]).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
            })
    });

    let n_gt: usize = gts.iter().map(|g| g.boxes.len()).sum();
    let mut matched: Vec<Vec<bool>> = gts.iter().map(|g| vec![false; g.boxes.len()]).collect();
    let mut hits = Vec::with_capacity(pooled.len());
    for &(img, d) in &pooled {
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gts[img].boxes.iter().enumerate() {
            if matched[img][j] {
                continue;
            }
            let o = iou(&d.bbox, g);
            if best.is_none_or(|(_, b)| o > b) {
                best = Some((j, o));
            }
        }
        let tp = match best {
            Some((j, o)) if o >= iou_thr => {
                matched[img][j] = true;
                true
            }
            _ => false,
        };
        hits.push(tp);
    }

    let mut pr_curve = Vec::with_capacity(hits.len());
    let mut precision = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (i, &hit) in hits.iter().enumerate() {
        tp += hit as usize;
        let p = tp as f64 / (i + 1) as f64;
        let r = if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 };
        pr_curve.push([r, p]);
        precision.push(p);
    }
    // Recall rises by exactly 1/n_gt at each true positive, so the envelope
    // integral is the sum of enveloped precisions at those ranks over n_gt.
    let mut envelope = 0.0f64;
    let mut area = 0.0;
    for (i, &hit) in hits.iter().enumerate().rev() {
        envelope = envelope.max(precision[i]);
        if hit {
            area += envelope;
        }
    }
    let ap = if n_gt == 0 { 0.0 } else { area / n_gt as f64 };

    Ok(ApReport {
        ap,
        n_images: gts.len(),
        n_gt,
        n_det: pooled.len(),
        iou_thr,
        pr_curve,
        protocol: PROTOCOL.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxops::BBox;
    use proptest::prelude::*;

    fn gt(id: &str, boxes: &[[f64; 4]]) -> ImageAnnotations {
        ImageAnnotations {
            image_path: id.into(),
            width: 100,
            height: 100,
            boxes: boxes.iter().map(|c| BBox::new(c[0], c[1], c[2], c[3]).unwrap()).collect(),
        }
    }

    fn det(c: [f64; 4], s: f64) -> Detection {
        Detection::new(BBox::new(c[0], c[1], c[2], c[3]).unwrap(), s, "m")
    }

    fn dets(pairs: Vec<(&str, Vec<Detection>)>) -> BTreeMap<String, Vec<Detection>> {
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    const B: [f64; 4] = [10.0, 10.0, 30.0, 30.0];

    #[test]
    fn perfect_detector() {
        let r = evaluate_map(&[gt("a", &[B])], &dets(vec![("a", vec![det(B, 1.0)])]), 0.5).unwrap();
        assert_eq!(r.ap, 1.0);
        assert_eq!(r.pr_curve, vec![[1.0, 1.0]]);
    }

    #[test]
    fn no_detections() {
        let r = evaluate_map(&[gt("a", &[B])], &BTreeMap::new(), 0.5).unwrap();
        assert_eq!(r.ap, 0.0);
        assert_eq!((r.n_gt, r.n_det, r.n_images), (1, 0, 1));
    }

    #[test]
    fn trailing_false_positive_is_enveloped() {
        let far = [60.0, 60.0, 80.0, 80.0];
        let r = evaluate_map(&[gt("a", &[B])], &dets(vec![("a", vec![det(far, 0.5), det(B, 0.9)])]), 0.5).unwrap();
        assert_eq!(r.pr_curve, vec![[1.0, 1.0], [1.0, 0.5]]);
        assert_eq!(r.ap, 1.0);
    }

    #[test]
    fn leading_false_positive() {
        // Ranks: FP, TP; two GTs. Points (0, 0), (0.5, 0.5): AP = 0.25.
        let far = [60.0, 60.0, 80.0, 80.0];
        let g = gt("a", &[B, [0.0, 50.0, 5.0, 55.0]]);
        let r = evaluate_map(&[g], &dets(vec![("a", vec![det(far, 0.9), det(B, 0.5)])]), 0.5).unwrap();
        assert_eq!(r.ap, 0.25);
    }

    #[test]
    fn ground_truth_as_detections_is_exact() {
        let gts: Vec<_> = (0..7)
            .map(|i| {
                let boxes: Vec<[f64; 4]> =
                    (0..i).map(|j| [j as f64 * 10.0, 0.0, j as f64 * 10.0 + 7.0, 9.0]).collect();
                gt(&format!("im{i}"), &boxes)
            })
            .collect();
        let d: BTreeMap<String, Vec<Detection>> = gts
            .iter()
            .map(|g| (g.image_path.clone(), g.boxes.iter().map(|b| Detection::new(*b, 1.0, "gt")).collect()))
            .collect();
        assert_eq!(evaluate_map(&gts, &d, 0.5).unwrap().ap, 1.0);
    }

    #[test]
    fn duplicate_detection_is_false_positive() {
        let r = evaluate_map(&[gt("a", &[B])], &dets(vec![("a", vec![det(B, 0.9), det(B, 0.8)])]), 0.5).unwrap();
        assert_eq!(r.pr_curve[1], [1.0, 0.5]);
    }

    #[test]
    fn equal_iou_goes_to_earliest_gt() {
        // Two identical GTs; one detection matches the first, the second
        // detection then takes the other.
        let g = gt("a", &[B, B]);
        let r = evaluate_map(&[g], &dets(vec![("a", vec![det(B, 0.9), det(B, 0.8)])]), 0.5).unwrap();
        assert_eq!(r.ap, 1.0);
    }

    proptest! {
        #[test]
        fn antitone_in_threshold(
            g in proptest::collection::vec((0.0f64..80.0, 0.0f64..80.0, 4.0f64..20.0), 0..8),
            d in proptest::collection::vec((0.0f64..80.0, 0.0f64..80.0, 4.0f64..20.0, 0.0f64..1.0), 0..16),
            t1 in 0.05f64..0.95, t2 in 0.05f64..0.95,
        ) {
            let gts = [gt("a", &g.iter().map(|&(x, y, s)| [x, y, x + s, y + s]).collect::<Vec<_>>())];
            let ds = dets(vec![("a", d.iter().map(|&(x, y, s, sc)| det([x, y, x + s, y + s], sc)).collect())]);
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let a_lo = evaluate_map(&gts, &ds, lo).unwrap().ap;
            let a_hi = evaluate_map(&gts, &ds, hi).unwrap().ap;
            prop_assert!(a_hi <= a_lo + 1e-12, "{} > {}", a_hi, a_lo);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            evaluate_map(&[gt("a", &[B])], &dets(vec![("zzz", vec![])]), 0.5),
            Err(Error::UnknownImage(_))
        ));
        assert!(evaluate_map(&[], &BTreeMap::new(), 1.0).is_err());
    }
}
