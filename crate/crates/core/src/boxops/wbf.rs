use super::{detection_order, iou, BBox, Detection, FusionParams};
use crate::Result;

/// Model id carried by fused detections.
pub const FUSED_MODEL_ID: &str = "wbf";

struct Cluster {
    members: Vec<Detection>,
    fused: BBox,
    score: f64,
}

impl Cluster {
    fn new(d: Detection) -> Self {
        Cluster {
            fused: d.bbox,
            score: d.score,
            members: vec![d],
        }
    }

    fn refit(&mut self) {
        let total: f64 = self.members.iter().map(|m| m.score).sum();
        let n = self.members.len() as f64;
        let mut acc = [0.0; 4];
        for m in &self.members {
            // All-zero clusters fall back to the plain average.
            let w = if total > 0.0 { m.score / total } else { 1.0 / n };
            for (a, c) in acc.iter_mut().zip(m.bbox.coords()) {
                *a += w * c;
            }
        }
        // The mean lies in the members' hull; clamp away rounding drift.
        for (k, a) in acc.iter_mut().enumerate() {
            let (lo, hi) = self.members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
                let c = m.bbox.coords()[k];
                (lo.min(c), hi.max(c))
            });
            *a = a.clamp(lo, hi);
        }
        self.fused = BBox::new(acc[0], acc[1], acc[2], acc[3]).unwrap_or(self.members[0].bbox);
        self.score = total / n;
    }
}

/// Weighted boxes fusion across the detection lists of `T` models.
///
/// Scores are multiplied by their model's weight, the pooled detections are
/// visited in [`detection_order`], and each joins the existing cluster whose
/// fused box overlaps it most if that overlap exceeds `wbf_iou`. A cluster's
/// box is the score-weighted mean of its members; its score is the mean
/// member score rescaled by `min(members, T) / T` (capped at 1).
pub fn wbf(dets_per_model: &[Vec<Detection>], p: &FusionParams) -> Result<Vec<Detection>> {
    p.validate()?;
    let models = dets_per_model.len();
    let mut pool: Vec<Detection> = dets_per_model
        .iter()
        .flatten()
        .filter(|d| d.score >= p.wbf_skip_score)
        .map(|d| Detection {
            score: d.score * p.weight_of(&d.model_id),
            ..d.clone()
        })
        .collect();
    pool.sort_by(detection_order);

    let mut clusters: Vec<Cluster> = Vec::new();
    for d in pool {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in clusters.iter().enumerate() {
            let o = iou(&c.fused, &d.bbox);
            if best.is_none_or(|(_, b)| o > b) {
                best = Some((i, o));
            }
        }
        match best {
            Some((i, o)) if o > p.wbf_iou => {
                clusters[i].members.push(d);
                clusters[i].refit();
            }
            _ => clusters.push(Cluster::new(d)),
        }
    }

    let mut out: Vec<Detection> = clusters
        .into_iter()
        .map(|c| {
            let size = c.members.len().min(models) as f64;
            Detection {
                bbox: c.fused,
                score: (c.score * size / models as f64).min(1.0),
                model_id: FUSED_MODEL_ID.to_string(),
                label: c.members[0].label,
            }
        })
        .collect();
    out.sort_by(detection_order);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(x1: f64, y1: f64, x2: f64, y2: f64, s: f64, m: &str) -> Detection {
        Detection::new(BBox::new(x1, y1, x2, y2).unwrap(), s, m)
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(wbf(&[], &FusionParams::default()).unwrap().is_empty());
        assert!(wbf(&[vec![], vec![]], &FusionParams::default()).unwrap().is_empty());
    }

    #[test]
    fn singleton_passes_through() {
        let out = wbf(&[vec![det(1.0, 2.0, 3.0, 4.0, 0.7, "a")]], &FusionParams::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].bbox.coords(), [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(out[0].score, 0.7);
    }

    #[test]
    fn coincident_boxes_average_scores() {
        let out = wbf(
            &[vec![det(0.0, 0.0, 10.0, 10.0, 0.6, "a")], vec![det(0.0, 0.0, 10.0, 10.0, 0.8, "b")]],
            &FusionParams::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].bbox.coords(), [0.0, 0.0, 10.0, 10.0]);
        assert!((out[0].score - 0.7).abs() < 1e-12);
    }

    #[test]
    fn shifted_pair_fuses_by_weighted_mean() {
        // iou = 81 / 119 ≈ 0.6807 > 0.55; weights 0.6/0.8 and 0.2/0.8.
        let out = wbf(
            &[vec![det(0.0, 0.0, 10.0, 10.0, 0.6, "a")], vec![det(1.0, 1.0, 11.0, 11.0, 0.2, "b")]],
            &FusionParams::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        for (got, want) in out[0].bbox.coords().iter().zip([0.25, 0.25, 10.25, 10.25]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((out[0].score - 0.4).abs() < 1e-12);
    }

    #[test]
    fn lone_box_among_models_is_down_weighted() {
        let out = wbf(
            &[vec![det(0.0, 0.0, 10.0, 10.0, 0.9, "a")], vec![], vec![]],
            &FusionParams::default(),
        )
        .unwrap();
        assert!((out[0].score - 0.3).abs() < 1e-12);
    }

    #[test]
    fn model_weights_scale_scores() {
        let mut p = FusionParams::default();
        p.model_weights.insert("a".into(), 0.5);
        let out = wbf(&[vec![det(0.0, 0.0, 1.0, 1.0, 0.8, "a")]], &p).unwrap();
        assert!((out[0].score - 0.4).abs() < 1e-12);
    }

    #[test]
    fn skip_threshold_drops_weak_boxes() {
        let p = FusionParams { wbf_skip_score: 0.5, ..Default::default() };
        let out = wbf(&[vec![det(0.0, 0.0, 1.0, 1.0, 0.4, "a"), det(5.0, 5.0, 6.0, 6.0, 0.6, "a")]], &p).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].score, 0.6);
    }

    fn arb_models() -> impl Strategy<Value = Vec<Vec<Detection>>> {
        prop::collection::vec(
            prop::collection::vec((0.0f64..60.0, 0.0f64..60.0, 2.0f64..25.0, 2.0f64..25.0, 0.01f64..=1.0), 0..12),
            1..4,
        )
        .prop_map(|models| {
            models
                .into_iter()
                .enumerate()
                .map(|(m, v)| {
                    v.into_iter()
                        .map(|(x, y, w, h, s)| det(x, y, x + w, y + h, s, &format!("m{m}")))
                        .collect()
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn fused_boxes_lie_in_member_hull(models in arb_models()) {
            let out = wbf(&models, &FusionParams::default()).unwrap();
            let all: Vec<&Detection> = models.iter().flatten().collect();
            let lo = |k: usize| all.iter().map(|d| d.bbox.coords()[k]).fold(f64::INFINITY, f64::min);
            let hi = |k: usize| all.iter().map(|d| d.bbox.coords()[k]).fold(f64::NEG_INFINITY, f64::max);
            for o in &out {
                for k in 0..4 {
                    prop_assert!(o.bbox.coords()[k] >= lo(k) - 1e-9 && o.bbox.coords()[k] <= hi(k) + 1e-9);
                }
                prop_assert!((0.0..=1.0).contains(&o.score));
            }
        }

        #[test]
        fn separated_single_model_is_identity(n in 1usize..10, s in prop::collection::vec(0.01f64..1.0, 10)) {
            let dets: Vec<Detection> = (0..n)
                .map(|i| det(i as f64 * 20.0, 0.0, i as f64 * 20.0 + 10.0, 10.0, s[i], "a"))
                .collect();
            let mut out = wbf(std::slice::from_ref(&dets), &FusionParams::default()).unwrap();
            let mut expected = dets;
            expected.sort_by(detection_order);
            out.iter_mut().for_each(|d| d.model_id = "a".into());
            prop_assert_eq!(out, expected);
        }

        #[test]
        fn permutation_invariant(models in arb_models()) {
            let p = FusionParams::default();
            let reversed: Vec<Vec<Detection>> = models.iter().rev().map(|v| v.iter().rev().cloned().collect()).collect();
            prop_assert_eq!(wbf(&models, &p).unwrap(), wbf(&reversed, &p).unwrap());
        }
    }
}
