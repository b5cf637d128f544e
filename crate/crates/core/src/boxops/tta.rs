use std::fmt;
use std::str::FromStr;

use super::{BBox, Detection};
use crate::{Error, Result};

/// Test-time augmentation kind, as named by prediction directories:
/// `identity`, `hflip`, or `scale_<factor>` (e.g. `scale_2`, `scale_0.5`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformKind {
    Identity,
    HFlip,
    Scale(f64),
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(TransformKind::Identity),
            "hflip" => Ok(TransformKind::HFlip),
            _ => {
                let factor = s
                    .strip_prefix("scale_")
                    .and_then(|f| f.parse::<f64>().ok())
                    .filter(|f| *f > 0.0 && f.is_finite())
                    .ok_or_else(|| Error::Usage(format!("unknown transform `{s}`")))?;
                Ok(TransformKind::Scale(factor))
            }
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformKind::Identity => f.write_str("identity"),
            TransformKind::HFlip => f.write_str("hflip"),
            TransformKind::Scale(s) => write!(f, "scale_{s}"),
        }
    }
}

/// A transform applied to the input image before prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Identity,
    /// Horizontal mirror of an image `width` pixels wide.
    HFlip { width: f64 },
    /// Uniform resize by `factor`.
    Scale { factor: f64 },
}

impl Transform {
    /// Resolve a directory-level kind; `hflip` needs the image width.
    pub fn resolve(kind: TransformKind, width: Option<f64>) -> Result<Transform> {
        match kind {
            TransformKind::Identity => Ok(Transform::Identity),
            TransformKind::Scale(factor) => Ok(Transform::Scale { factor }),
            TransformKind::HFlip => width
                .map(|width| Transform::HFlip { width })
                .ok_or_else(|| Error::Usage("hflip predictions need the image width".into())),
        }
    }

    /// Image-to-transformed-image mapping of one box (the forward direction,
    /// used to synthesize predictions on augmented inputs).
    pub fn forward(&self, b: &BBox) -> Result<BBox> {
        match *self {
            Transform::Identity => Ok(*b),
            Transform::HFlip { width } => BBox::new(width - b.x2(), b.y1(), width - b.x1(), b.y2()),
            Transform::Scale { factor } => {
                BBox::new(b.x1() * factor, b.y1() * factor, b.x2() * factor, b.y2() * factor)
            }
        }
    }

    /// Map a box predicted on the transformed image back to the original.
    pub fn inverse(&self, b: &BBox) -> Result<BBox> {
        match *self {
            Transform::Identity => Ok(*b),
            // The mirror is an involution.
            Transform::HFlip { .. } => self.forward(b),
            Transform::Scale { factor } => {
                BBox::new(b.x1() / factor, b.y1() / factor, b.x2() / factor, b.y2() / factor)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Transform::HFlip { width } if !(width > 0.0) => {
                Err(Error::Parameter(format!("hflip width must be positive, got {width}")))
            }
            Transform::Scale { factor } if !(factor > 0.0) => {
                Err(Error::Parameter(format!("scale factor must be positive, got {factor}")))
            }
            _ => Ok(()),
        }
    }
}

/// Map detections made on a transformed image back into original image
/// coordinates. Scores and labels are untouched.
pub fn tta_backmap(dets: &[Detection], transform: Transform) -> Result<Vec<Detection>> {
    transform.validate()?;
    dets.iter()
        .enumerate()
        .map(|(i, d)| {
            let bbox = transform.inverse(&d.bbox).map_err(|e| {
                Error::InvalidBox(format!("detection {i} ({:?}) after {transform:?}: {e}", d.bbox.coords()))
            })?;
            Ok(Detection { bbox, ..d.clone() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(x1: f64, y1: f64, x2: f64, y2: f64) -> Detection {
        Detection::new(BBox::new(x1, y1, x2, y2).unwrap(), 0.5, "m")
    }

    #[test]
    fn hflip_formula() {
        let out = tta_backmap(&[det(10.0, 20.0, 30.0, 40.0)], Transform::HFlip { width: 100.0 }).unwrap();
        assert_eq!(out[0].bbox.coords(), [70.0, 20.0, 90.0, 40.0]);
        assert_eq!(out[0].score, 0.5);
    }

    #[test]
    fn scale_divides() {
        let out = tta_backmap(&[det(20.0, 20.0, 40.0, 40.0)], Transform::Scale { factor: 2.0 }).unwrap();
        assert_eq!(out[0].bbox.coords(), [10.0, 10.0, 20.0, 20.0]);
    }

    #[test]
    fn identity_is_identity() {
        let d = vec![det(1.0, 2.0, 3.0, 4.0)];
        assert_eq!(tta_backmap(&d, Transform::Identity).unwrap(), d);
    }

    #[test]
    fn parameters_and_overflowing_results_are_rejected() {
        let d = [det(1.0, 2.0, 3.0, 4.0)];
        assert!(tta_backmap(&d, Transform::HFlip { width: 0.0 }).is_err());
        assert!(tta_backmap(&d, Transform::Scale { factor: -1.0 }).is_err());
        // An astronomically small factor overflows to infinity.
        match tta_backmap(&[det(1e300, 0.0, 2e300, 1.0)], Transform::Scale { factor: 1e-300 }) {
            Err(Error::InvalidBox(msg)) => assert!(msg.contains("detection 0")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn directory_names() {
        assert_eq!("identity".parse::<TransformKind>().unwrap(), TransformKind::Identity);
        assert_eq!("hflip".parse::<TransformKind>().unwrap(), TransformKind::HFlip);
        assert_eq!("scale_0.5".parse::<TransformKind>().unwrap(), TransformKind::Scale(0.5));
        for bad in ["vflip", "scale_", "scale_-2", "scale_x"] {
            assert!(bad.parse::<TransformKind>().is_err(), "{bad}");
        }
        assert_eq!(TransformKind::Scale(1.5).to_string(), "scale_1.5");
        assert!(Transform::resolve(TransformKind::HFlip, None).is_err());
    }

    proptest! {
        #[test]
        fn hflip_is_an_involution(x in 0.0f64..500.0, y in 0.0f64..500.0, w in 0.5f64..100.0, h in 0.5f64..100.0, width in 600.0f64..2000.0) {
            let d = [det(x, y, x + w, y + h)];
            let t = Transform::HFlip { width };
            let twice = tta_backmap(&tta_backmap(&d, t).unwrap(), t).unwrap();
            for (a, b) in twice[0].bbox.coords().iter().zip(d[0].bbox.coords()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
