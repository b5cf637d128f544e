use super::Image;
use crate::Result;

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Single-channel luma `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(img: &Image) -> Result<Image> {
    img.require_rgb("to_grayscale")?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let luma = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b)
        .collect();
    Image::from_planes(img.width(), img.height(), vec![luma], img.linear_range())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use proptest::prelude::*;

    fn rgb(r: f64, g: f64, b: f64) -> Image {
        Image::new(1, 1, 3, vec![r, g, b]).unwrap()
    }

    #[test]
    fn white_maps_to_one() {
        let g = to_grayscale(&rgb(1.0, 1.0, 1.0)).unwrap();
        assert!((g.data()[0] - 1.0).abs() < 1e-15);
        assert_eq!(g.channels(), 1);
    }

    #[test]
    fn pure_red_is_red_weight() {
        let g = to_grayscale(&rgb(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(g.data()[0], 0.299);
    }

    #[test]
    fn rejects_single_channel() {
        let img = Image::filled(2, 2, 1, 0.5).unwrap();
        assert!(matches!(to_grayscale(&img), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn matches_scalar_formula_and_stays_in_range(r in 0.0f64..=1.0, g in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let out = to_grayscale(&rgb(r, g, b)).unwrap().data()[0];
            let expected = 0.299 * r + 0.587 * g + 0.114 * b;
            prop_assert!((out - expected).abs() < 1e-15);
            prop_assert!((0.0..=1.0 + 1e-15).contains(&out));
        }
    }
}
