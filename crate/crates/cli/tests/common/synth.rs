//! Seeded synthetic detection corpus: ground truth plus simulated detectors
//! that see every face with coordinate jitter and score noise, and add
//! false positives.

use nightforge::boxops::{BBox, Detection};
use nightforge::dataset::ImageAnnotations;
use nightforge::rng::stream;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub const WIDTH: f64 = 1024.0;
pub const HEIGHT: f64 = 768.0;

pub struct Corpus {
    pub gts: Vec<ImageAnnotations>,
    /// `preds[model][image]`.
    pub preds: Vec<Vec<Vec<Detection>>>,
}

fn random_box(rng: &mut impl Rng) -> BBox {
    let w = (12.0f64).max(rng.random_range(2.5f64..4.8).exp());
    let h = w * rng.random_range(1.0..1.4);
    let x = rng.random_range(0.0..WIDTH - w);
    let y = rng.random_range(0.0..HEIGHT - h);
    BBox::new(x, y, x + w, y + h).unwrap()
}

pub fn corpus(seed: u64, images: usize, max_faces: usize, models: usize, jitter: f64, fp_rate: f64) -> Corpus {
    let mut rng = stream(seed, 0);
    let gts: Vec<ImageAnnotations> = (0..images)
        .map(|i| {
            let n = rng.random_range(1..=max_faces);
            ImageAnnotations {
                image_path: format!("img{i:04}.png"),
                width: WIDTH as usize,
                height: HEIGHT as usize,
                boxes: (0..n).map(|_| random_box(&mut rng)).collect(),
            }
        })
        .collect();
    let noise = Normal::new(0.0f64, jitter).unwrap();
    let tp_score = Normal::new(0.75f64, 0.15).unwrap();
    let fp_score = Normal::new(0.45f64, 0.15).unwrap();
    let preds = (0..models)
        .map(|m| {
            let mut rng = stream(seed, 1 + m as u64);
            let id = format!("det{m}");
            gts.iter()
                .map(|g| {
                    let mut dets = Vec::new();
                    for b in &g.boxes {
                        let [x1, y1, x2, y2] = b.coords().map(|c| c + noise.sample(&mut rng));
                        let bbox = BBox::new(x1, y1, x2.max(x1 + 1.0), y2.max(y1 + 1.0)).unwrap();
                        let s = tp_score.sample(&mut rng).clamp(0.01, 1.0);
                        dets.push(Detection::new(bbox, s, id.clone()));
                    }
                    let n_fp = (fp_rate * g.boxes.len() as f64).round() as usize;
                    for _ in 0..n_fp {
                        let s = fp_score.sample(&mut rng).clamp(0.01, 1.0);
                        dets.push(Detection::new(random_box(&mut rng), s, id.clone()));
                    }
                    dets
                })
                .collect()
        })
        .collect();
    Corpus { gts, preds }
}
