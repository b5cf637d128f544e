use rand::Rng;
use serde::Serialize;

use super::ImageAnnotations;
use crate::rng::stream;
use crate::{Error, Result};

pub const HISTOGRAM_BIN_WIDTH: f64 = 4.0;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorReport {
    /// Bin `i` counts faces with width in `[4i, 4i + 4)`.
    pub histogram: Vec<usize>,
    /// Cluster centers (widths, px), ascending.
    pub centers: Vec<f64>,
    /// Faces assigned to each center.
    pub populations: Vec<usize>,
    pub total_faces: usize,
    pub iterations: usize,
}

fn nearest(centers: &[f64], w: f64) -> usize {
    let mut best = 0;
    for (j, c) in centers.iter().enumerate().skip(1) {
        if (w - c).abs() < (w - centers[best]).abs() {
            best = j;
        }
    }
    best
}

fn kmeans_pp(widths: &[f64], k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut centers = vec![widths[rng.random_range(0..widths.len())]];
    let mut d2: Vec<f64> = widths.iter().map(|w| (w - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        // Fall back to the last point with positive weight if rounding runs
        // the target past the end.
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("enough distinct widths");
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = widths[pick];
        centers.push(c);
        for (d, w) in d2.iter_mut().zip(widths) {
            *d = d.min((w - c).powi(2));
        }
    }
    centers
}

/// Face-width histogram and 1-D k-means anchor widths over all boxes.
///
/// Centers start from seeded k-means++ and are refined by Lloyd iterations
/// until the assignment stops changing, for at most
/// [`MAX_LLOYD_ITERATIONS`] rounds. A cluster that empties keeps its center.
pub fn anchor_stats(anns: &[ImageAnnotations], k: usize, seed: u64) -> Result<AnchorReport> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let widths: Vec<f64> = anns.iter().flat_map(|a| a.boxes.iter().map(|b| b.width())).collect();
    let mut distinct = widths.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::Parameter(format!(
            "k = {k} clusters need at least {k} distinct face widths, found {}",
            distinct.len()
        )));
    }

    let max_bin = widths.iter().map(|w| (w / HISTOGRAM_BIN_WIDTH) as usize).max().unwrap_or(0);
    let mut histogram = vec![0; max_bin + 1];
    for w in &widths {
        histogram[(w / HISTOGRAM_BIN_WIDTH) as usize] += 1;
    }

    let mut centers = kmeans_pp(&widths, k, &mut stream(seed, 0));
    let mut assign: Vec<usize> = widths.iter().map(|&w| nearest(&centers, w)).collect();
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&a, &w) in assign.iter().zip(&widths) {
            sums[a] += w;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j] / counts[j] as f64;
            }
        }
        let next: Vec<usize> = widths.iter().map(|&w| nearest(&centers, w)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }

    let mut populations = vec![0; k];
    for &a in &assign {
        populations[a] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
    Ok(AnchorReport {
        histogram,
        centers: order.iter().map(|&j| centers[j]).collect(),
        populations: order.iter().map(|&j| populations[j]).collect(),
        total_faces: widths.len(),
        iterations,
    })
}
