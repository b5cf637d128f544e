use rand::seq::SliceRandom;
use serde::Serialize;

use super::ImageAnnotations;
use crate::rng::stream;
use crate::{Error, Result};

/// Face-count groups. Images without faces get a group of their own.
pub const BUCKET_NAMES: [&str; 6] = ["0", "1-2", "3-5", "6-10", "11-20", "21+"];

pub fn bucket_index(faces: usize) -> usize {
    match faces {
        0 => 0,
        1..=2 => 1,
        3..=5 => 2,
        6..=10 => 3,
        11..=20 => 4,
        _ => 5,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub bucket: String,
    pub size: usize,
    pub n_val: usize,
    /// Validation members in the order they were drawn.
    pub val: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitResult {
    /// Training identifiers, in input order.
    pub train: Vec<String>,
    /// Validation identifiers, in input order.
    pub val: Vec<String>,
    /// One entry per non-empty group.
    pub groups: Vec<GroupReport>,
}

fn validation_count(size: usize, fraction: f64) -> usize {
    match size {
        0 | 1 => 0,
        _ => ((fraction * size as f64).round() as usize).clamp(1, size),
    }
}

/// Split images into train and validation sets, drawing
/// `round(val_fraction · size)` validation members from each face-count
/// group (at least one for groups of two or more, none for singletons).
/// Group `g` is shuffled with the stream for `(seed, g)`.
pub fn stratified_split(anns: &[ImageAnnotations], val_fraction: f64, seed: u64) -> Result<SplitResult> {
    if anns.is_empty() {
        return Err(Error::Empty("no images to split".into()));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Parameter(format!("val_fraction must lie in (0, 1), got {val_fraction}")));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); BUCKET_NAMES.len()];
    for (i, a) in anns.iter().enumerate() {
        members[bucket_index(a.boxes.len())].push(i);
    }
    let mut is_val = vec![false; anns.len()];
    let mut groups = Vec::new();
    for (g, mut idx) in members.into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let n_val = validation_count(idx.len(), val_fraction);
        idx.shuffle(&mut stream(seed, g as u64));
        let chosen = &idx[..n_val];
        for &i in chosen {
            is_val[i] = true;
        }
        groups.push(GroupReport {
            bucket: BUCKET_NAMES[g].to_string(),
            size: idx.len(),
            n_val,
            val: chosen.iter().map(|&i| anns[i].image_path.clone()).collect(),
        });
    }
    let (val, train): (Vec<_>, Vec<_>) = anns.iter().zip(&is_val).partition(|(_, v)| **v);
    let ids = |v: Vec<(&ImageAnnotations, &bool)>| v.into_iter().map(|(a, _)| a.image_path.clone()).collect();
    Ok(SplitResult {
        train: ids(train),
        val: ids(val),
        groups,
    })
}
