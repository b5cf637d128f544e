//! Per-image detection files: a count line `N`, then `N` lines of
//! `x1 y1 x2 y2 score` written with six decimals.

use std::fmt::Write as _;
use std::path::Path;

use super::{BBox, Detection};
use crate::{Error, Result};

pub fn format_detections(dets: &[Detection]) -> String {
    let mut out = format!("{}\n", dets.len());
    for d in dets {
        let [x1, y1, x2, y2] = d.bbox.coords();
        writeln!(out, "{x1:.6} {y1:.6} {x2:.6} {y2:.6} {:.6}", d.score).unwrap();
    }
    out
}

/// Parse detection-file text. `path` only labels errors.
pub fn parse_detections(text: &str, path: &Path, model_id: &str) -> Result<Vec<Detection>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(err(1, "missing detection count".into()));
    };
    let count: usize = header
        .trim()
        .parse()
        .map_err(|_| err(1, format!("expected a detection count, got `{}`", header.trim())))?;
    let mut dets = Vec::with_capacity(count);
    for (idx, line) in lines {
        let no = idx + 1;
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(no, format!("bad number `{t}`"))))
            .collect::<Result<_>>()?;
        let [x1, y1, x2, y2, score] = fields[..] else {
            return Err(err(no, format!("expected 5 fields, got {}", fields.len())));
        };
        if !(0.0..=1.0).contains(&score) {
            return Err(err(no, format!("score {score} outside [0, 1]")));
        }
        let bbox = BBox::new(x1, y1, x2, y2).map_err(|e| err(no, e.to_string()))?;
        dets.push(Detection::new(bbox, score, model_id));
    }
    if dets.len() != count {
        return Err(err(1, format!("header announces {count} detections, found {}", dets.len())));
    }
    Ok(dets)
}

pub fn read_detections(path: &Path, model_id: &str) -> Result<Vec<Detection>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text, path, model_id)
}

pub fn write_detections(path: &Path, dets: &[Detection]) -> Result<()> {
    std::fs::write(path, format_detections(dets)).map_err(|e| Error::io(path, e))
}
