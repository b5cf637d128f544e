use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::boxops::BBox;
use crate::imgcore::read_png_dimensions;
use crate::{Error, Result};

/// Ground truth for one image. Every box lies within
/// `[0, width] × [0, height]` and has positive area.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageAnnotations {
    /// Identifier of the image, as written in the manifest.
    pub image_path: String,
    pub width: usize,
    pub height: usize,
    pub boxes: Vec<BBox>,
}

/// Counts of boxes altered during ingestion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub images: usize,
    pub boxes: usize,
    /// Boxes that extended past the image and were clamped.
    pub clamped: usize,
    /// Boxes left with no area after clamping.
    pub dropped: usize,
}

impl ImageAnnotations {
    /// Clamp raw `[x1, y1, x2, y2]` boxes to the image, dropping those left
    /// without area. Tallies into `report`.
    pub fn from_raw(
        image_path: impl Into<String>,
        width: usize,
        height: usize,
        raw: impl IntoIterator<Item = [f64; 4]>,
        report: &mut IngestReport,
    ) -> Self {
        let (w, h) = (width as f64, height as f64);
        let mut boxes = Vec::new();
        for [x1, y1, x2, y2] in raw {
            let c = [x1.clamp(0.0, w), y1.clamp(0.0, h), x2.clamp(0.0, w), y2.clamp(0.0, h)];
            match BBox::new(c[0], c[1], c[2], c[3]) {
                Ok(b) => {
                    if c != [x1, y1, x2, y2] {
                        report.clamped += 1;
                    }
                    report.boxes += 1;
                    boxes.push(b);
                }
                Err(_) => report.dropped += 1,
            }
        }
        report.images += 1;
        ImageAnnotations {
            image_path: image_path.into(),
            width,
            height,
            boxes,
        }
    }
}

/// Parse one annotation file: a count line `N`, then `N` lines `x1 y1 x2 y2`.
pub fn parse_annotation_file(text: &str, path: &Path) -> Result<Vec<[f64; 4]>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(err(1, "missing box count".into()));
    };
    let count: usize = header
        .trim()
        .parse()
        .map_err(|_| err(1, format!("expected a box count, got `{}`", header.trim())))?;
    let mut boxes = Vec::with_capacity(count);
    for (idx, line) in lines {
        let no = idx + 1;
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(no, format!("bad coordinate `{t}`"))),
            })
            .collect::<Result<_>>()?;
        let [x1, y1, x2, y2] = fields[..] else {
            return Err(err(no, format!("expected 4 coordinates, got {}", fields.len())));
        };
        boxes.push([x1, y1, x2, y2]);
    }
    if boxes.len() != count {
        return Err(err(1, format!("header announces {count} boxes, found {}", boxes.len())));
    }
    Ok(boxes)
}

pub fn format_annotations(boxes: &[BBox]) -> String {
    let mut out = format!("{}\n", boxes.len());
    for b in boxes {
        let [x1, y1, x2, y2] = b.coords();
        writeln!(out, "{x1} {y1} {x2} {y2}").unwrap();
    }
    out
}

pub fn write_annotations(path: &Path, boxes: &[BBox]) -> Result<()> {
    std::fs::write(path, format_annotations(boxes)).map_err(|e| Error::io(path, e))
}

fn resolve(root: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

/// Read every image listed in `manifest`.
///
/// Manifest rows are `image_path<TAB>annotation_path`, optionally followed by
/// `<TAB>width<TAB>height`; without them the dimensions come from the PNG
/// header. Relative paths resolve against `root`. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_annotations(root: &Path, manifest: &Path) -> Result<(Vec<ImageAnnotations>, IngestReport)> {
    let text = std::fs::read_to_string(manifest).map_err(|e| Error::Ingestion {
        path: manifest.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut report = IngestReport::default();
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: manifest.to_path_buf(),
            line: no,
            message,
        };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let (image, ann, dims) = match fields[..] {
            [image, ann] => (image, ann, None),
            [image, ann, w, h] => {
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .ok()
                        .filter(|v| *v > 0)
                        .ok_or_else(|| bad(format!("bad image dimension `{s}`")))
                };
                (image, ann, Some((parse(w)?, parse(h)?)))
            }
            _ => return Err(bad(format!("expected 2 or 4 tab-separated fields, got {}", fields.len()))),
        };
        let (width, height) = match dims {
            Some(d) => d,
            None => {
                let img_path = resolve(root, image);
                if !img_path.is_file() {
                    return Err(Error::Ingestion {
                        path: img_path,
                        message: "image not found".into(),
                    });
                }
                read_png_dimensions(&img_path)?
            }
        };
        let ann_path = resolve(root, ann);
        let ann_text = std::fs::read_to_string(&ann_path).map_err(|e| Error::Ingestion {
            path: ann_path.clone(),
            message: e.to_string(),
        })?;
        let raw = parse_annotation_file(&ann_text, &ann_path)?;
        out.push(ImageAnnotations::from_raw(image, width, height, raw, &mut report));
    }
    Ok((out, report))
}
