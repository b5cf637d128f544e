use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nightforge::boxops::read_detections;
use nightforge::dataset::{evaluate_map, parse_annotations, ApReport};

use super::manifest_root;
use crate::batch::{collect_files, ensure_parent, rel_id};
use crate::config::{PipelineConfig, RESOLVED_CONFIG_FILE};
use crate::error::{CliError, CliResult};

/// Prediction file name for a ground-truth image id: the same relative path
/// with a `.txt` extension.
pub fn prediction_id(image_path: &str) -> String {
    rel_id(&Path::new(image_path).with_extension("txt"))
}

fn listing(title: &str, ids: &[&String]) -> String {
    const SHOWN: usize = 10;
    let mut s = format!("{} {title}:", ids.len());
    for id in ids.iter().take(SHOWN) {
        s.push_str(&format!(" {id}"));
    }
    if ids.len() > SHOWN {
        s.push_str(" ...");
    }
    s
}

/// Evaluate `preds/<image>.txt` against the ground truth and write the AP
/// report as JSON to `report_path`.
pub fn eval(cfg: &PipelineConfig, gt_manifest: &Path, preds: &Path, report_path: &Path) -> CliResult<ApReport> {
    let (gts, _) = parse_annotations(&manifest_root(gt_manifest), gt_manifest)?;
    let expected: BTreeMap<String, &str> =
        gts.iter().map(|g| (prediction_id(&g.image_path), g.image_path.as_str())).collect();
    let found: BTreeSet<String> = collect_files(preds, "txt", None)?.iter().map(|p| rel_id(p)).collect();
    let missing: Vec<_> = expected.keys().filter(|k| !found.contains(*k)).collect();
    let extra: Vec<_> = found.iter().filter(|k| !expected.contains_key(*k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut parts = Vec::new();
        if !missing.is_empty() {
            parts.push(listing("ground-truth images without predictions", &missing));
        }
        if !extra.is_empty() {
            parts.push(listing("prediction files without ground truth", &extra));
        }
        return Err(CliError::Runtime(parts.join("; ")));
    }

    let mut dets = BTreeMap::new();
    for (pid, image) in &expected {
        dets.insert(image.to_string(), read_detections(&preds.join(pid), "eval")?);
    }
    let report = evaluate_map(&gts, &dets, cfg.eval.iou_thr)?;
    ensure_parent(report_path)?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    std::fs::write(report_path, text).map_err(|e| CliError::io(report_path, e))?;
    cfg.echo(&report_path.with_file_name(RESOLVED_CONFIG_FILE))?;
    Ok(report)
}
