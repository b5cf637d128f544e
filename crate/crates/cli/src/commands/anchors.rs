use std::path::Path;

use nightforge::dataset::{anchor_stats, parse_annotations, AnchorReport};

use super::manifest_root;
use crate::batch::ensure_parent;
use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

/// Face-width statistics; the JSON report goes to `out` when given.
pub fn anchors(cfg: &PipelineConfig, gt_manifest: &Path, out: Option<&Path>) -> CliResult<AnchorReport> {
    let (anns, _) = parse_annotations(&manifest_root(gt_manifest), gt_manifest)?;
    let report = anchor_stats(&anns, cfg.anchors.k, cfg.run.seed)?;
    if let Some(path) = out {
        ensure_parent(path)?;
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    Ok(report)
}
