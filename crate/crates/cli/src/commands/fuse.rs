use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nightforge::boxops::{ensemble, read_detections, write_detections, Leaf, Transform, TransformKind};

use super::{batch, create_dir, msg};
use crate::batch::{collect_files, ensure_parent, rel_id};
use crate::config::{PipelineConfig, RESOLVED_CONFIG_FILE};
use crate::error::{CliError, CliResult};
use crate::report::{ReportEntry, RunReport, REPORT_FILE};

struct LeafDir {
    model: String,
    kind: TransformKind,
    dir: PathBuf,
}

fn sorted_subdirs(dir: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        if entry.file_type().map_err(|e| CliError::io(entry.path(), e))?.is_dir() {
            out.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
        }
    }
    out.sort();
    Ok(out)
}

fn discover(preds: &Path) -> CliResult<Vec<LeafDir>> {
    let mut leaves = Vec::new();
    for (model, mdir) in sorted_subdirs(preds)? {
        for (name, dir) in sorted_subdirs(&mdir)? {
            let kind: TransformKind = name
                .parse()
                .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
            leaves.push(LeafDir {
                model: model.clone(),
                kind,
                dir,
            });
        }
    }
    if leaves.is_empty() {
        return Err(CliError::Config(format!(
            "{} has no <model>/<transform>/ prediction directories",
            preds.display()
        )));
    }
    Ok(leaves)
}

fn strip_ext(id: &str) -> &str {
    match id.rfind('.') {
        Some(dot) if !id[dot..].contains('/') => &id[..dot],
        _ => id,
    }
}

/// Read an `image<TAB>width` table. Keys are matched without extension.
fn read_widths(path: &Path) -> CliResult<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CliError::Config(format!("{}:{}: expected `image<TAB>width`", path.display(), i + 1));
        let (image, width) = line.split_once('\t').ok_or_else(bad)?;
        let width: f64 = width.trim().parse().map_err(|_| bad())?;
        if !(width > 0.0) {
            return Err(bad());
        }
        out.insert(strip_ext(image.trim()).to_string(), width);
    }
    Ok(out)
}

/// Fuse `preds/<model>/<transform>/<image>.txt` predictions per image and
/// write the fused detections to `output/<image>.txt`.
pub fn fuse(cfg: &PipelineConfig, preds: &Path, output: &Path, widths: Option<&Path>) -> CliResult<RunReport> {
    let start = Instant::now();
    let leaves = discover(preds)?;
    let widths = widths.map(read_widths).transpose()?.unwrap_or_default();
    let mut images = BTreeSet::new();
    for leaf in &leaves {
        for rel in collect_files(&leaf.dir, "txt", None)? {
            images.insert(rel_id(&rel));
        }
    }
    let images: Vec<String> = images.into_iter().collect();
    create_dir(output)?;

    let entries = batch(cfg).run(&images, String::clone, |_, id| {
        let mut entry = ReportEntry::ok(id.clone());
        let width = widths.get(strip_ext(id)).copied();
        let mut inputs = Vec::with_capacity(leaves.len());
        for leaf in &leaves {
            let path = leaf.dir.join(id);
            let detections = if path.is_file() {
                read_detections(&path, &leaf.model).map_err(msg)?
            } else {
                entry.warnings.push(format!("no predictions from {}/{}", leaf.model, leaf.kind));
                Vec::new()
            };
            let transform = Transform::resolve(leaf.kind, width).map_err(|e| format!("{}/{}: {e}", leaf.model, leaf.kind))?;
            inputs.push(Leaf {
                model_id: leaf.model.clone(),
                transform,
                detections,
            });
        }
        let fused = ensemble(&inputs, &cfg.boxes).map_err(msg)?;
        let dst = output.join(id);
        ensure_parent(&dst).map_err(msg)?;
        write_detections(&dst, &fused).map_err(msg)?;
        Ok(entry.metric("detections", fused.len() as f64))
    })?;

    let mut report = RunReport::new("fuse", entries);
    report.metrics.insert("leaves".into(), leaves.len() as f64);
    if cfg.run.timings {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    report.write(&output.join(REPORT_FILE))?;
    cfg.echo(&output.join(RESOLVED_CONFIG_FILE))?;
    Ok(report)
}
