use std::path::{Path, PathBuf};

use nightforge::dataset::{parse_annotations, stratified_split, SplitResult};

use super::manifest_root;
use crate::batch::ensure_parent;
use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, text: String) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Write `<prefix>.train.txt`, `<prefix>.val.txt` (one image id per line)
/// and `<prefix>.groups.json`.
pub fn split(cfg: &PipelineConfig, gt_manifest: &Path, prefix: &Path) -> CliResult<SplitResult> {
    let (anns, _) = parse_annotations(&manifest_root(gt_manifest), gt_manifest)?;
    let s = stratified_split(&anns, cfg.split.val_fraction, cfg.run.seed)?;
    ensure_parent(prefix)?;
    let lines = |ids: &[String]| ids.iter().map(|i| format!("{i}\n")).collect::<String>();
    write(&with_suffix(prefix, ".train.txt"), lines(&s.train))?;
    write(&with_suffix(prefix, ".val.txt"), lines(&s.val))?;
    let mut groups = serde_json::to_string_pretty(&s.groups).expect("groups serialize");
    groups.push('\n');
    write(&with_suffix(prefix, ".groups.json"), groups)?;
    cfg.echo(&with_suffix(prefix, ".config.resolved.toml"))?;
    Ok(s)
}
