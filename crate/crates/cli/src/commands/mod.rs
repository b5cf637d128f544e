mod anchors;
mod enhance;
mod eval;
mod fuse;
mod split;
mod transfer;

pub use anchors::anchors;
pub use enhance::enhance;
pub use eval::{eval, prediction_id};
pub use fuse::fuse;
pub use split::split;
pub use transfer::{transfer, TRANSFER_MANIFEST};

use std::fmt::Display;
use std::path::{Path, PathBuf};

use crate::batch::Batch;
use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

fn batch(cfg: &PipelineConfig) -> Batch {
    Batch {
        workers: cfg.worker_count(),
        strict: cfg.run.strict,
        timings: cfg.run.timings,
    }
}

fn msg(e: impl Display) -> String {
    e.to_string()
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Ground-truth manifests resolve relative paths against their own directory.
fn manifest_root(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}
