//! Input discovery and the per-image worker pool.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::report::ReportEntry;

/// Relative paths of files under `root` with extension `ext`, sorted.
/// Anything below `exclude` (typically the output directory) is skipped.
pub fn collect_files(root: &Path, ext: &str, exclude: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(CliError::Config(format!("{} is not a directory", root.display())));
    }
    let exclude = exclude.and_then(|p| p.canonicalize().ok());
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::Runtime(format!("walking {}: {e}", root.display())))?;
        if let (Some(ex), Ok(p)) = (&exclude, entry.path().canonicalize()) {
            if p.starts_with(ex) {
                continue;
            }
        }
        let matches = entry
            .path()
            .extension()
            .is_some_and(|e| e.to_string_lossy().eq_ignore_ascii_case(ext));
        if entry.file_type().is_file() && matches {
            out.push(entry.path().strip_prefix(root).expect("walk stays under root").to_path_buf());
        }
    }
    Ok(out)
}

/// Forward-slash form of a relative path, used as an identifier.
pub fn rel_id(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

pub fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    Ok(())
}

pub struct Batch {
    pub workers: usize,
    pub strict: bool,
    pub timings: bool,
}

impl Batch {
    /// Run `job` over `items` on a pool of `workers` threads. Entries come
    /// back in input order whatever the scheduling. In strict mode the first
    /// failure aborts the batch.
    pub fn run<I, F>(&self, items: &[I], label: impl Fn(&I) -> String + Sync, job: F) -> CliResult<Vec<ReportEntry>>
    where
        I: Sync,
        F: Fn(usize, &I) -> Result<ReportEntry, String> + Sync,
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
        let one = |(i, item): (usize, &I)| {
            let start = Instant::now();
            let mut entry = match job(i, item) {
                Ok(entry) => entry,
                Err(msg) => {
                    if self.strict {
                        return Err(CliError::Runtime(format!("{}: {msg}", label(item))));
                    }
                    log::warn!("{}: {msg}", label(item));
                    ReportEntry::failed(label(item), msg)
                }
            };
            if self.timings {
                entry.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            Ok(entry)
        };
        pool.install(|| items.par_iter().enumerate().map(one).collect())
    }
}
