use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nightforge::imgcore::{decode_png, encode_png};
use nightforge::rng::derive_seed;
use nightforge::transfer::transfer_pipeline;

use super::{batch, create_dir, msg};
use crate::batch::{collect_files, ensure_parent, rel_id};
use crate::config::{PipelineConfig, RESOLVED_CONFIG_FILE};
use crate::error::{CliError, CliResult};
use crate::report::{ReportEntry, RunReport, Status, REPORT_FILE};

pub const TRANSFER_MANIFEST: &str = "transfer_manifest.tsv";

/// Darken, add noise to and re-enhance every PNG under `input`. Image `i`
/// of the sorted input list draws its randomness from `(seed, i)`.
pub fn transfer(cfg: &PipelineConfig, input: &Path, output: &Path) -> CliResult<RunReport> {
    let start = Instant::now();
    let files = collect_files(input, "png", Some(output))?;
    create_dir(output)?;
    let entries = batch(cfg).run(&files, |p| rel_id(p), |i, rel| {
        let img = decode_png(&std::fs::read(input.join(rel)).map_err(msg)?).map_err(msg)?;
        let out = transfer_pipeline(&img, &cfg.transfer, &cfg.msrcr, i as u64).map_err(msg)?;
        let dst = output.join(rel);
        ensure_parent(&dst).map_err(msg)?;
        std::fs::write(&dst, encode_png(&out.image).map_err(msg)?).map_err(msg)?;
        Ok(ReportEntry::ok(rel_id(rel))
            .metric("gamma", out.params.gamma)
            .metric("scale", out.params.scale)
            .metric("degraded_mean", out.degraded.mean()))
    })?;

    let mut manifest = String::new();
    for (i, e) in entries.iter().enumerate() {
        if e.status == Status::Ok {
            let seed = derive_seed(cfg.transfer.seed, i as u64);
            writeln!(manifest, "{}\t{}\t{}\t{seed}", e.input, e.metrics["gamma"], e.metrics["scale"]).unwrap();
        }
    }
    let manifest_path = output.join(TRANSFER_MANIFEST);
    std::fs::write(&manifest_path, manifest).map_err(|e| CliError::io(&manifest_path, e))?;

    let mut report = RunReport::new("transfer", entries);
    if cfg.run.timings {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    report.write(&output.join(REPORT_FILE))?;
    cfg.echo(&output.join(RESOLVED_CONFIG_FILE))?;
    Ok(report)
}
