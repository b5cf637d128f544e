use std::path::Path;
use std::time::Instant;

use nightforge::enhance::{fuse_saliency, msrcr, spectral_saliency};
use nightforge::imgcore::{decode_png, encode_png, resize_bilinear, Image};
use nightforge::zerodce::{apply_curve, optimize_curve};

use super::{batch, create_dir, msg};
use crate::batch::{collect_files, ensure_parent, rel_id};
use crate::config::{Method, PipelineConfig, RESOLVED_CONFIG_FILE};
use crate::error::CliResult;
use crate::report::{ReportEntry, RunReport, REPORT_FILE};

/// Enhance every PNG under `input`, mirroring the tree into `output`.
pub fn enhance(cfg: &PipelineConfig, input: &Path, output: &Path) -> CliResult<RunReport> {
    let start = Instant::now();
    let files = collect_files(input, "png", Some(output))?;
    create_dir(output)?;
    let entries = batch(cfg).run(&files, |p| rel_id(p), |_, rel| enhance_one(cfg, input, output, rel))?;
    let mut report = RunReport::new(&format!("enhance ({})", cfg.enhance.method), entries);
    if cfg.run.timings {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    report.write(&output.join(REPORT_FILE))?;
    cfg.echo(&output.join(RESOLVED_CONFIG_FILE))?;
    Ok(report)
}

fn enhance_one(cfg: &PipelineConfig, input: &Path, output: &Path, rel: &Path) -> Result<ReportEntry, String> {
    let bytes = std::fs::read(input.join(rel)).map_err(msg)?;
    let img = decode_png(&bytes).map_err(msg)?;
    let dst = output.join(rel);
    ensure_parent(&dst).map_err(msg)?;
    let mut entry = ReportEntry::ok(rel_id(rel)).metric("mean_in", img.mean());
    let out = match cfg.enhance.method {
        Method::Msrcr => msrcr(&img, &cfg.msrcr).map_err(msg)?,
        Method::MsrcrSaliency => {
            let base = msrcr(&img, &cfg.msrcr).map_err(msg)?;
            let sal = spectral_saliency(&base, cfg.enhance.saliency_sigma).map_err(msg)?;
            fuse_saliency(&base, &sal, &cfg.fusion).map_err(msg)?
        }
        Method::ZeroDce => {
            let z = &cfg.zerodce;
            let fit_input = fit_copy(&img, z.fit_max_side).map_err(msg)?;
            let fit = optimize_curve(&fit_input, &z.loss, &z.optimize).map_err(msg)?;
            std::fs::write(dst.with_extension("dce"), fit.curve.to_bytes()).map_err(msg)?;
            entry = entry.metric("loss", fit.final_loss.total);
            apply_curve(&img, &fit.curve).map_err(msg)?
        }
    };
    std::fs::write(&dst, encode_png(&out).map_err(msg)?).map_err(msg)?;
    Ok(entry.metric("mean_out", out.mean()))
}

/// Downscaled copy with the longer side at most `max_side`.
fn fit_copy(img: &Image, max_side: usize) -> nightforge::Result<Image> {
    let side = img.width().max(img.height());
    if side <= max_side {
        return Ok(img.clone());
    }
    let f = max_side as f64 / side as f64;
    let w = ((img.width() as f64 * f).round() as usize).max(1);
    let h = ((img.height() as f64 * f).round() as usize).max(1);
    resize_bilinear(img, w, h)
}
