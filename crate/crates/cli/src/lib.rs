//! Batch orchestration for the nightforge toolkit: configuration, a
//! deterministic per-image worker pool, and the `nightforge` subcommands.

pub mod batch;
pub mod commands;
pub mod config;
mod error;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

use config::{Method, Overrides, PipelineConfig, CONFIG_ENV};

#[derive(Debug, Parser)]
#[command(name = "nightforge", version, about = "Low-light face-detection toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file (falls back to $NIGHTFORGE_CONFIG).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Global seed; also overrides the transfer and optimizer seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Stop at the first per-image failure.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Record timings in run reports.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enhance a tree of PNG images.
    Enhance {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Synthesize low-light look-alikes from normal-light images.
    Transfer { input: PathBuf, output: PathBuf },
    /// Soft-NMS + TTA back-mapping + WBF over preds/<model>/<transform>/.
    Fuse {
        preds: PathBuf,
        output: PathBuf,
        /// Table of `image<TAB>width`, needed by hflip predictions.
        #[arg(long, value_name = "PATH")]
        image_width: Option<PathBuf>,
    },
    /// Average precision of predictions against ground truth.
    Eval {
        gt_manifest: PathBuf,
        preds: PathBuf,
        /// JSON report path [default: <PREDS>/ap_report.json].
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        iou_thr: Option<f64>,
    },
    /// Face-count stratified train/validation split.
    Split {
        gt_manifest: PathBuf,
        out_prefix: PathBuf,
        #[arg(long)]
        val_fraction: Option<f64>,
    },
    /// Face-width histogram and k-means anchor widths.
    Anchors {
        gt_manifest: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Cli {
    /// Resolve the configuration, including subcommand-specific overrides.
    pub fn resolve_config(&self, env: Option<OsString>) -> CliResult<PipelineConfig> {
        let g = &self.global;
        let overrides = Overrides {
            seed: g.seed,
            workers: g.workers,
            strict: g.strict,
            timings: g.timings,
            method: match &self.command {
                Command::Enhance { method, .. } => *method,
                _ => None,
            },
        };
        let (mut cfg, _) = PipelineConfig::resolve(g.config.as_deref(), env, &overrides)?;
        match &self.command {
            Command::Eval { iou_thr: Some(t), .. } => cfg.eval.iou_thr = *t,
            Command::Split { val_fraction: Some(f), .. } => cfg.split.val_fraction = *f,
            Command::Anchors { k: Some(k), .. } => cfg.anchors.k = *k,
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Run a parsed command line and return the lines to print.
pub fn run(cli: &Cli) -> CliResult<Vec<String>> {
    run_with_env(cli, std::env::var_os(CONFIG_ENV))
}

pub fn run_with_env(cli: &Cli, env: Option<OsString>) -> CliResult<Vec<String>> {
    let cfg = cli.resolve_config(env)?;
    let lines = match &cli.command {
        Command::Enhance { input, output, .. } => vec![commands::enhance(&cfg, input, output)?.summary()],
        Command::Transfer { input, output } => vec![commands::transfer(&cfg, input, output)?.summary()],
        Command::Fuse {
            preds,
            output,
            image_width,
        } => vec![commands::fuse(&cfg, preds, output, image_width.as_deref())?.summary()],
        Command::Eval {
            gt_manifest,
            preds,
            report,
            ..
        } => {
            let path = report.clone().unwrap_or_else(|| preds.join("ap_report.json"));
            let r = commands::eval(&cfg, gt_manifest, preds, &path)?;
            vec![format!("mAP {:.4}", r.ap)]
        }
        Command::Split {
            gt_manifest,
            out_prefix,
            ..
        } => {
            let s = commands::split(&cfg, gt_manifest, out_prefix)?;
            let mut lines: Vec<String> = s
                .groups
                .iter()
                .map(|g| format!("group {:>5}: {} images, {} validation", g.bucket, g.size, g.n_val))
                .collect();
            lines.push(format!("train {} / val {}", s.train.len(), s.val.len()));
            lines
        }
        Command::Anchors { gt_manifest, out, .. } => {
            let r = commands::anchors(&cfg, gt_manifest, out.as_deref())?;
            let mut lines = vec![format!("faces {}", r.total_faces)];
            for (c, p) in r.centers.iter().zip(&r.populations) {
                lines.push(format!("anchor width {c:.2} px: {p} faces"));
            }
            lines
        }
    };
    Ok(lines)
}
