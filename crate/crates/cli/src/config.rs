//! Pipeline configuration. Values are resolved with the precedence
//! command-line flags > `--config` file > `NIGHTFORGE_CONFIG` file >
//! built-in defaults.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nightforge::boxops::FusionParams;
use nightforge::enhance::{FusionConfig, MsrcrConfig, DEFAULT_SMOOTH_SIGMA};
use nightforge::transfer::DarkenConfig;
use nightforge::zerodce::{DceLossConfig, OptimizeConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;
pub const CONFIG_ENV: &str = "NIGHTFORGE_CONFIG";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Method {
    #[serde(rename = "msrcr")]
    #[value(name = "msrcr")]
    Msrcr,
    #[serde(rename = "msrcr+saliency")]
    #[value(name = "msrcr+saliency")]
    MsrcrSaliency,
    #[serde(rename = "zerodce")]
    #[value(name = "zerodce")]
    ZeroDce,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Msrcr => "msrcr",
            Method::MsrcrSaliency => "msrcr+saliency",
            Method::ZeroDce => "zerodce",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed. `--seed` also overwrites the transfer and optimizer seeds.
    pub seed: u64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    /// Abort on the first per-image failure.
    pub strict: bool,
    /// Record wall-clock timings in run reports (makes reports
    /// non-reproducible).
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnhanceConfig {
    pub method: Method,
    /// Gaussian smoothing of the saliency map.
    pub saliency_sigma: f64,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        EnhanceConfig {
            method: Method::Msrcr,
            saliency_sigma: DEFAULT_SMOOTH_SIGMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeroDceConfig {
    /// Curves are fitted on a copy whose longer side is at most this many
    /// pixels, then applied at full resolution.
    pub fit_max_side: usize,
    pub loss: DceLossConfig,
    pub optimize: OptimizeConfig,
}

impl Default for ZeroDceConfig {
    fn default() -> Self {
        ZeroDceConfig {
            fit_max_side: 128,
            loss: DceLossConfig::default(),
            optimize: OptimizeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub iou_thr: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { iou_thr: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub val_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { val_fraction: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorConfig {
    pub k: usize,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        AnchorConfig { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub run: RunConfig,
    pub enhance: EnhanceConfig,
    pub msrcr: MsrcrConfig,
    pub fusion: FusionConfig,
    pub zerodce: ZeroDceConfig,
    pub transfer: DarkenConfig,
    pub boxes: FusionParams,
    pub eval: EvalConfig,
    pub split: SplitConfig,
    pub anchors: AnchorConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            run: RunConfig::default(),
            enhance: EnhanceConfig::default(),
            msrcr: MsrcrConfig::default(),
            fusion: FusionConfig::default(),
            zerodce: ZeroDceConfig::default(),
            transfer: DarkenConfig::default(),
            boxes: FusionParams::default(),
            eval: EvalConfig::default(),
            split: SplitConfig::default(),
            anchors: AnchorConfig::default(),
        }
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub strict: bool,
    pub timings: bool,
    pub method: Option<Method>,
}

/// Where the file layer of the configuration came from.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigSource {
    Defaults,
    Flag(PathBuf),
    Env(PathBuf),
}

impl FromStr for PipelineConfig {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let cfg: PipelineConfig = toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse().map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Resolve the effective configuration. `env` is the value of
    /// `NIGHTFORGE_CONFIG`, passed in so callers control the environment.
    pub fn resolve(
        flag_path: Option<&Path>,
        env: Option<OsString>,
        overrides: &Overrides,
    ) -> CliResult<(Self, ConfigSource)> {
        let (mut cfg, source) = match (flag_path, env.filter(|v| !v.is_empty())) {
            (Some(p), _) => (Self::load(p)?, ConfigSource::Flag(p.to_path_buf())),
            (None, Some(v)) => {
                let p = PathBuf::from(v);
                (Self::load(&p)?, ConfigSource::Env(p))
            }
            (None, None) => (Self::default(), ConfigSource::Defaults),
        };
        if let Some(seed) = overrides.seed {
            cfg.run.seed = seed;
            cfg.transfer.seed = seed;
            cfg.zerodce.optimize.seed = seed;
        }
        if let Some(w) = overrides.workers {
            cfg.run.workers = w;
        }
        cfg.run.strict |= overrides.strict;
        cfg.run.timings |= overrides.timings;
        if let Some(m) = overrides.method {
            cfg.enhance.method = m;
        }
        cfg.validate()?;
        Ok((cfg, source))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let bad = |e: nightforge::Error| CliError::Config(e.to_string());
        self.msrcr.validate().map_err(bad)?;
        self.fusion.validate().map_err(bad)?;
        self.zerodce.loss.validate().map_err(bad)?;
        self.zerodce.optimize.validate().map_err(bad)?;
        self.transfer.validate().map_err(bad)?;
        self.boxes.validate().map_err(bad)?;
        if !(self.enhance.saliency_sigma > 0.0) {
            return Err(CliError::Config("enhance.saliency_sigma must be positive".into()));
        }
        if self.zerodce.fit_max_side < 8 {
            return Err(CliError::Config("zerodce.fit_max_side must be at least 8".into()));
        }
        if !(self.eval.iou_thr > 0.0 && self.eval.iou_thr < 1.0) {
            return Err(CliError::Config("eval.iou_thr must lie in (0, 1)".into()));
        }
        if !(self.split.val_fraction > 0.0 && self.split.val_fraction < 1.0) {
            return Err(CliError::Config("split.val_fraction must lie in (0, 1)".into()));
        }
        if self.anchors.k == 0 {
            return Err(CliError::Config("anchors.k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Write the resolved configuration to `path`.
    pub fn echo(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| CliError::io(path, e))
    }

    pub fn worker_count(&self) -> usize {
        match self.run.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        }
    }
}
