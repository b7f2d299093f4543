use std::path::{Path, PathBuf};

use ordvar::formats::{KernelFile, MeasurePairFile};
use ordvar::models::Shock;
use serde::Deserialize;

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Metrics,
    Certify,
    CoupleSim,
    ModelRun,
    #[serde(alias = "property-suite")]
    Suite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Bernoulli,
    Inventory,
    Splitting,
}

/// Model parameters; anything left out takes the model's default.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: Option<ModelName>,
    pub capacity: Option<f64>,
    pub grid_size: Option<usize>,
    pub cells: Option<usize>,
    pub shock: Option<Shock>,
    pub n: Option<usize>,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
}

/// A single experiment. Relative paths are resolved against the directory
/// of the config file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub input: Option<PathBuf>,
    pub kernel: Option<KernelFile>,
    pub pair: Option<MeasurePairFile>,
    pub model: Option<ModelConfig>,
    pub x0: Option<usize>,
    pub y0: Option<usize>,
    pub horizon: Option<usize>,
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub m_max: Option<usize>,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
    pub emit_kernel: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("reading {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.input,
            &mut cfg.output,
            &mut cfg.emit_kernel,
            &mut cfg.trajectory,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn check_kind(&self, expected: Kind) -> Result<(), Failure> {
        match self.kind {
            Some(k) if k != expected => Err(Failure::Config(format!(
                "config is for {k:?} but the {expected:?} subcommand was run"
            ))),
            _ => Ok(()),
        }
    }
}

pub fn seed(flag: Option<u64>, cfg: &ExperimentConfig) -> Result<u64, Failure> {
    if let Some(s) = flag.or(cfg.seed) {
        return Ok(s);
    }
    match std::env::var("ORDVAR_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("ORDVAR_SEED={v} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}
