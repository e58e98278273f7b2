//! JSON configuration files and command-line overrides.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use vrpvqe::experiment::{BackendChoice, InstanceSource, SweepConfig};
use vrpvqe::noise::{ChannelName, NoiseChannel};
use vrpvqe::problem::VrpInstance;
use vrpvqe::simulator::{NoisePlacement, SimLimits};
use vrpvqe::vqe::{OptimizerConfig, VqeConfig};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "VRPVQE_SEED";

fn one() -> usize {
    1
}

fn no_channel() -> ChannelName {
    ChannelName(None)
}

fn default_n_traj() -> usize {
    1000
}

/// Settings for a single (possibly multi-start) VQE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceSource,
    #[serde(default = "one")]
    pub layers: usize,
    #[serde(default = "no_channel")]
    pub channel: ChannelName,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub placement: NoisePlacement,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "one")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub shots: Option<usize>,
    #[serde(default)]
    pub limits: SimLimits,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(vrpvqe::Error::KappaOutOfRange(self.kappa).into());
        }
        if self.layers == 0 {
            return Err(CliError::Config("layers: must be at least 1".into()));
        }
        if self.starts == 0 {
            return Err(CliError::Config("starts: must be at least 1".into()));
        }
        if self.n_traj == 0 {
            return Err(CliError::Config("n_traj: must be at least 1".into()));
        }
        self.optimizer.validate()?;
        Ok(())
    }

    pub fn channel(&self) -> CliResult<Option<NoiseChannel>> {
        Ok(match self.channel.0 {
            None => None,
            Some(kind) => Some(NoiseChannel::new(kind, self.kappa)?),
        })
    }

    pub fn vqe_config(&self, qubits: usize) -> CliResult<VqeConfig> {
        let channel = self.channel()?;
        let backend = self
            .backend
            .resolve(channel.is_some(), qubits, self.n_traj, &self.limits);
        let mut cfg = VqeConfig::new(self.layers, backend, self.seed)
            .with_channel(channel)
            .with_optimizer(self.optimizer);
        cfg.placement = self.placement;
        cfg.limits = self.limits;
        cfg.shots = self.shots;
        Ok(cfg)
    }
}

/// Flags shared by the commands that run simulations.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub backend: Option<BackendChoice>,
    pub allow_large_density: bool,
    pub seed: Option<u64>,
}

impl Overrides {
    /// Reads the seed override from the environment.
    pub fn with_env_seed(mut self) -> CliResult<Self> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            let seed = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}: `{raw}` is not an unsigned integer")))?;
            self.seed = Some(seed);
        }
        Ok(self)
    }

    pub fn apply_run(&self, cfg: &mut RunConfig) {
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.limits.allow_large_density |= self.allow_large_density;
    }

    pub fn apply_sweep(&self, cfg: &mut SweepConfig) {
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        cfg.limits.allow_large_density |= self.allow_large_density;
    }
}

/// Parses a JSON file; errors name the offending field.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_json(&text).map_err(|message| CliError::Parse {
        path: path.to_path_buf(),
        message,
    })
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        if field == "." || field == "?" {
            e.inner().to_string()
        } else {
            format!("field `{field}`: {}", e.inner())
        }
    })
}

/// Directory that relative instance paths are resolved against.
pub fn base_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

pub fn load_instance(source: &InstanceSource, config_path: &Path) -> CliResult<VrpInstance> {
    Ok(source.load(&base_dir(config_path))?)
}

/// A config file of either kind; sweep configs are the ones listing channels.
pub enum AnyConfig {
    Run(RunConfig),
    Sweep(SweepConfig),
}

pub fn read_any(path: &Path) -> CliResult<AnyConfig> {
    let value: serde_json::Value = read_json(path)?;
    let is_sweep = value.get("channels").is_some();
    let text = value.to_string();
    let wrap = |message| CliError::Parse {
        path: path.to_path_buf(),
        message,
    };
    if is_sweep {
        parse_json(&text).map(AnyConfig::Sweep).map_err(wrap)
    } else {
        parse_json(&text).map(AnyConfig::Run).map_err(wrap)
    }
}
