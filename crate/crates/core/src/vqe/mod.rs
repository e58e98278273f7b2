//! Variational minimisation of an Ising cost over the layered ansatz.

mod optimizer;

pub use optimizer::{minimize, minimize_fallible, OptimizerConfig, OptimizerKind, SpsaGains, VqeResult};

use std::f64::consts::TAU;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_ansatz, ParameterizedCircuit};
use crate::error::{Error, Result};
use crate::hamiltonian::{from_ising, DiagonalObservable};
use crate::noise::NoiseChannel;
use crate::problem::IsingForm;
use crate::seed;
use crate::simulator::{
    run_density, run_statevector, run_trajectories_diag, shot_expectation, NoisePlacement, SimLimits,
};

const INIT_TAG: u64 = 0x1A17;
const TRAJ_TAG: u64 = 0x7EA7;
const SHOT_TAG: u64 = 0x5407;
const OPT_TAG: u64 = 0x0F7A;

/// How the ansatz state is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Backend {
    Statevector,
    Density,
    Trajectories { n_traj: usize },
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Statevector => "statevector",
            Backend::Density => "density",
            Backend::Trajectories { .. } => "trajectories",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeConfig {
    pub layers: usize,
    pub channel: Option<NoiseChannel>,
    pub placement: NoisePlacement,
    pub backend: Backend,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub limits: SimLimits,
    /// Replace exact expectations by finite-shot estimates.
    pub shots: Option<usize>,
}

impl VqeConfig {
    pub fn new(layers: usize, backend: Backend, seed: u64) -> Self {
        VqeConfig {
            layers,
            channel: None,
            placement: NoisePlacement::default(),
            backend,
            optimizer: OptimizerConfig::default(),
            seed,
            limits: SimLimits::default(),
            shots: None,
        }
    }

    pub fn with_channel(mut self, channel: Option<NoiseChannel>) -> Self {
        self.channel = channel;
        self
    }

    pub fn with_optimizer(mut self, optimizer: OptimizerConfig) -> Self {
        self.optimizer = optimizer;
        self
    }
}

/// Energy of the ansatz as a function of its parameters.
pub struct EnergyFunction<'a> {
    ansatz: ParameterizedCircuit,
    observable: DiagonalObservable,
    config: &'a VqeConfig,
}

impl<'a> EnergyFunction<'a> {
    pub fn new(ising: &IsingForm, config: &'a VqeConfig) -> Result<Self> {
        if config.backend == Backend::Statevector && config.channel.is_some() {
            return Err(Error::IncompatibleBackend(
                "the statevector backend cannot apply a noise channel".into(),
            ));
        }
        if let Backend::Trajectories { n_traj: 0 } = config.backend {
            return Err(Error::Config("n_traj must be at least 1".into()));
        }
        if config.shots == Some(0) {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        let m = ising.dim();
        match config.backend {
            Backend::Statevector => config.limits.check_pure("statevector simulation", m)?,
            Backend::Density => config.limits.check_density(m)?,
            Backend::Trajectories { .. } => config.limits.check_pure("trajectory simulation", m)?,
        }
        let ansatz = build_ansatz(ising, config.layers)?;
        let observable = DiagonalObservable::new(&from_ising(ising));
        Ok(EnergyFunction {
            ansatz,
            observable,
            config,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.ansatz.parameter_count()
    }

    pub fn ansatz(&self) -> &ParameterizedCircuit {
        &self.ansatz
    }

    /// Evaluates the energy; `eval_index` decorrelates shot noise between
    /// calls while keeping runs reproducible.
    pub fn energy(&self, params: &[f64], eval_index: u64) -> Result<f64> {
        let cfg = self.config;
        let circuit = self.ansatz.bind(params)?;
        let channel = cfg.channel.as_ref();
        let state = match cfg.backend {
            Backend::Statevector => run_statevector(&circuit, &cfg.limits)?,
            Backend::Density => run_density(&circuit, channel, cfg.placement, &cfg.limits)?,
            Backend::Trajectories { n_traj } => {
                // a fixed stream per run gives common random numbers across evaluations
                let est = run_trajectories_diag(
                    &circuit,
                    channel,
                    cfg.placement,
                    &self.observable,
                    n_traj,
                    seed::derive(cfg.seed, &[TRAJ_TAG]),
                    &cfg.limits,
                )?;
                return Ok(est.mean);
            }
        };
        match cfg.shots {
            None => self.observable.expectation(&state),
            Some(shots) => {
                let mut rng = seed::rng(seed::derive(cfg.seed, &[SHOT_TAG, eval_index]));
                shot_expectation(&self.observable, &state, shots, &mut rng)
            }
        }
    }
}

/// Uniform draw in `[0, 2 pi)` for each parameter.
pub fn initial_parameters(count: usize, seed_value: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(seed_value, &[INIT_TAG]));
    (0..count).map(|_| seed::unit_f64(rng.next_u64()) * TAU).collect()
}

/// One optimisation from a seeded random start.
pub fn vqe_run(ising: &IsingForm, config: &VqeConfig) -> Result<VqeResult> {
    let f = EnergyFunction::new(ising, config)?;
    let x0 = initial_parameters(f.parameter_count(), config.seed);
    let mut opt = config.optimizer;
    opt.seed = seed::derive(opt.seed, &[OPT_TAG, config.seed]);
    let mut calls = 0u64;
    minimize_fallible(
        |x| {
            calls += 1;
            f.energy(x, calls)
        },
        &x0,
        &opt,
    )
}

/// Independent runs from `starts` seeds derived from `config.seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub runs: Vec<VqeResult>,
    pub best_index: usize,
}

impl MultiStart {
    pub fn best(&self) -> &VqeResult {
        &self.runs[self.best_index]
    }
}

pub fn vqe_multistart(ising: &IsingForm, config: &VqeConfig, starts: usize) -> Result<MultiStart> {
    if starts == 0 {
        return Err(Error::Config("at least one start is required".into()));
    }
    let runs = (0..starts as u64)
        .into_par_iter()
        .map(|s| {
            let mut cfg = config.clone();
            cfg.seed = seed::derive(config.seed, &[s]);
            vqe_run(ising, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let best_index = (0..runs.len())
        .min_by(|&a, &b| runs[a].best_energy.total_cmp(&runs[b].best_energy))
        .expect("non-empty");
    Ok(MultiStart { runs, best_index })
}
