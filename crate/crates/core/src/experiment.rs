//! Seeded noise sweeps, aggregation and CSV output.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{ChannelName, NoiseChannel, NoiseKind};
use crate::problem::{brute_force_minimum, build_qubo, qubo_to_ising, InstanceSpec, IsingForm, VrpInstance};
use crate::seed;
use crate::simulator::{NoisePlacement, SimLimits};
use crate::vqe::{vqe_run, Backend, OptimizerConfig, VqeConfig};

pub const RAW_HEADER: [&str; 8] = [
    "qubits",
    "layers",
    "channel",
    "kappa",
    "repetition",
    "energy",
    "classical_min",
    "deviation",
];

pub const AGGREGATE_HEADER: [&str; 7] = [
    "qubits",
    "layers",
    "channel",
    "kappa",
    "mean_energy",
    "min_energy",
    "mean_deviation",
];

/// Inline instance or a path to an instance JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Path { path: PathBuf },
    Inline(InstanceSpec),
}

impl InstanceSource {
    /// Relative paths resolve against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<VrpInstance> {
        match self {
            InstanceSource::Inline(spec) => spec.build(),
            InstanceSource::Path { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::Io(format!("{}: {e}", full.display())))?;
                let spec: InstanceSpec = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", full.display())))?;
                spec.build()
            }
        }
    }
}

/// Simulation backend for the noisy cells of a sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Statevector,
    #[default]
    Density,
    Trajectories,
    /// Density matrix when it fits the guard, trajectories otherwise.
    Auto,
}

fn default_layers() -> Vec<usize> {
    vec![1, 2, 3, 4]
}

fn default_kappa_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).collect()
}

fn default_repetitions() -> usize {
    10
}

fn default_n_traj() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub instance: InstanceSource,
    #[serde(default = "default_layers")]
    pub layers: Vec<usize>,
    pub channels: Vec<ChannelName>,
    #[serde(default = "default_kappa_grid")]
    pub kappa_grid: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub placement: NoisePlacement,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub limits: SimLimits,
}

impl SweepConfig {
    pub fn new(instance: &VrpInstance, channels: Vec<ChannelName>) -> Self {
        SweepConfig {
            instance: InstanceSource::Inline(instance.into()),
            layers: default_layers(),
            channels,
            kappa_grid: default_kappa_grid(),
            repetitions: default_repetitions(),
            optimizer: OptimizerConfig::default(),
            backend: BackendChoice::default(),
            n_traj: default_n_traj(),
            placement: NoisePlacement::default(),
            base_seed: 0,
            limits: SimLimits::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("layers: list is empty".into()));
        }
        if self.layers.contains(&0) {
            return Err(Error::Config("layers: every entry must be at least 1".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::Config("channels: list is empty".into()));
        }
        if self.kappa_grid.is_empty() {
            return Err(Error::Config("kappa_grid: list is empty".into()));
        }
        if let Some(&k) = self.kappa_grid.iter().find(|k| !(0.0..=1.0).contains(*k)) {
            return Err(Error::KappaOutOfRange(k));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions: must be at least 1".into()));
        }
        if self.n_traj == 0 {
            return Err(Error::Config("n_traj: must be at least 1".into()));
        }
        if self.backend == BackendChoice::Statevector && self.channels.iter().any(|c| c.0.is_some()) {
            return Err(Error::IncompatibleBackend(
                "the statevector backend cannot apply a noise channel".into(),
            ));
        }
        self.optimizer.validate()
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub layers: usize,
    pub channel: ChannelName,
    pub kappa: f64,
}

/// Grid cells in output order: layers, then channel, then kappa. The
/// noiseless channel contributes a single `kappa = 0` cell per depth.
pub fn cells(config: &SweepConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &layers in &config.layers {
        for &channel in &config.channels {
            if channel.0.is_none() {
                out.push(Cell {
                    layers,
                    channel,
                    kappa: 0.0,
                });
                continue;
            }
            for &kappa in &config.kappa_grid {
                out.push(Cell {
                    layers,
                    channel,
                    kappa,
                });
            }
        }
    }
    out
}

fn channel_code(c: ChannelName) -> u64 {
    match c.0 {
        None => 0,
        Some(k) => 1 + NoiseKind::ALL.iter().position(|&x| x == k).unwrap() as u64,
    }
}

/// Seed of repetition `r` in `cell`.
pub fn repetition_seed(base_seed: u64, cell: &Cell, r: usize) -> u64 {
    seed::derive(
        base_seed,
        &[cell.layers as u64, channel_code(cell.channel), cell.kappa.to_bits(), r as u64],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub qubits: usize,
    pub layers: usize,
    pub channel: ChannelName,
    pub kappa: f64,
    pub repetition: usize,
    pub energy: f64,
    pub classical_min: f64,
    pub deviation: f64,
}

impl SweepRecord {
    pub fn new(cell: &Cell, qubits: usize, repetition: usize, energy: f64, classical_min: f64) -> Self {
        SweepRecord {
            qubits,
            layers: cell.layers,
            channel: cell.channel,
            kappa: cell.kappa,
            repetition,
            energy,
            classical_min,
            deviation: energy - classical_min,
        }
    }
}

/// A cell whose runs could not complete.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub layers: usize,
    pub channel: ChannelName,
    pub kappa: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<CellFailure>,
    pub classical_min: f64,
}

impl BackendChoice {
    /// Concrete backend for a run on `qubits` qubits, noisy or not.
    pub fn resolve(self, noisy: bool, qubits: usize, n_traj: usize, limits: &SimLimits) -> Backend {
        let traj = Backend::Trajectories { n_traj };
        match self {
            BackendChoice::Statevector => Backend::Statevector,
            BackendChoice::Density => Backend::Density,
            BackendChoice::Trajectories => traj,
            BackendChoice::Auto if !noisy => Backend::Statevector,
            BackendChoice::Auto => {
                let limit = if limits.allow_large_density {
                    limits.max_large_density_qubits
                } else {
                    limits.max_density_qubits
                };
                if qubits <= limit {
                    Backend::Density
                } else {
                    traj
                }
            }
        }
    }
}

fn run_cell_repetition(
    config: &SweepConfig,
    ising: &IsingForm,
    cell: &Cell,
    r: usize,
) -> Result<f64> {
    let channel = match cell.channel.0 {
        None => None,
        Some(kind) => Some(NoiseChannel::new(kind, cell.kappa)?),
    };
    let backend = config
        .backend
        .resolve(channel.is_some(), ising.dim(), config.n_traj, &config.limits);
    let mut vqe = VqeConfig::new(cell.layers, backend, repetition_seed(config.base_seed, cell, r))
        .with_channel(channel)
        .with_optimizer(config.optimizer);
    vqe.placement = config.placement;
    vqe.limits = config.limits;
    Ok(vqe_run(ising, &vqe)?.best_energy)
}

/// Runs every (cell, repetition) job on the current rayon pool.
pub fn run_sweep_on(config: &SweepConfig, instance: &VrpInstance) -> Result<SweepOutcome> {
    config.validate()?;
    let ising = qubo_to_ising(&build_qubo(instance));
    let (_, classical_min) = brute_force_minimum(&ising)?;
    let qubits = ising.dim();
    let grid = cells(config);
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..config.repetitions).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, r)| run_cell_repetition(config, &ising, &grid[c], r))
        .collect();

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (c, cell) in grid.iter().enumerate() {
        let slice = &results[c * config.repetitions..(c + 1) * config.repetitions];
        if let Some(Err(e)) = slice.iter().find(|r| r.is_err()) {
            failures.push(CellFailure {
                layers: cell.layers,
                channel: cell.channel,
                kappa: cell.kappa,
                error: e.clone(),
            });
            continue;
        }
        for (r, energy) in slice.iter().enumerate() {
            let energy = *energy.as_ref().expect("checked above");
            records.push(SweepRecord::new(cell, qubits, r, energy, classical_min));
        }
    }
    Ok(SweepOutcome {
        records,
        failures,
        classical_min,
    })
}

/// Runs a sweep with at most `jobs` worker threads (`None` uses the
/// global pool). The output does not depend on `jobs`.
pub fn run_sweep(config: &SweepConfig, instance: &VrpInstance, jobs: Option<usize>) -> Result<SweepOutcome> {
    match jobs {
        None => run_sweep_on(config, instance),
        Some(0) => Err(Error::Config("jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_sweep_on(config, instance))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub qubits: usize,
    pub layers: usize,
    pub channel: ChannelName,
    pub kappa: f64,
    pub mean_energy: f64,
    pub min_energy: f64,
    pub mean_deviation: f64,
    pub count: usize,
}

/// Mean and minimum per `(qubits, layers, channel, kappa)`, in order of
/// first appearance.
pub fn aggregate(records: &[SweepRecord]) -> Result<Vec<AggregateRow>> {
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    let mut rows: Vec<AggregateRow> = Vec::new();
    let mut index: HashMap<(usize, usize, ChannelName, u64), usize> = HashMap::new();
    for r in records {
        let key = (r.qubits, r.layers, r.channel, r.kappa.to_bits());
        let i = *index.entry(key).or_insert_with(|| {
            rows.push(AggregateRow {
                qubits: r.qubits,
                layers: r.layers,
                channel: r.channel,
                kappa: r.kappa,
                mean_energy: 0.0,
                min_energy: f64::INFINITY,
                mean_deviation: 0.0,
                count: 0,
            });
            rows.len() - 1
        });
        let row = &mut rows[i];
        row.mean_energy += r.energy;
        row.mean_deviation += r.deviation;
        row.min_energy = row.min_energy.min(r.energy);
        row.count += 1;
    }
    for row in &mut rows {
        row.mean_energy /= row.count as f64;
        row.mean_deviation /= row.count as f64;
    }
    Ok(rows)
}

/// Six significant digits in the shortest of fixed or exponent notation,
/// like C's `%g`.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn write_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(RAW_HEADER).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record([
            r.qubits.to_string(),
            r.layers.to_string(),
            r.channel.to_string(),
            format_float(r.kappa),
            r.repetition.to_string(),
            format_float(r.energy),
            format_float(r.classical_min),
            format_float(r.deviation),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e))
}

pub fn write_aggregate_csv(rows: &[AggregateRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(AGGREGATE_HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.qubits.to_string(),
            r.layers.to_string(),
            r.channel.to_string(),
            format_float(r.kappa),
            format_float(r.mean_energy),
            format_float(r.min_energy),
            format_float(r.mean_deviation),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Config(format!("bad {name} in CSV line {}", rec.position().map_or(0, |p| p.line()))))
}

/// Reads a raw CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(RAW_HEADER) {
        return Err(Error::Config(format!("{}: unexpected header", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        out.push(SweepRecord {
            qubits: field(&rec, 0, "qubits")?,
            layers: field(&rec, 1, "layers")?,
            channel: field(&rec, 2, "channel")?,
            kappa: field(&rec, 3, "kappa")?,
            repetition: field(&rec, 4, "repetition")?,
            energy: field(&rec, 5, "energy")?,
            classical_min: field(&rec, 6, "classical_min")?,
            deviation: field(&rec, 7, "deviation")?,
        });
    }
    Ok(out)
}

/// One line per failed cell.
pub fn write_failure_log(failures: &[CellFailure], path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    for c in failures {
        writeln!(
            f,
            "layers={} channel={} kappa={}: {}",
            c.layers,
            c.channel,
            format_float(c.kappa),
            c.error
        )?;
    }
    f.flush()?;
    Ok(())
}
