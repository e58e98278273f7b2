use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use vrpvqe::experiment::{
    aggregate, run_sweep, write_aggregate_csv, write_csv, write_failure_log, SweepConfig,
};
use vrpvqe::problem::{
    brute_force_minimum, build_qubo, decode_routes, qubo_to_ising, Decoded, InstanceSpec,
};
use vrpvqe::vqe::{vqe_multistart, VqeResult};

use crate::config::{load_instance, read_json, Overrides, RunConfig};
use crate::error::{CliError, CliResult};

pub const RAW_FILE: &str = "raw.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const FAILURE_FILE: &str = "failures.log";

fn emit(value: &impl Serialize, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Exact ground state of an instance file and the routes it encodes.
pub fn solve(instance_path: &Path, out: Option<&Path>) -> CliResult<()> {
    let spec: InstanceSpec = read_json(instance_path)?;
    let instance = spec.build()?;
    let ising = qubo_to_ising(&build_qubo(&instance));
    let (x, classical_min) = brute_force_minimum(&ising)?;
    let (routes, vrp_cost) = match decode_routes(&instance, &x)? {
        Decoded::Feasible(r) => (json!(r.routes), json!(r.total_cost)),
        Decoded::Infeasible(_) => (json!("infeasible"), Value::Null),
    };
    let report = json!({
        "classical_min": classical_min,
        "assignment": x.to_string(),
        "routes": routes,
        "vrp_cost": vrp_cost,
    });
    emit(&report, out)
}

#[derive(Serialize)]
struct VqeReport<'a> {
    qubits: usize,
    layers: usize,
    backend: &'static str,
    channel: String,
    kappa: f64,
    seed: u64,
    starts: usize,
    best_start: usize,
    classical_min: Option<f64>,
    #[serde(flatten)]
    best: &'a VqeResult,
}

pub fn vqe(config_path: &Path, out: Option<&Path>, jobs: Option<usize>, overrides: Overrides) -> CliResult<()> {
    let mut cfg: RunConfig = read_json(config_path)?;
    overrides.apply_run(&mut cfg);
    cfg.validate()?;
    let instance = load_instance(&cfg.instance, config_path)?;
    let ising = qubo_to_ising(&build_qubo(&instance));
    let vqe_cfg = cfg.vqe_config(ising.dim())?;
    let classical_min = match brute_force_minimum(&ising) {
        Ok((_, e)) => Some(e),
        Err(vrpvqe::Error::GuardExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let multi = with_jobs(jobs, || vqe_multistart(&ising, &vqe_cfg, cfg.starts))??;
    let report = VqeReport {
        qubits: ising.dim(),
        layers: cfg.layers,
        backend: vqe_cfg.backend.name(),
        channel: cfg.channel.to_string(),
        kappa: vqe_cfg.channel.map_or(0.0, |c| c.kappa()),
        seed: cfg.seed,
        starts: cfg.starts,
        best_start: multi.best_index,
        classical_min,
        best: multi.best(),
    };
    emit(&report, out)
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the grid and writes the raw and aggregate tables into `out_dir`.
/// Failed cells go to a sidecar log and do not abort the sweep.
pub fn sweep(config_path: &Path, out_dir: &Path, jobs: Option<usize>, overrides: Overrides) -> CliResult<usize> {
    let mut cfg: SweepConfig = read_json(config_path)?;
    overrides.apply_sweep(&mut cfg);
    cfg.validate()?;
    let instance = load_instance(&cfg.instance, config_path)?;
    let outcome = run_sweep(&cfg, &instance, jobs)?;

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    write_csv(&outcome.records, &out_dir.join(RAW_FILE))?;
    let rows = if outcome.records.is_empty() {
        Vec::new()
    } else {
        aggregate(&outcome.records)?
    };
    write_aggregate_csv(&rows, &out_dir.join(AGGREGATE_FILE))?;
    if !outcome.failures.is_empty() {
        write_failure_log(&outcome.failures, &out_dir.join(FAILURE_FILE))?;
        eprintln!(
            "warning: {} cell(s) failed, see {}",
            outcome.failures.len(),
            out_dir.join(FAILURE_FILE).display()
        );
    }
    Ok(outcome.failures.len())
}
