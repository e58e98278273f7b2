//! Statevector, density-matrix and Monte-Carlo trajectory execution of
//! concrete circuits.
//!
//! Qubit 0 is the least significant bit of a basis index. A density
//! matrix over `m` qubits is stored row-major as a vector over `2m` bits:
//! column bits occupy positions `0..m` and row bits `m..2m`. Left
//! multiplication by `U` on qubit `q` is then `U` on bit `m + q`, right
//! multiplication by `U^dagger` is `conj(U)` on bit `q`, so the same
//! kernels drive both representations.

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{ConcreteCircuit, Gate, Matrix2, Matrix4};
use crate::error::{Error, Result};
use crate::hamiltonian::{DiagonalObservable, PauliZPolynomial};
use crate::noise::NoiseChannel;
use crate::seed;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Most negative diagonal entry treated as rounding noise.
pub const NEGATIVE_PROBABILITY_TOL: f64 = 1e-10;
/// Accepted deviation of total probability from one.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Memory guards for the three backends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimLimits {
    pub max_statevector_qubits: usize,
    pub max_density_qubits: usize,
    /// Raises the density guard to `max_large_density_qubits`.
    pub allow_large_density: bool,
    pub max_large_density_qubits: usize,
}

impl Default for SimLimits {
    fn default() -> Self {
        SimLimits {
            max_statevector_qubits: 14,
            max_density_qubits: 10,
            allow_large_density: false,
            max_large_density_qubits: 12,
        }
    }
}

impl SimLimits {
    pub fn with_large_density(mut self, allow: bool) -> Self {
        self.allow_large_density = allow;
        self
    }

    /// Guard for pure-state runs (statevector and trajectories).
    pub fn check_pure(&self, what: &'static str, qubits: usize) -> Result<()> {
        check_guard(what, qubits, self.max_statevector_qubits)
    }

    pub fn check_density(&self, qubits: usize) -> Result<()> {
        check_guard("density-matrix simulation", qubits, self.density_limit())
    }

    fn density_limit(&self) -> usize {
        if self.allow_large_density {
            self.max_large_density_qubits.max(self.max_density_qubits)
        } else {
            self.max_density_qubits
        }
    }
}

/// When a noise channel acts during a noisy run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePlacement {
    /// At every layer boundary of the circuit, on every qubit.
    #[default]
    AfterEachLayer,
    /// After every gate, on every qubit.
    AfterEachGate,
    /// Once at the end, on every qubit.
    Final,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure {
        num_qubits: usize,
        amplitudes: Vec<Complex64>,
    },
    Mixed {
        num_qubits: usize,
        /// Row-major `2^m x 2^m`.
        rho: Vec<Complex64>,
    },
}

impl QuantumState {
    /// `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = ONE;
        QuantumState::Pure {
            num_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << num_qubits,
                actual: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(Complex64::norm_sqr).sum();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(QuantumState::Pure {
            num_qubits,
            amplitudes,
        })
    }

    pub fn from_density(num_qubits: usize, rho: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if rho.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: rho.len(),
            });
        }
        let state = QuantumState::Mixed { num_qubits, rho };
        let tr = state.trace();
        if (tr - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        Ok(state)
    }

    /// `I / 2^m`.
    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut rho = vec![ZERO; dim * dim];
        for i in 0..dim {
            rho[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        QuantumState::Mixed { num_qubits, rho }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            QuantumState::Pure { num_qubits, .. } | QuantumState::Mixed { num_qubits, .. } => {
                *num_qubits
            }
        }
    }

    pub fn is_density(&self) -> bool {
        matches!(self, QuantumState::Mixed { .. })
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        match self {
            QuantumState::Pure { amplitudes, .. } => Some(amplitudes),
            QuantumState::Mixed { .. } => None,
        }
    }

    pub fn density(&self) -> Option<&[Complex64]> {
        match self {
            QuantumState::Mixed { rho, .. } => Some(rho),
            QuantumState::Pure { .. } => None,
        }
    }

    /// `|psi><psi|` for pure states, a copy otherwise.
    pub fn to_density(&self) -> QuantumState {
        match self {
            QuantumState::Pure {
                num_qubits,
                amplitudes,
            } => {
                let dim = amplitudes.len();
                let mut rho = vec![ZERO; dim * dim];
                for (r, a) in amplitudes.iter().enumerate() {
                    for (c, b) in amplitudes.iter().enumerate() {
                        rho[r * dim + c] = a * b.conj();
                    }
                }
                QuantumState::Mixed {
                    num_qubits: *num_qubits,
                    rho,
                }
            }
            mixed => mixed.clone(),
        }
    }

    /// Squared norm for pure states, `Tr(rho)` for mixed ones.
    pub fn trace(&self) -> f64 {
        match self {
            QuantumState::Pure { amplitudes, .. } => amplitudes.iter().map(|a| a.norm_sqr()).sum(),
            QuantumState::Mixed { num_qubits, rho } => {
                let dim = 1usize << num_qubits;
                (0..dim).map(|i| rho[i * dim + i].re).sum()
            }
        }
    }

    /// `max |rho_ij - conj(rho_ji)|`; zero for pure states.
    pub fn hermiticity_defect(&self) -> f64 {
        match self {
            QuantumState::Pure { .. } => 0.0,
            QuantumState::Mixed { num_qubits, rho } => {
                let dim = 1usize << num_qubits;
                let mut worst: f64 = 0.0;
                for i in 0..dim {
                    for j in i..dim {
                        worst = worst.max((rho[i * dim + j] - rho[j * dim + i].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    fn raw(&mut self) -> &mut Vec<Complex64> {
        match self {
            QuantumState::Pure { amplitudes, .. } => amplitudes,
            QuantumState::Mixed { rho, .. } => rho,
        }
    }

    /// Applies a bound gate: `U psi` or `U rho U^dagger`.
    pub fn apply_gate(&mut self, gate: &Gate<f64>) {
        let m = self.num_qubits();
        let density = self.is_density();
        let v = self.raw();
        match *gate {
            Gate::Cnot { control, target } => {
                apply_cnot(v, control, target);
                if density {
                    apply_cnot(v, m + control, m + target);
                }
            }
            Gate::Phase { qubit, lambda } => {
                let p = Complex64::from_polar(1.0, lambda);
                apply_phase(v, qubit, if density { p.conj() } else { p });
                if density {
                    apply_phase(v, m + qubit, p);
                }
            }
            _ => {
                let u = match crate::circuit::gate_matrix(gate) {
                    crate::circuit::GateMatrix::One(u) => u,
                    crate::circuit::GateMatrix::Two(_) => unreachable!("only CNOT is two-qubit"),
                };
                let q = gate.qubits()[0];
                if density {
                    apply_single(v, m + q, &u);
                    apply_single(v, q, &conj2(&u));
                } else {
                    apply_single(v, q, &u);
                }
            }
        }
    }
}

fn conj2(u: &Matrix2) -> Matrix2 {
    u.map(|row| row.map(|x| x.conj()))
}

/// `v <- U v` on bit `q`.
pub(crate) fn apply_single(v: &mut [Complex64], q: usize, u: &Matrix2) {
    let stride = 1usize << q;
    for base in (0..v.len()).step_by(2 * stride) {
        for i in base..base + stride {
            let a = v[i];
            let b = v[i + stride];
            v[i] = u[0][0] * a + u[0][1] * b;
            v[i + stride] = u[1][0] * a + u[1][1] * b;
        }
    }
}

fn apply_phase(v: &mut [Complex64], q: usize, phase: Complex64) {
    let bit = 1usize << q;
    for (i, x) in v.iter_mut().enumerate() {
        if i & bit != 0 {
            *x *= phase;
        }
    }
}

fn apply_cnot(v: &mut [Complex64], control: usize, target: usize) {
    let c = 1usize << control;
    let t = 1usize << target;
    for i in 0..v.len() {
        if i & c != 0 && i & t == 0 {
            v.swap(i, i | t);
        }
    }
}

/// `v <- M v` on bits `(a, b)`, local index `2 * bit_a + bit_b`.
fn apply_pair(v: &mut [Complex64], a: usize, b: usize, mat: &Matrix4) {
    let ba = 1usize << a;
    let bb = 1usize << b;
    for i in 0..v.len() {
        if i & ba != 0 || i & bb != 0 {
            continue;
        }
        let idx = [i, i | bb, i | ba, i | ba | bb];
        let old = idx.map(|k| v[k]);
        for (r, &k) in idx.iter().enumerate() {
            v[k] = (0..4).map(|c| mat[r][c] * old[c]).sum();
        }
    }
}

/// `sum_k E_k (x) conj(E_k)` acting on (row bit, column bit).
fn superoperator(kraus: &[Matrix2]) -> Matrix4 {
    let mut s = [[ZERO; 4]; 4];
    for e in kraus {
        for r in 0..4 {
            for c in 0..4 {
                s[r][c] += e[r >> 1][c >> 1] * e[r & 1][c & 1].conj();
            }
        }
    }
    s
}

/// `rho <- sum_m E_m rho E_m^dagger` with every `E_m` acting on `qubit`.
pub fn apply_channel(state: &mut QuantumState, channel: &NoiseChannel, qubit: usize) -> Result<()> {
    apply_kraus(state, &channel.kraus(), qubit)
}

fn apply_kraus(state: &mut QuantumState, kraus: &[Matrix2], qubit: usize) -> Result<()> {
    let m = state.num_qubits();
    if qubit >= m {
        return Err(Error::InvalidState(format!(
            "qubit {qubit} out of range for {m} qubits"
        )));
    }
    match state {
        QuantumState::Pure { .. } => Err(Error::InvalidState(
            "channels act on density matrices; promote the state first".into(),
        )),
        QuantumState::Mixed { rho, .. } => {
            apply_pair(rho, m + qubit, qubit, &superoperator(kraus));
            Ok(())
        }
    }
}

fn check_guard(what: &'static str, requested: usize, limit: usize) -> Result<()> {
    if requested > limit {
        return Err(Error::GuardExceeded {
            what,
            requested,
            limit,
        });
    }
    Ok(())
}

/// Noiseless execution from `|0..0>`.
pub fn run_statevector(circuit: &ConcreteCircuit, limits: &SimLimits) -> Result<QuantumState> {
    let m = circuit.num_qubits();
    limits.check_pure("statevector simulation", m)?;
    let mut state = QuantumState::basis(m, 0);
    for g in circuit.gates() {
        state.apply_gate(g);
    }
    Ok(state)
}

/// Visits gates and noise sites in execution order. `noise` receives the
/// qubits to damage at each site.
fn walk<E>(
    circuit: &ConcreteCircuit,
    placement: NoisePlacement,
    mut gate: impl FnMut(&Gate<f64>) -> std::result::Result<(), E>,
    mut noise: impl FnMut(&[usize]) -> std::result::Result<(), E>,
) -> std::result::Result<(), E> {
    let all: Vec<usize> = (0..circuit.num_qubits()).collect();
    let gates = circuit.gates();
    let mut boundaries = circuit.boundaries().iter().peekable();
    for i in 0..=gates.len() {
        if placement == NoisePlacement::AfterEachLayer {
            while boundaries.next_if(|&&b| b == i).is_some() {
                noise(&all)?;
            }
        }
        if let Some(g) = gates.get(i) {
            gate(g)?;
            if placement == NoisePlacement::AfterEachGate {
                noise(&all)?;
            }
        }
    }
    if placement == NoisePlacement::Final {
        noise(&all)?;
    }
    Ok(())
}

/// Density-matrix execution with `channel` (if any) inserted per `placement`.
pub fn run_density(
    circuit: &ConcreteCircuit,
    channel: Option<&NoiseChannel>,
    placement: NoisePlacement,
    limits: &SimLimits,
) -> Result<QuantumState> {
    let m = circuit.num_qubits();
    limits.check_density(m)?;
    let mut state = QuantumState::basis(m, 0).to_density();
    let kraus = channel.map(NoiseChannel::kraus);
    let cell = std::cell::RefCell::new(&mut state);
    walk(
        circuit,
        placement,
        |g| {
            cell.borrow_mut().apply_gate(g);
            Ok::<(), Error>(())
        },
        |qubits| {
            if let Some(k) = &kraus {
                for &q in qubits {
                    apply_kraus(&mut cell.borrow_mut(), k, q)?;
                }
            }
            Ok(())
        },
    )?;
    Ok(state)
}

/// Sample mean of a trajectory ensemble and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Pure-state unravelling: at each noise site one Kraus branch is drawn
/// with probability `||E_k psi||^2` and the state renormalised. Trajectory
/// `t` draws from its own stream seeded by `(seed, t)`, so the estimate is
/// independent of how many threads run.
pub fn run_trajectories(
    circuit: &ConcreteCircuit,
    channel: Option<&NoiseChannel>,
    placement: NoisePlacement,
    observable: &PauliZPolynomial,
    n_traj: usize,
    seed_value: u64,
    limits: &SimLimits,
) -> Result<TrajectoryEstimate> {
    limits.check_pure("trajectory simulation", circuit.num_qubits())?;
    let diag = DiagonalObservable::new(observable);
    run_trajectories_diag(circuit, channel, placement, &diag, n_traj, seed_value, limits)
}

pub(crate) fn run_trajectories_diag(
    circuit: &ConcreteCircuit,
    channel: Option<&NoiseChannel>,
    placement: NoisePlacement,
    observable: &DiagonalObservable,
    n_traj: usize,
    seed_value: u64,
    limits: &SimLimits,
) -> Result<TrajectoryEstimate> {
    if n_traj == 0 {
        return Err(Error::Config("n_traj must be at least 1".into()));
    }
    let m = circuit.num_qubits();
    limits.check_pure("trajectory simulation", m)?;
    let Some(channel) = channel else {
        let state = run_statevector(circuit, limits)?;
        return Ok(TrajectoryEstimate {
            mean: observable.expectation(&state)?,
            std_error: 0.0,
        });
    };
    let kraus = channel.kraus();
    let values = (0..n_traj)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive(seed_value, &[t as u64]));
            let mut amps = vec![ZERO; 1 << m];
            amps[0] = ONE;
            let mut state = QuantumState::Pure {
                num_qubits: m,
                amplitudes: amps,
            };
            let cell = std::cell::RefCell::new(&mut state);
            walk(
                circuit,
                placement,
                |g| {
                    cell.borrow_mut().apply_gate(g);
                    Ok::<(), Error>(())
                },
                |qubits| {
                    let mut st = cell.borrow_mut();
                    let v = st.raw();
                    for &q in qubits {
                        jump(v, q, &kraus, &mut rng);
                    }
                    Ok(())
                },
            )?;
            observable.expectation(&state)
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(TrajectoryEstimate { mean, std_error })
}

/// One stochastic Kraus jump on qubit `q` of a normalised state vector.
fn jump(v: &mut [Complex64], q: usize, kraus: &[Matrix2], rng: &mut impl RngCore) {
    let stride = 1usize << q;
    let weight = |e: &Matrix2| -> f64 {
        let mut w = 0.0;
        for base in (0..v.len()).step_by(2 * stride) {
            for i in base..base + stride {
                let (a, b) = (v[i], v[i + stride]);
                w += (e[0][0] * a + e[0][1] * b).norm_sqr() + (e[1][0] * a + e[1][1] * b).norm_sqr();
            }
        }
        w
    };
    let weights: Vec<f64> = kraus.iter().map(weight).collect();
    let total: f64 = weights.iter().sum();
    let mut u = seed::unit_f64(rng.next_u64()) * total;
    let mut pick = weights.len() - 1;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            pick = k;
            break;
        }
        u -= w;
    }
    // skip zero-weight branches that rounding could land on
    while weights[pick] <= 0.0 && pick > 0 {
        pick -= 1;
    }
    let scale = 1.0 / weights[pick].sqrt();
    let e = kraus[pick].map(|row| row.map(|x| x * scale));
    apply_single(v, q, &e);
}

/// `|amplitude|^2` or `diag(rho)`. Negative diagonals down to
/// `-1e-10` are clamped to zero.
pub fn basis_probabilities(state: &QuantumState) -> Result<Vec<f64>> {
    let probs: Vec<f64> = match state {
        QuantumState::Pure { amplitudes, .. } => amplitudes.iter().map(|a| a.norm_sqr()).collect(),
        QuantumState::Mixed { num_qubits, rho } => {
            let dim = 1usize << num_qubits;
            let mut out = Vec::with_capacity(dim);
            for i in 0..dim {
                let p = rho[i * dim + i].re;
                if p < -NEGATIVE_PROBABILITY_TOL {
                    return Err(Error::InvalidState(format!(
                        "negative probability {p} at basis state {i}"
                    )));
                }
                out.push(p.max(0.0));
            }
            out
        }
    };
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidState(format!("probabilities sum to {total}")));
    }
    Ok(probs)
}

/// Multinomial shot counts drawn from `probs`.
pub fn sample_counts(probs: &[f64], shots: usize, rng: &mut impl Rng) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u = seed::unit_f64(rng.next_u64()) * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        counts[idx] += 1;
    }
    counts
}

/// Energy estimate from `shots` measurements in the computational basis.
pub fn shot_expectation(
    observable: &DiagonalObservable,
    state: &QuantumState,
    shots: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    let probs = basis_probabilities(state)?;
    let counts = sample_counts(&probs, shots, rng);
    Ok(counts
        .iter()
        .zip(observable.energies())
        .map(|(&c, e)| c as f64 * e)
        .sum::<f64>()
        / shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseKind;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus_density() -> QuantumState {
        let circ = ConcreteCircuit::new(1, vec![Gate::Hadamard { qubit: 0 }]).unwrap();
        run_statevector(&circ, &SimLimits::default()).unwrap().to_density()
    }

    #[test]
    fn empty_and_hadamard_circuits() {
        let lim = SimLimits::default();
        let empty = ConcreteCircuit::new(3, vec![]).unwrap();
        assert_eq!(run_statevector(&empty, &lim).unwrap(), QuantumState::basis(3, 0));

        let hs = ConcreteCircuit::new(3, (0..3).map(|q| Gate::Hadamard { qubit: q }).collect())
            .unwrap();
        let st = run_statevector(&hs, &lim).unwrap();
        for a in st.amplitudes().unwrap() {
            assert!((a - c(8f64.sqrt().recip(), 0.0)).norm() < 1e-15);
        }
        let probs = basis_probabilities(&st).unwrap();
        assert!(probs.iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn guards() {
        let lim = SimLimits::default();
        let wide = ConcreteCircuit::new(15, vec![]).unwrap();
        assert!(matches!(run_statevector(&wide, &lim), Err(Error::GuardExceeded { .. })));
        let eleven = ConcreteCircuit::new(11, vec![]).unwrap();
        assert!(matches!(
            run_density(&eleven, None, NoisePlacement::Final, &lim),
            Err(Error::GuardExceeded { limit: 10, .. })
        ));
    }

    #[test]
    fn amplitude_damping_on_plus() {
        let mut rho = plus_density();
        let ch = NoiseChannel::new(NoiseKind::AmplitudeDamping, 0.3).unwrap();
        apply_channel(&mut rho, &ch, 0).unwrap();
        let r = rho.density().unwrap();
        let off = 0.7f64.sqrt() / 2.0;
        let want = [c(0.65, 0.0), c(off, 0.0), c(off, 0.0), c(0.35, 0.0)];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn trivial_and_phase_flip_channels() {
        let zero = NoiseChannel::new(NoiseKind::Depolarizing, 0.0).unwrap();
        let mut rho = plus_density();
        apply_channel(&mut rho, &zero, 0).unwrap();
        assert_eq!(rho, plus_density());

        let diag = QuantumState::from_density(
            1,
            vec![c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.7, 0.0)],
        )
        .unwrap();
        let mut out = diag.clone();
        apply_channel(&mut out, &NoiseChannel::new(NoiseKind::PhaseFlip, 0.4).unwrap(), 0).unwrap();
        assert_eq!(out, diag);
    }

    #[test]
    fn channel_errors() {
        let ch = NoiseChannel::new(NoiseKind::BitFlip, 0.1).unwrap();
        let mut pure = QuantumState::basis(2, 0);
        assert!(apply_channel(&mut pure, &ch, 0).is_err());
        let mut mixed = QuantumState::maximally_mixed(2);
        assert!(apply_channel(&mut mixed, &ch, 2).is_err());
    }

    #[test]
    fn bit_flip_leaves_plus_alone() {
        let circ = ConcreteCircuit::new(1, vec![Gate::Hadamard { qubit: 0 }]).unwrap();
        let ch = NoiseChannel::new(NoiseKind::BitFlip, 0.5).unwrap();
        let st = run_density(&circ, Some(&ch), NoisePlacement::Final, &SimLimits::default())
            .unwrap();
        for (a, b) in st.density().unwrap().iter().zip(plus_density().density().unwrap()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn placement_counts_noise_sites() {
        let gates = vec![
            Gate::Hadamard { qubit: 0 },
            Gate::Cnot { control: 0, target: 1 },
            Gate::Hadamard { qubit: 1 },
        ];
        let circ = ConcreteCircuit::with_boundaries(2, gates, vec![1, 3]).unwrap();
        let count = |p| {
            let mut sites = Vec::new();
            walk(&circ, p, |_| Ok::<(), ()>(()), |q| {
                sites.push(q.to_vec());
                Ok(())
            })
            .unwrap();
            sites
        };
        assert_eq!(count(NoisePlacement::AfterEachLayer), vec![vec![0, 1], vec![0, 1]]);
        assert_eq!(
            count(NoisePlacement::AfterEachGate),
            vec![vec![0, 1], vec![0, 1], vec![0, 1]]
        );
        assert_eq!(count(NoisePlacement::Final), vec![vec![0, 1]]);
    }

    #[test]
    fn probabilities_reject_negative_diagonal() {
        let bad = QuantumState::Mixed {
            num_qubits: 1,
            rho: vec![c(1.1, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.1, 0.0)],
        };
        assert!(basis_probabilities(&bad).is_err());
        let tiny = QuantumState::Mixed {
            num_qubits: 1,
            rho: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1e-12, 0.0)],
        };
        assert_eq!(basis_probabilities(&tiny).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn shot_sampling_is_seeded() {
        let h = PauliZPolynomial::new(1, &[], &[(0, 1.0)], 0.0).unwrap();
        let diag = DiagonalObservable::new(&h);
        let st = plus_density();
        let a = shot_expectation(&diag, &st, 1000, &mut seed::rng(3)).unwrap();
        let b = shot_expectation(&diag, &st, 1000, &mut seed::rng(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.abs() < 0.15);
        let counts = sample_counts(&[0.0, 1.0, 0.0], 50, &mut seed::rng(1));
        assert_eq!(counts, vec![0, 50, 0]);
    }

    #[test]
    fn noiseless_trajectories_are_exact() {
        let circ = ConcreteCircuit::new(
            2,
            vec![Gate::Hadamard { qubit: 0 }, Gate::Cnot { control: 0, target: 1 }],
        )
        .unwrap();
        let h = PauliZPolynomial::new(2, &[(0, 1, 2.0)], &[(1, 0.5)], 1.0).unwrap();
        let est = run_trajectories(&circ, None, NoisePlacement::AfterEachLayer, &h, 10, 1, &SimLimits::default())
            .unwrap();
        let sv = run_statevector(&circ, &SimLimits::default()).unwrap();
        assert_eq!(est.mean, h.expectation(&sv).unwrap());
        assert_eq!(est.std_error, 0.0);
    }
}
