//! The fixed cost/mixer ansatz as a gate list, parameter binding and a
//! dense-matrix reference evaluator.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::IsingForm;

/// Largest register [`circuit_unitary`] will build a dense matrix for.
pub const MAX_UNITARY_QUBITS: usize = 8;

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Matrix4 = [[Complex64; 4]; 4];

/// A gate angle: a constant, or `scale * params[index]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Angle {
    Fixed(f64),
    Param { index: usize, scale: f64 },
}

impl Angle {
    pub fn bind(&self, params: &[f64]) -> Result<f64> {
        match *self {
            Angle::Fixed(v) => Ok(v),
            Angle::Param { index, scale } => params.get(index).map(|p| scale * p).ok_or_else(|| {
                Error::InvalidCircuit(format!("parameter {index} is unbound"))
            }),
        }
    }
}

/// Gates of the ansatz, generic over the angle type (`Angle` before
/// binding, `f64` after).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate<P> {
    Hadamard { qubit: usize },
    Cnot { control: usize, target: usize },
    /// `diag(1, e^{i lambda})`
    Phase { qubit: usize, lambda: P },
    /// IBM `U(theta, phi, lambda)`.
    U {
        qubit: usize,
        theta: P,
        phi: P,
        lambda: P,
    },
}

impl<P> Gate<P> {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Hadamard { qubit } | Gate::Phase { qubit, .. } | Gate::U { qubit, .. } => {
                vec![qubit]
            }
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    fn check(&self, num_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= num_qubits) {
            return Err(Error::InvalidCircuit(format!(
                "qubit {q} out of range for {num_qubits} qubits"
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::InvalidCircuit(format!(
                "CNOT needs distinct qubits, got {} twice",
                qs[0]
            )));
        }
        Ok(())
    }
}

impl Gate<Angle> {
    pub fn bind(&self, params: &[f64]) -> Result<Gate<f64>> {
        Ok(match *self {
            Gate::Hadamard { qubit } => Gate::Hadamard { qubit },
            Gate::Cnot { control, target } => Gate::Cnot { control, target },
            Gate::Phase { qubit, lambda } => Gate::Phase {
                qubit,
                lambda: lambda.bind(params)?,
            },
            Gate::U {
                qubit,
                theta,
                phi,
                lambda,
            } => Gate::U {
                qubit,
                theta: theta.bind(params)?,
                phi: phi.bind(params)?,
                lambda: lambda.bind(params)?,
            },
        })
    }
}

/// Local matrix of a bound gate. Two-qubit matrices use the basis index
/// `2 * control_bit + target_bit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One(Matrix2),
    Two(Matrix4),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn u_matrix(theta: f64, phi: f64, lambda: f64) -> Matrix2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [c(co, 0.0), -Complex64::from_polar(s, lambda)],
        [Complex64::from_polar(s, phi), Complex64::from_polar(co, lambda + phi)],
    ]
}

pub fn phase_matrix(lambda: f64) -> Matrix2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), Complex64::from_polar(1.0, lambda)]]
}

pub fn hadamard_matrix() -> Matrix2 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]]
}

pub fn cnot_matrix() -> Matrix4 {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    [[l, o, o, o], [o, l, o, o], [o, o, o, l], [o, o, l, o]]
}

pub fn gate_matrix(gate: &Gate<f64>) -> GateMatrix {
    match *gate {
        Gate::Hadamard { .. } => GateMatrix::One(hadamard_matrix()),
        Gate::Cnot { .. } => GateMatrix::Two(cnot_matrix()),
        Gate::Phase { lambda, .. } => GateMatrix::One(phase_matrix(lambda)),
        Gate::U {
            theta, phi, lambda, ..
        } => GateMatrix::One(u_matrix(theta, phi, lambda)),
    }
}

/// Matrix of a symbolic gate under `params`.
pub fn gate_matrix_with(gate: &Gate<Angle>, params: &[f64]) -> Result<GateMatrix> {
    Ok(gate_matrix(&gate.bind(params)?))
}

/// The ansatz with unbound angles. Parameters are `gamma_1..gamma_p`
/// followed by `beta_1..beta_p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterizedCircuit {
    num_qubits: usize,
    layers: usize,
    gates: Vec<Gate<Angle>>,
    boundaries: Vec<usize>,
}

impl ParameterizedCircuit {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn parameter_count(&self) -> usize {
        2 * self.layers
    }

    pub fn gates(&self) -> &[Gate<Angle>] {
        &self.gates
    }

    /// Gate counts after which a layer ends: the Hadamard preparation
    /// block, then every cost+mixer layer.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn bind(&self, params: &[f64]) -> Result<ConcreteCircuit> {
        bind_parameters(self, params)
    }
}

/// A circuit with every angle fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcreteCircuit {
    num_qubits: usize,
    gates: Vec<Gate<f64>>,
    boundaries: Vec<usize>,
}

impl ConcreteCircuit {
    /// A circuit with a single layer boundary at its end.
    pub fn new(num_qubits: usize, gates: Vec<Gate<f64>>) -> Result<Self> {
        let end = gates.len();
        Self::with_boundaries(num_qubits, gates, vec![end])
    }

    pub fn with_boundaries(
        num_qubits: usize,
        gates: Vec<Gate<f64>>,
        boundaries: Vec<usize>,
    ) -> Result<Self> {
        for g in &gates {
            g.check(num_qubits)?;
        }
        if boundaries.windows(2).any(|w| w[0] > w[1])
            || boundaries.iter().any(|&b| b > gates.len())
        {
            return Err(Error::InvalidCircuit(format!(
                "layer boundaries {boundaries:?} invalid for {} gates",
                gates.len()
            )));
        }
        Ok(ConcreteCircuit {
            num_qubits,
            gates,
            boundaries,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate<f64>] {
        &self.gates
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }
}

/// Builds the alternating cost/mixer ansatz for `ising`.
///
/// After a Hadamard on every qubit, each layer `l` applies, for each
/// non-zero coupling in ascending `(i, j)` order, `CNOT(i,j) Phase_j(-2 J_ij gamma_l) CNOT(i,j)`,
/// then `Phase_i(-2 h_i gamma_l)` for each non-zero field, then the mixer
/// `U(2 beta_l, pi/2, -pi/2) = exp(i beta_l X)` on every qubit. The global
/// phases split off by the phase-gate form are dropped. Each layer ends at
/// a boundary; the Hadamard block does not.
pub fn build_ansatz(ising: &IsingForm, layers: usize) -> Result<ParameterizedCircuit> {
    if layers < 1 {
        return Err(Error::InvalidCircuit("ansatz needs at least one layer".into()));
    }
    let m = ising.dim();
    let couplings = ising.couplings();
    let mut gates: Vec<Gate<Angle>> = (0..m).map(|qubit| Gate::Hadamard { qubit }).collect();
    let mut boundaries = Vec::with_capacity(layers);
    for l in 0..layers {
        let gamma = |coeff: f64| Angle::Param {
            index: l,
            scale: -2.0 * coeff,
        };
        for &(i, j, coupling) in &couplings {
            gates.push(Gate::Cnot {
                control: i,
                target: j,
            });
            gates.push(Gate::Phase {
                qubit: j,
                lambda: gamma(coupling),
            });
            gates.push(Gate::Cnot {
                control: i,
                target: j,
            });
        }
        for (i, &h) in ising.h().iter().enumerate() {
            if h != 0.0 {
                gates.push(Gate::Phase {
                    qubit: i,
                    lambda: gamma(h),
                });
            }
        }
        for qubit in 0..m {
            gates.push(Gate::U {
                qubit,
                theta: Angle::Param {
                    index: layers + l,
                    scale: 2.0,
                },
                phi: Angle::Fixed(FRAC_PI_2),
                lambda: Angle::Fixed(-FRAC_PI_2),
            });
        }
        boundaries.push(gates.len());
    }
    Ok(ParameterizedCircuit {
        num_qubits: m,
        layers,
        gates,
        boundaries,
    })
}

pub fn bind_parameters(circuit: &ParameterizedCircuit, params: &[f64]) -> Result<ConcreteCircuit> {
    if params.len() != circuit.parameter_count() {
        return Err(Error::ParameterCount {
            expected: circuit.parameter_count(),
            actual: params.len(),
        });
    }
    let gates = circuit
        .gates
        .iter()
        .map(|g| g.bind(params))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConcreteCircuit {
        num_qubits: circuit.num_qubits,
        gates,
        boundaries: circuit.boundaries.clone(),
    })
}

/// Dense `2^m x 2^m` row-major matrix of a whole circuit, built by
/// embedding each gate into the full register and multiplying in
/// application order.
pub fn circuit_unitary(circuit: &ConcreteCircuit) -> Result<Vec<Complex64>> {
    let m = circuit.num_qubits;
    if m > MAX_UNITARY_QUBITS {
        return Err(Error::GuardExceeded {
            what: "dense circuit unitary",
            requested: m,
            limit: MAX_UNITARY_QUBITS,
        });
    }
    let dim = 1usize << m;
    let mut total = identity(dim);
    for gate in &circuit.gates {
        let full = embed(gate, m);
        total = matmul(&full, &total, dim);
    }
    Ok(total)
}

pub fn identity(dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        out[i * dim + i] = Complex64::new(1.0, 0.0);
    }
    out
}

/// Full-register matrix of one gate: entry `(r, c)` is the local matrix
/// entry selected by the acted-on bits of `r` and `c` when every other bit
/// agrees, zero otherwise.
pub fn embed(gate: &Gate<f64>, num_qubits: usize) -> Vec<Complex64> {
    let dim = 1usize << num_qubits;
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    let qs = gate.qubits();
    let mask: usize = qs.iter().map(|q| 1usize << q).sum();
    let local = |x: usize| -> usize {
        qs.iter()
            .fold(0, |acc, &q| (acc << 1) | ((x >> q) & 1))
    };
    let matrix = gate_matrix(gate);
    for r in 0..dim {
        for col in 0..dim {
            if r & !mask != col & !mask {
                continue;
            }
            out[r * dim + col] = match &matrix {
                GateMatrix::One(u) => u[local(r)][local(col)],
                GateMatrix::Two(u) => u[local(r)][local(col)],
            };
        }
    }
    out
}

/// `a * b` for square row-major matrices, skipping zero entries of `a`.
pub fn matmul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for k in 0..dim {
            let v = a[r * dim + k];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = &b[k * dim..(k + 1) * dim];
            for (o, x) in out[r * dim..(r + 1) * dim].iter_mut().zip(row) {
                *o += v * x;
            }
        }
    }
    out
}

/// `max |(U^dagger U - I)_ij|`.
pub fn unitarity_defect(u: &[Complex64], dim: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += u[k * dim + i].conj() * u[k * dim + j];
            }
            if i == j {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}
