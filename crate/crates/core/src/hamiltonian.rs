//! Diagonal cost Hamiltonians as polynomials in Pauli Z.

use crate::error::{Error, Result};
use crate::problem::{Assignment, IsingForm};
use crate::simulator::{basis_probabilities, QuantumState};

/// `sum c_ij Z_i Z_j + sum c_i Z_i + constant`, with `Z|0> = |0>` and
/// `Z|1> = -|1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliZPolynomial {
    num_qubits: usize,
    quadratic: Vec<(usize, usize, f64)>,
    linear: Vec<(usize, f64)>,
    constant: f64,
}

impl PauliZPolynomial {
    /// Terms with repeated indices are merged; zero coefficients dropped.
    pub fn new(
        num_qubits: usize,
        quadratic: &[(usize, usize, f64)],
        linear: &[(usize, f64)],
        constant: f64,
    ) -> Result<Self> {
        let mut quad = vec![0.0; num_qubits * num_qubits];
        for &(i, j, c) in quadratic {
            if i == j || i >= num_qubits || j >= num_qubits {
                return Err(Error::InvalidCircuit(format!(
                    "ZZ term ({i}, {j}) invalid on {num_qubits} qubits"
                )));
            }
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            quad[lo * num_qubits + hi] += c;
        }
        let mut lin = vec![0.0; num_qubits];
        for &(i, c) in linear {
            if i >= num_qubits {
                return Err(Error::InvalidCircuit(format!(
                    "Z term on qubit {i} invalid on {num_qubits} qubits"
                )));
            }
            lin[i] += c;
        }
        let mut quadratic = Vec::new();
        for i in 0..num_qubits {
            for j in i + 1..num_qubits {
                let c = quad[i * num_qubits + j];
                if c != 0.0 {
                    quadratic.push((i, j, c));
                }
            }
        }
        let linear = lin
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c != 0.0)
            .collect();
        Ok(PauliZPolynomial {
            num_qubits,
            quadratic,
            linear,
            constant,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn quadratic_terms(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    pub fn linear_terms(&self) -> &[(usize, f64)] {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Energy of computational basis state `index` (qubit 0 = lowest bit).
    pub fn energy_of_index(&self, index: usize) -> f64 {
        let z = |q: usize| if (index >> q) & 1 == 0 { 1.0 } else { -1.0 };
        let mut e = self.constant;
        for &(i, j, c) in &self.quadratic {
            e += c * z(i) * z(j);
        }
        for &(i, c) in &self.linear {
            e += c * z(i);
        }
        e
    }

    /// All `2^m` diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..1usize << self.num_qubits)
            .map(|x| self.energy_of_index(x))
            .collect()
    }

    pub fn energy_of(&self, x: &Assignment) -> Result<f64> {
        if x.len() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: x.len(),
            });
        }
        Ok(self.energy_of_index(x.basis_index()))
    }

    /// `<psi|H|psi>` or `Tr(rho H)` as a probability-weighted sum of
    /// diagonal energies.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: state.num_qubits(),
            });
        }
        let probs = basis_probabilities(state)?;
        Ok(self.expectation_from_probabilities(&probs))
    }

    /// Same as [`expectation`](Self::expectation) for precomputed
    /// probabilities; `diag` caching is left to the caller.
    pub fn expectation_from_probabilities(&self, probs: &[f64]) -> f64 {
        probs
            .iter()
            .enumerate()
            .map(|(x, p)| p * self.energy_of_index(x))
            .sum()
    }
}

/// Transfers an Ising form onto qubits. A set bit is spin `+1` and Z
/// eigenvalue `-1`, so `s_i = -Z_i`: the ZZ coefficient is `-J_ij` and the
/// Z coefficient is `+h_i`.
pub fn from_ising(ising: &IsingForm) -> PauliZPolynomial {
    let quadratic: Vec<_> = ising
        .couplings()
        .into_iter()
        .map(|(i, j, v)| (i, j, -v))
        .collect();
    let linear: Vec<_> = ising.h().iter().copied().enumerate().collect();
    PauliZPolynomial::new(ising.dim(), &quadratic, &linear, ising.d())
        .expect("Ising indices are in range")
}

/// Precomputed diagonal for repeated expectations over the same operator.
#[derive(Debug, Clone)]
pub struct DiagonalObservable {
    num_qubits: usize,
    energies: Vec<f64>,
}

impl DiagonalObservable {
    pub fn new(h: &PauliZPolynomial) -> Self {
        DiagonalObservable {
            num_qubits: h.num_qubits(),
            energies: h.diagonal(),
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: state.num_qubits(),
            });
        }
        let probs = basis_probabilities(state)?;
        Ok(probs.iter().zip(&self.energies).map(|(p, e)| p * e).sum())
    }

    pub fn min(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
