//! Vehicle routing encoded as an Ising Hamiltonian and minimised by a
//! variational eigensolver on a noisy gate-level simulator.

pub mod circuit;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod noise;
pub mod problem;
pub mod seed;
pub mod simulator;
pub mod vqe;

pub use error::{Error, Result};
