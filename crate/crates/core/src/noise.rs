//! Single-qubit Kraus channels.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::Matrix2;
use crate::error::{Error, Result};

/// Completeness tolerance for `sum E^dagger E = I`.
pub const COMPLETENESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    AmplitudeDamping,
    BitFlip,
    PhaseFlip,
    BitPhaseFlip,
    Depolarizing,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::AmplitudeDamping,
        NoiseKind::BitFlip,
        NoiseKind::PhaseFlip,
        NoiseKind::BitPhaseFlip,
        NoiseKind::Depolarizing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::AmplitudeDamping => "amplitude_damping",
            NoiseKind::BitFlip => "bit_flip",
            NoiseKind::PhaseFlip => "phase_flip",
            NoiseKind::BitPhaseFlip => "bit_phase_flip",
            NoiseKind::Depolarizing => "depolarizing",
        }
    }

    /// Unital channels map `I/2` to itself.
    pub fn is_unital(self) -> bool {
        self != NoiseKind::AmplitudeDamping
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A channel name as it appears in config files: one of the five kinds or
/// `"none"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelName(pub Option<NoiseKind>);

impl ChannelName {
    pub fn as_str(&self) -> &'static str {
        self.0.map_or("none", NoiseKind::name)
    }
}

impl fmt::Display for ChannelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(ChannelName(None));
        }
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .map(|k| ChannelName(Some(k)))
            .ok_or_else(|| Error::Config(format!("unknown noise channel {s:?}")))
    }
}

impl Serialize for ChannelName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ChannelName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseChannel {
    kind: NoiseKind,
    kappa: f64,
}

impl NoiseChannel {
    pub fn new(kind: NoiseKind, kappa: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::KappaOutOfRange(kappa));
        }
        Ok(NoiseChannel { kind, kappa })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kraus(&self) -> Vec<Matrix2> {
        kraus_operators(self)
    }
}

fn m(a: [[(f64, f64); 2]; 2], scale: f64) -> Matrix2 {
    a.map(|row| row.map(|(re, im)| Complex64::new(re * scale, im * scale)))
}

const I: [[(f64, f64); 2]; 2] = [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (1.0, 0.0)]];
const X: [[(f64, f64); 2]; 2] = [[(0.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 0.0)]];
const Y: [[(f64, f64); 2]; 2] = [[(0.0, 0.0), (0.0, -1.0)], [(0.0, 1.0), (0.0, 0.0)]];
const Z: [[(f64, f64); 2]; 2] = [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-1.0, 0.0)]];

pub fn kraus_operators(channel: &NoiseChannel) -> Vec<Matrix2> {
    let k = channel.kappa;
    let keep = (1.0 - k).sqrt();
    match channel.kind {
        NoiseKind::AmplitudeDamping => vec![
            m([[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (keep, 0.0)]], 1.0),
            m([[(0.0, 0.0), (1.0, 0.0)], [(0.0, 0.0), (0.0, 0.0)]], k.sqrt()),
        ],
        NoiseKind::BitFlip => vec![m(I, keep), m(X, k.sqrt())],
        NoiseKind::PhaseFlip => vec![m(I, keep), m(Z, k.sqrt())],
        NoiseKind::BitPhaseFlip => vec![m(I, keep), m(Y, k.sqrt())],
        NoiseKind::Depolarizing => {
            let s = (k / 3.0).sqrt();
            vec![m(I, keep), m(X, s), m(Y, s), m(Z, s)]
        }
    }
}

/// Max-norm residual of `sum E^dagger E - I` for square matrices given
/// row-major with side `dim`.
pub fn completeness_residual(kraus: &[Vec<Complex64>], dim: usize) -> Result<f64> {
    if kraus.iter().any(|e| e.len() != dim * dim) {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            actual: kraus.iter().map(Vec::len).find(|&l| l != dim * dim).unwrap_or(0),
        });
    }
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(if i == j { -1.0 } else { 0.0 }, 0.0);
            for e in kraus {
                for r in 0..dim {
                    acc += e[r * dim + i].conj() * e[r * dim + j];
                }
            }
            worst = worst.max(acc.norm());
        }
    }
    Ok(worst)
}

/// Checks trace preservation of a list of 2x2 Kraus operators.
pub fn validate_channel(kraus: &[Matrix2]) -> Result<()> {
    let flat: Vec<Vec<Complex64>> = kraus
        .iter()
        .map(|e| e.iter().flatten().copied().collect())
        .collect();
    validate_kraus(&flat, 2)
}

/// Dimension-generic form of [`validate_channel`].
pub fn validate_kraus(kraus: &[Vec<Complex64>], dim: usize) -> Result<()> {
    let residual = completeness_residual(kraus, dim)?;
    if residual > COMPLETENESS_TOL {
        return Err(Error::Completeness { residual });
    }
    Ok(())
}

/// Applies a single-qubit channel to a 2x2 density matrix.
pub fn apply_to_qubit_matrix(kraus: &[Matrix2], rho: &Matrix2) -> Matrix2 {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = [[zero; 2]; 2];
    for e in kraus {
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        out[i][j] += e[i][a] * rho[a][b] * e[j][b].conj();
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix2, b: &Matrix2, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).norm() <= tol))
    }

    fn dm(r: [[f64; 2]; 2]) -> Matrix2 {
        r.map(|row| row.map(|v| Complex64::new(v, 0.0)))
    }

    #[test]
    fn kappa_bounds() {
        assert!(NoiseChannel::new(NoiseKind::BitFlip, -0.01).is_err());
        assert!(NoiseChannel::new(NoiseKind::BitFlip, 1.01).is_err());
        assert!(NoiseChannel::new(NoiseKind::BitFlip, f64::NAN).is_err());
        assert!(NoiseChannel::new(NoiseKind::Depolarizing, 1.0).is_ok());
    }

    #[test]
    fn operator_counts() {
        for kind in NoiseKind::ALL {
            let ch = NoiseChannel::new(kind, 0.2).unwrap();
            let want = if kind == NoiseKind::Depolarizing { 4 } else { 2 };
            assert_eq!(ch.kraus().len(), want);
        }
    }

    #[test]
    fn zero_kappa_is_identity() {
        let rho = [
            [Complex64::new(0.6, 0.0), Complex64::new(0.1, 0.2)],
            [Complex64::new(0.1, -0.2), Complex64::new(0.4, 0.0)],
        ];
        for kind in NoiseKind::ALL {
            let ch = NoiseChannel::new(kind, 0.0).unwrap();
            assert!(close(&apply_to_qubit_matrix(&ch.kraus(), &rho), &rho, 1e-15));
        }
    }

    #[test]
    fn analytic_limits() {
        let ad = NoiseChannel::new(NoiseKind::AmplitudeDamping, 1.0).unwrap();
        let one = dm([[0.0, 0.0], [0.0, 1.0]]);
        let zero = dm([[1.0, 0.0], [0.0, 0.0]]);
        assert!(close(&apply_to_qubit_matrix(&ad.kraus(), &one), &zero, 1e-15));

        let dp = NoiseChannel::new(NoiseKind::Depolarizing, 0.75).unwrap();
        let half = dm([[0.5, 0.0], [0.0, 0.5]]);
        assert!(close(&apply_to_qubit_matrix(&dp.kraus(), &zero), &half, 1e-15));
    }

    #[test]
    fn completeness_on_grid() {
        for kind in NoiseKind::ALL {
            for step in 0..=20 {
                let ch = NoiseChannel::new(kind, step as f64 * 0.05).unwrap();
                validate_channel(&ch.kraus()).unwrap();
            }
        }
    }

    #[test]
    fn completeness_failures() {
        let i = m(I, 1.0);
        match validate_channel(&[i, i]) {
            Err(Error::Completeness { residual }) => assert!((residual - 1.0).abs() < 1e-15),
            other => panic!("expected completeness failure, got {other:?}"),
        }
        let h = 0.5f64.sqrt();
        validate_channel(&[m(I, h), m(X, h)]).unwrap();
        assert!(validate_kraus(&[vec![Complex64::new(1.0, 0.0); 3]], 2).is_err());
    }

    #[test]
    fn channel_names() {
        for kind in NoiseKind::ALL {
            let parsed: ChannelName = kind.name().parse().unwrap();
            assert_eq!(parsed, ChannelName(Some(kind)));
        }
        assert_eq!("none".parse::<ChannelName>().unwrap(), ChannelName(None));
        assert!("thermal".parse::<ChannelName>().is_err());
        let json = serde_json::to_string(&ChannelName(Some(NoiseKind::BitPhaseFlip))).unwrap();
        assert_eq!(json, r#""bit_phase_flip""#);
    }
}
