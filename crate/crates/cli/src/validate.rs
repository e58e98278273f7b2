//! Self-check of the core invariants on small fixed inputs.

use vrpvqe::circuit::{build_ansatz, circuit_unitary, unitarity_defect};
use vrpvqe::hamiltonian::from_ising;
use vrpvqe::noise::{validate_channel, NoiseChannel, NoiseKind};
use vrpvqe::problem::{build_qubo, qubo_to_ising, reference_instance, Assignment, IsingForm, QuboForm};
use vrpvqe::simulator::{run_density, run_trajectories, NoisePlacement, SimLimits};
use vrpvqe::vqe::initial_parameters;

const SEED: u64 = 2023;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Deliberately broken conversion used to prove the equivalence check bites.
fn faulty_ising(qubo: &QuboForm) -> IsingForm {
    let good = qubo_to_ising(qubo);
    let h: Vec<f64> = good.h().iter().map(|v| -v).collect();
    IsingForm::new(good.dim(), &good.couplings(), h, good.d()).expect("same shape")
}

fn completeness() -> Check {
    let mut checked = 0;
    let mut bad = Vec::new();
    for kind in NoiseKind::ALL {
        for step in 0..=20 {
            let kappa = step as f64 / 20.0;
            let ok = NoiseChannel::new(kind, kappa)
                .and_then(|ch| validate_channel(&ch.kraus()))
                .is_ok();
            checked += 1;
            if !ok {
                bad.push(format!("{}@{kappa}", kind.name()));
            }
        }
    }
    Check {
        name: "channel completeness",
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{checked} channels trace preserving")
        } else {
            format!("not trace preserving: {}", bad.join(", "))
        },
    }
}

fn equivalence(inject_fault: bool) -> Check {
    let qubo = build_qubo(&reference_instance(3));
    let ising = if inject_fault {
        faulty_ising(&qubo)
    } else {
        qubo_to_ising(&qubo)
    };
    let m = qubo.dim();
    let mut worst = 0.0f64;
    for idx in 0..1usize << m {
        let x = Assignment::from_basis_index(idx, m);
        let (a, b) = (qubo.evaluate(&x), ising.evaluate(&x));
        let gap = match (a, b) {
            (Ok(a), Ok(b)) => (a - b).abs() / (1.0 + a.abs()),
            _ => f64::INFINITY,
        };
        worst = worst.max(gap);
    }
    Check {
        name: "qubo/ising equivalence",
        passed: worst <= 1e-9,
        detail: format!("{} assignments, max relative gap {worst:.3e}", 1usize << m),
    }
}

fn unitarity() -> Check {
    let ising = qubo_to_ising(&build_qubo(&reference_instance(3)));
    let result = build_ansatz(&ising, 2)
        .and_then(|a| a.bind(&initial_parameters(a.parameter_count(), SEED)))
        .and_then(|c| circuit_unitary(&c).map(|u| unitarity_defect(&u, 1 << c.num_qubits())));
    match result {
        Ok(defect) => Check {
            name: "ansatz unitarity",
            passed: defect <= 1e-10,
            detail: format!("max |U^dag U - I| = {defect:.3e}"),
        },
        Err(e) => Check {
            name: "ansatz unitarity",
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn trajectories_vs_density() -> Check {
    let name = "trajectories vs density";
    let ising = qubo_to_ising(&build_qubo(&reference_instance(3)));
    let h = from_ising(&ising);
    let lim = SimLimits::default();
    let result = (|| {
        let ansatz = build_ansatz(&ising, 1)?;
        let circuit = ansatz.bind(&initial_parameters(ansatz.parameter_count(), SEED))?;
        let channel = NoiseChannel::new(NoiseKind::AmplitudeDamping, 0.3)?;
        let placement = NoisePlacement::AfterEachLayer;
        let exact = h.expectation(&run_density(&circuit, Some(&channel), placement, &lim)?)?;
        let est = run_trajectories(&circuit, Some(&channel), placement, &h, 2000, SEED, &lim)?;
        Ok::<_, vrpvqe::Error>((exact, est.mean, est.std_error))
    })();
    match result {
        Ok((exact, mean, se)) => Check {
            name,
            passed: (mean - exact).abs() <= 3.0 * se,
            detail: format!("density {exact:.6}, trajectories {mean:.6} +/- {se:.6}"),
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn run_checks(inject_fault: bool) -> Vec<Check> {
    vec![
        completeness(),
        equivalence(inject_fault),
        unitarity(),
        trajectories_vs_density(),
    ]
}
