use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use vrpvqe::circuit::{build_ansatz, circuit_unitary, unitarity_defect, ConcreteCircuit, Gate};
use vrpvqe::experiment::format_float;
use vrpvqe::hamiltonian::{from_ising, PauliZPolynomial};
use vrpvqe::noise::{apply_to_qubit_matrix, validate_channel, NoiseChannel, NoiseKind};
use vrpvqe::problem::{
    brute_force_minimum, build_instance, build_qubo, decode_routes, qubo_to_ising, Assignment, Decoded,
    Infeasibility, IsingForm, VrpInstance, WeightSource,
};
use vrpvqe::simulator::{basis_probabilities, run_density, run_statevector, NoisePlacement, QuantumState, SimLimits};

fn instance() -> impl Strategy<Value = VrpInstance> {
    (2usize..=4, any::<u64>())
        .prop_flat_map(|(n, seed)| (Just(n), 1..n, Just(seed)))
        .prop_map(|(n, k, seed)| build_instance(n, k, WeightSource::Seeded(seed), None).unwrap())
}

fn ising(m: usize) -> impl Strategy<Value = IsingForm> {
    (
        prop::collection::vec(-3.0f64..3.0, m * (m - 1) / 2),
        prop::collection::vec(-3.0f64..3.0, m),
        -5.0f64..5.0,
    )
        .prop_map(move |(jv, h, d)| {
            let mut couplings = Vec::new();
            let mut it = jv.into_iter();
            for i in 0..m {
                for j in i + 1..m {
                    couplings.push((i, j, it.next().unwrap()));
                }
            }
            IsingForm::new(m, &couplings, h, d).unwrap()
        })
}

fn noise_kind() -> impl Strategy<Value = NoiseKind> {
    prop::sample::select(NoiseKind::ALL.to_vec())
}

fn density_matrix(state: &QuantumState) -> DMatrix<Complex64> {
    let dim = 1usize << state.num_qubits();
    DMatrix::from_row_slice(dim, dim, state.density().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn qubo_and_ising_agree_everywhere(inst in instance()) {
        let qubo = build_qubo(&inst);
        let ising = qubo_to_ising(&qubo);
        let m = qubo.dim();
        for idx in 0..1usize << m {
            let x = Assignment::from_basis_index(idx, m);
            let a = qubo.evaluate(&x).unwrap();
            let b = ising.evaluate(&x).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            // term-by-term evaluation of the routing Hamiltonian
            let direct = inst.penalty_energy(&x).unwrap();
            prop_assert!((a - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn feasible_assignments_cost_their_routes(inst in instance()) {
        let qubo = build_qubo(&inst);
        let m = qubo.dim();
        for idx in 0..1usize << m {
            let x = Assignment::from_basis_index(idx, m);
            if let Decoded::Feasible(routes) = decode_routes(&inst, &x).unwrap() {
                let cost: f64 = inst.edges().enumerate().filter(|(v, _)| x.get(*v)).map(|(_, (i, j))| inst.weight(i, j)).sum();
                prop_assert!((qubo.evaluate(&x).unwrap() - cost).abs() <= 1e-9 * cost.max(1.0));
                prop_assert!((routes.total_cost - cost).abs() <= 1e-9 * cost.max(1.0));
            }
        }
        // the penalty enforces degrees only, so from n = 4 on a depot-free
        // cycle can undercut every real route
        let (best, _) = brute_force_minimum(&qubo_to_ising(&qubo)).unwrap();
        match decode_routes(&inst, &best).unwrap() {
            Decoded::Feasible(_) => {}
            Decoded::Infeasible(why) => {
                prop_assert!(inst.n() >= 4 && matches!(why, Infeasibility::Subtour { .. }), "{why}");
            }
        }
    }

    #[test]
    fn brute_force_shifts_with_the_constant(form in ising(5), delta in -50.0f64..50.0) {
        let (x0, e0) = brute_force_minimum(&form).unwrap();
        let (x1, e1) = brute_force_minimum(&form.shifted(delta)).unwrap();
        prop_assert_eq!(x0, x1);
        prop_assert!((e1 - e0 - delta).abs() <= 1e-9 * e0.abs().max(1.0));
    }

    #[test]
    fn ansatz_is_unitary(form in ising(4), layers in 1usize..=3, seed in any::<u64>()) {
        let ansatz = build_ansatz(&form, layers).unwrap();
        let params = vrpvqe::vqe::initial_parameters(ansatz.parameter_count(), seed);
        let u = circuit_unitary(&ansatz.bind(&params).unwrap()).unwrap();
        prop_assert!(unitarity_defect(&u, 16) <= 1e-10);
        let psi = run_statevector(&ansatz.bind(&params).unwrap(), &SimLimits::default()).unwrap();
        let norm: f64 = psi.amplitudes().unwrap().iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn diagonal_blocks_commute(form in ising(4), gamma in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let ansatz = build_ansatz(&form, 1).unwrap();
        let bound = ansatz.bind(&[gamma, beta]).unwrap();
        let gates = bound.gates().to_vec();
        // move the single-qubit Z phases ahead of the ZZ blocks
        let h_end = 4;
        let mixer_start = gates.len() - 4;
        let body = &gates[h_end..mixer_start];
        let zz_len = 3 * form.couplings().len();
        let mut reordered = gates[..h_end].to_vec();
        reordered.extend_from_slice(&body[zz_len..]);
        reordered.extend_from_slice(&body[..zz_len]);
        reordered.extend_from_slice(&gates[mixer_start..]);
        let lim = SimLimits::default();
        let a = run_statevector(&bound, &lim).unwrap();
        let b = run_statevector(&ConcreteCircuit::new(4, reordered).unwrap(), &lim).unwrap();
        for (x, y) in a.amplitudes().unwrap().iter().zip(b.amplitudes().unwrap()) {
            prop_assert!((x - y).norm() <= 1e-10);
        }
    }

    #[test]
    fn noisy_density_stays_physical(form in ising(3), layers in 1usize..=2, kind in noise_kind(), kappa in 0.0f64..=1.0,
                                    gate_level in any::<bool>(), seed in any::<u64>()) {
        let ansatz = build_ansatz(&form, layers).unwrap();
        let params = vrpvqe::vqe::initial_parameters(ansatz.parameter_count(), seed);
        let ch = NoiseChannel::new(kind, kappa).unwrap();
        let placement = if gate_level { NoisePlacement::AfterEachGate } else { NoisePlacement::AfterEachLayer };
        let rho = run_density(&ansatz.bind(&params).unwrap(), Some(&ch), placement, &SimLimits::default()).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() <= 1e-10);
        prop_assert!(rho.hermiticity_defect() <= 1e-10);
        let eig = density_matrix(&rho).symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&e| e >= -1e-8));

        let h = from_ising(&form);
        let diag = h.diagonal();
        let e = h.expectation(&rho).unwrap();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        prop_assert!(e >= lo - 1e-9 && e <= hi + 1e-9);
    }

    #[test]
    fn full_depolarising_flattens_the_landscape(form in ising(3), layers in 1usize..=3, seed in any::<u64>()) {
        let ansatz = build_ansatz(&form, layers).unwrap();
        let params = vrpvqe::vqe::initial_parameters(ansatz.parameter_count(), seed);
        let ch = NoiseChannel::new(NoiseKind::Depolarizing, 0.75).unwrap();
        let rho = run_density(&ansatz.bind(&params).unwrap(), Some(&ch), NoisePlacement::AfterEachLayer, &SimLimits::default()).unwrap();
        prop_assert!((from_ising(&form).expectation(&rho).unwrap() - form.d()).abs() <= 1e-6);
    }

    #[test]
    fn expectation_is_linear_and_phase_blind(form in ising(3), other in ising(3), a in -2.0f64..2.0, phase in 0.0f64..6.3, seed in any::<u64>()) {
        let ansatz = build_ansatz(&form, 1).unwrap();
        let params = vrpvqe::vqe::initial_parameters(2, seed);
        let psi = run_statevector(&ansatz.bind(&params).unwrap(), &SimLimits::default()).unwrap();
        let (h1, h2) = (from_ising(&form), from_ising(&other));
        let combined_quad: Vec<_> = h1.quadratic_terms().iter().map(|&(i, j, c)| (i, j, c))
            .chain(h2.quadratic_terms().iter().map(|&(i, j, c)| (i, j, a * c))).collect();
        let combined_lin: Vec<_> = h1.linear_terms().iter().copied()
            .chain(h2.linear_terms().iter().map(|&(i, c)| (i, a * c))).collect();
        let sum = PauliZPolynomial::new(3, &combined_quad, &combined_lin, h1.constant() + a * h2.constant()).unwrap();
        let lhs = sum.expectation(&psi).unwrap();
        let rhs = h1.expectation(&psi).unwrap() + a * h2.expectation(&psi).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));

        let rotated: Vec<Complex64> = psi.amplitudes().unwrap().iter().map(|z| z * Complex64::from_polar(1.0, phase)).collect();
        let rotated = QuantumState::from_amplitudes(3, rotated).unwrap();
        prop_assert!((h1.expectation(&rotated).unwrap() - h1.expectation(&psi).unwrap()).abs() <= 1e-10);

        // a 50/50 mixture averages the component energies
        let basis = QuantumState::basis(3, 5).to_density();
        let (r1, r2) = (psi.to_density(), basis.clone());
        let mix: Vec<Complex64> = r1.density().unwrap().iter().zip(r2.density().unwrap()).map(|(x, y)| (x + y) * 0.5).collect();
        let mix = QuantumState::from_density(3, mix).unwrap();
        let want = 0.5 * (h1.expectation(&r1).unwrap() + h1.expectation(&basis).unwrap());
        prop_assert!((h1.expectation(&mix).unwrap() - want).abs() <= 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn channel_fixed_points(kind in noise_kind(), kappa in 0.0f64..=1.0) {
        let ch = NoiseChannel::new(kind, kappa).unwrap();
        let k = ch.kraus();
        validate_channel(&k).unwrap();
        let z = Complex64::new(0.0, 0.0);
        let half = [[Complex64::new(0.5, 0.0), z], [z, Complex64::new(0.5, 0.0)]];
        let ground = [[Complex64::new(1.0, 0.0), z], [z, z]];
        if kind.is_unital() {
            let out = apply_to_qubit_matrix(&k, &half);
            prop_assert!((0..2).all(|i| (0..2).all(|j| (out[i][j] - half[i][j]).norm() <= 1e-15)));
        } else {
            let out = apply_to_qubit_matrix(&k, &ground);
            prop_assert!((0..2).all(|i| (0..2).all(|j| (out[i][j] - ground[i][j]).norm() <= 1e-15)));
        }
    }

    #[test]
    fn csv_floats_round_trip(v in prop::num::f64::NORMAL) {
        let s = format_float(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-6 * v.abs());
        prop_assert_eq!(format_float(back), s);
    }
}

#[test]
fn probabilities_of_reference_states() {
    let lim = SimLimits::default();
    let p = basis_probabilities(&QuantumState::basis(3, 0)).unwrap();
    assert_eq!(p[0], 1.0);
    assert!(p[1..].iter().all(|&v| v == 0.0));
    let h = ConcreteCircuit::new(3, (0..3).map(|qubit| Gate::Hadamard { qubit }).collect()).unwrap();
    let p = basis_probabilities(&run_statevector(&h, &lim).unwrap()).unwrap();
    assert!(p.iter().all(|&v| (v - 0.125).abs() < 1e-15));
    let p = basis_probabilities(&QuantumState::maximally_mixed(3)).unwrap();
    assert!(p.iter().all(|&v| (v - 0.125).abs() < 1e-15));
}

#[test]
fn degree_penalty_admits_cheap_subtours() {
    let big = 100.0;
    let w = vec![
        vec![0.0, 1.0, big, big],
        vec![1.0, 0.0, big, big],
        vec![big, big, 0.0, 1.0],
        vec![big, big, 1.0, 0.0],
    ];
    let inst = build_instance(4, 1, WeightSource::Explicit(w), None).unwrap();
    let ising = qubo_to_ising(&build_qubo(&inst));
    let (best, e) = brute_force_minimum(&ising).unwrap();
    assert!((e - 4.0).abs() < 1e-9);
    assert!(matches!(
        decode_routes(&inst, &best).unwrap(),
        Decoded::Infeasible(Infeasibility::Subtour { .. })
    ));
}
