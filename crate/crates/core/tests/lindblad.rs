// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use qdiff_core::lindblad::{
    analytic, dissipator_jump_form, dissipator_total, integrate_master, lindblad_rhs, Hamiltonian, NoiseModel,
    QubitNoise,
};
use qdiff_core::qstate::{bloch_vector, DensityMatrix, Operator, StateVector};
use qdiff_core::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Dm = DensityMatrix<f64>;

/// Random mixture of three Haar states.
fn random_rho(n_qubits: usize, seed: u64) -> Dm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1 << n_qubits;
    let mut op = Operator::zeros(dim);
    let weights: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let psi = StateVector::<f64>::haar_random(n_qubits, &mut rng).unwrap();
        op.add_scaled(DensityMatrix::pure(&psi).unwrap().operator(), w / total);
    }
    DensityMatrix::new(op).unwrap()
}

fn noise_strategy() -> impl Strategy<Value = QubitNoise<f64>> {
    (0.0..0.5f64, 0.0..0.5f64, 0.0..0.5f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y, z, a, p)| QubitNoise {
        gamma_d: [x, y, z],
        gamma_a: a,
        gamma_p: p,
    })
}

fn plus() -> Dm {
    DensityMatrix::pure(&StateVector::from_amplitudes(vec![Complex::one(), Complex::one()]).unwrap()).unwrap()
}

fn coherence(rho: &Dm) -> f64 {
    rho.operator()[(0, 1)].abs()
}

/// Worst relative error against the three decay laws at step `dt`.
fn decay_errors(dt: f64) -> [f64; 3] {
    let h = Hamiltonian::zero(1).unwrap();
    let t_end = 2.0;
    let deph = integrate_master(
        &plus(),
        &h,
        &NoiseModel::single(QubitNoise::dephasing(0.5)).unwrap(),
        t_end,
        dt,
    )
    .unwrap();
    let depol = integrate_master(
        &plus(),
        &h,
        &NoiseModel::single(QubitNoise::depolarizing(0.1)).unwrap(),
        t_end,
        dt,
    )
    .unwrap();
    let excited = DensityMatrix::pure(&StateVector::basis(1, 1).unwrap()).unwrap();
    let amp = integrate_master(
        &excited,
        &h,
        &NoiseModel::single(QubitNoise::amplitude_damping(0.2)).unwrap(),
        t_end,
        dt,
    )
    .unwrap();
    let worst = |sol: &qdiff_core::lindblad::MasterSolution<f64>, obs: &dyn Fn(&Dm) -> f64, law: &dyn Fn(f64) -> f64| {
        let o0 = obs(&sol.states[0]);
        sol.times
            .iter()
            .zip(&sol.states)
            .map(|(t, r)| ((obs(r) / o0) - law(*t)).abs() / law(*t))
            .fold(0.0, f64::max)
    };
    let bloch_len = |r: &Dm| {
        let b = bloch_vector(r).unwrap();
        (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
    };
    [
        worst(&deph, &coherence, &|t| analytic::dephasing_coherence(0.5, t)),
        worst(&depol, &bloch_len, &|t| analytic::depolarizing_bloch(0.1, t)),
        worst(&amp, &|r: &Dm| r.operator()[(1, 1)].re, &|t| analytic::excited_population(0.2, t)),
    ]
}

#[test]
fn analytic_decays_at_default_step() {
    for e in decay_errors(1e-3) {
        assert!(e <= 1e-6, "relative error {e}");
    }
}

#[test]
fn rk4_error_falls_sixteenfold_when_dt_halves() {
    let coarse = decay_errors(0.2);
    let fine = decay_errors(0.1);
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(*f > 0.0 && c / f >= 12.0, "ratio {} ({c} vs {f})", c / f);
    }
}

#[test]
fn spec_values_at_unit_time() {
    let h = Hamiltonian::zero(1).unwrap();
    let sol = integrate_master(&plus(), &h, &NoiseModel::single(QubitNoise::dephasing(0.5)).unwrap(), 1.0, 1e-3)
        .unwrap();
    assert!((coherence(sol.final_state()) / 0.5 - (-1.0f64).exp()).abs() <= 1e-6);
    let sol = integrate_master(&plus(), &h, &NoiseModel::single(QubitNoise::depolarizing(0.1)).unwrap(), 1.0, 1e-3)
        .unwrap();
    let b = bloch_vector(sol.final_state()).unwrap();
    assert!((b[0] - 0.670320).abs() <= 1e-6);
}

#[test]
fn maximally_mixed_is_stationary_under_depolarization() {
    let rho = DensityMatrix::<f64>::maximally_mixed(1).unwrap();
    let h = Hamiltonian::precession(1, 1.3).unwrap();
    let rhs = lindblad_rhs(&rho, &h, &NoiseModel::single(QubitNoise::depolarizing(0.3)).unwrap()).unwrap();
    assert!(rhs.max_abs() <= 1e-15);
}

#[test]
fn long_horizon_stays_physical() {
    let rho = random_rho(2, 5);
    let noise = NoiseModel::uniform(
        2,
        QubitNoise {
            gamma_d: [0.05, 0.1, 0.02],
            gamma_a: 0.3,
            gamma_p: 0.2,
        },
    )
    .unwrap();
    let h = Hamiltonian::precession(2, 1.0).unwrap();
    let sol = integrate_master(&rho, &h, &noise, 5.0, 1e-3).unwrap();
    for r in &sol.states {
        assert!((r.trace().re - 1.0).abs() <= 1e-9);
        assert!(r.eigenvalues().iter().all(|&l| l >= -1e-7));
        assert!(r.operator().is_hermitian(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_is_hermitian_and_traceless(seed in any::<u64>(), q in noise_strategy(), omega in -2.0..2.0f64) {
        let rho = random_rho(1, seed);
        let h = Hamiltonian::precession(1, omega).unwrap();
        let rhs = lindblad_rhs(&rho, &h, &NoiseModel::single(q).unwrap()).unwrap();
        prop_assert!(rhs.is_hermitian(1e-12));
        prop_assert!(rhs.trace().abs() <= 1e-12);
    }

    #[test]
    fn componentwise_and_jump_forms_agree(seed in any::<u64>(), q1 in noise_strategy(), q2 in noise_strategy()) {
        let rho = random_rho(2, seed);
        let noise = NoiseModel::new(vec![q1, q2]).unwrap();
        let a = dissipator_total(&rho, &noise).unwrap();
        let b = dissipator_jump_form(rho.operator(), &noise.jump_operators());
        prop_assert!(a.max_abs_diff(&b) <= 1e-12);
    }
}
