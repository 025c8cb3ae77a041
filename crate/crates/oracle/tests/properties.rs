use metaphase_core::cz_index::crossing_scan;
use metaphase_core::gaussian_state::GaussianState;
use metaphase_core::isotopy::{one_parameter_group, time_grid};
use metaphase_core::linalg::{Mat, Vector};
use metaphase_core::phase_shift::{trace_gaussian, trace_inhomogeneous};
use metaphase_core::sampling::{random_covariance, random_spd};
use metaphase_core::symplectic_core::{standard_form, SympMatrix};
use metaphase_core::weyl_symbol::DisplacementElement;
use metaphase_oracle::fock::{
    displacement_fock, evolve, gaussian_density_fock, purity, quadratic_hamiltonian_fock, trace_oracle, FockOperator,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CUTOFF: usize = 40;

fn mild_state(r: &mut ChaCha8Rng) -> GaussianState {
    GaussianState::centered(random_covariance(r, 1, 0.5, 0.8, 0.15), 1.0).unwrap()
}

/// Positive Hamiltonian with eigenvalue ratio at most 3; stronger anisotropy
/// squeezes the eigenstates past what cutoff 40 resolves.
fn mild_hamiltonian(r: &mut ChaCha8Rng) -> Mat {
    loop {
        let k = random_spd(r, 1, 0.7);
        let e = k.symmetric_eigenvalues();
        if e.max() <= 3.0 * e.min() {
            return k;
        }
    }
}

/// `S = exp(tJK)` with its index, or `None` when the endpoint is degenerate.
fn elliptic_endpoint(k: &Mat, t: f64) -> Option<(SympMatrix, i64)> {
    let path = one_parameter_group(&(standard_form(1).unwrap() * k), &time_grid(t, 200).unwrap()).unwrap();
    let s = path.end().clone();
    if s.is_degenerate() {
        return None;
    }
    let nu = crossing_scan(&path).ok()?.nu_at(t);
    Some((s, nu))
}

fn scaled(op: &FockOperator, c: Complex64) -> FockOperator {
    FockOperator::new(op.matrix() * c, op.cutoff(), op.n()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn density_is_a_normalized_state(seed in any::<u64>()) {
        let state = mild_state(&mut ChaCha8Rng::seed_from_u64(seed));
        let rho = gaussian_density_fock(&state, CUTOFF).unwrap().rho;
        prop_assert!(rho.hermiticity_defect() <= 1e-12);
        prop_assert!((rho.trace() - 1.0).norm() <= 1e-12);
        prop_assert!((purity(&rho) - state.purity()).abs() <= 1e-6);
    }

    #[test]
    fn oracle_trace_is_bounded_and_matches(seed in any::<u64>(), t in 0.2f64..6.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let k = mild_hamiltonian(&mut r);
        let state = mild_state(&mut r);
        let Some((s, nu)) = elliptic_endpoint(&k, t) else { return Ok(()) };
        let u = evolve(&quadratic_hamiltonian_fock(&k, 1.0, CUTOFF).unwrap(), t, 1.0).unwrap();
        let oracle = trace_oracle(&u, &gaussian_density_fock(&state, CUTOFF).unwrap().rho).unwrap();
        prop_assert!(oracle.norm() <= 1.0 + 1e-9);
        prop_assert!((oracle - trace_gaussian(&s, nu, &state).unwrap()).norm() <= 1e-6);
    }

    #[test]
    fn trace_is_invariant_under_a_common_displacement(seed in any::<u64>(), t in 0.2f64..6.0, gamma in -1.0f64..1.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let k = mild_hamiltonian(&mut r);
        let base = mild_state(&mut r);
        let mut draw = || Vector::from_vec(vec![r.random_range(-0.5..0.5), r.random_range(-0.5..0.5)]);
        let (z_t, w) = (draw(), draw());
        let Some((s, nu)) = elliptic_endpoint(&k, t) else { return Ok(()) };
        // T(w) e^{iγ/ħ}T(z_t) Ŝ T(−w) = T(w) e^{iγ/ħ}T(z_t) T(−Sw) Ŝ
        let moved = DisplacementElement::new(w.clone(), 0.0)
            .compose(&DisplacementElement::new(z_t.clone(), gamma))
            .unwrap()
            .compose(&DisplacementElement::new(-(s.matrix() * &w), 0.0))
            .unwrap();
        let shifted = base.with_mean(w.clone()).unwrap();
        let before = trace_inhomogeneous(&s, nu, &z_t, gamma, &base).unwrap();
        let after = trace_inhomogeneous(&s, nu, &moved.z0, moved.phase, &shifted).unwrap();
        prop_assert!((before - after).norm() <= 1e-10);

        let s_hat = evolve(&quadratic_hamiltonian_fock(&k, 1.0, CUTOFF).unwrap(), t, 1.0).unwrap();
        let u = scaled(&displacement_fock(&moved.z0, 1.0, CUTOFF).unwrap(), Complex64::from_polar(1.0, moved.phase)).product(&s_hat).unwrap();
        let oracle = trace_oracle(&u, &gaussian_density_fock(&shifted, CUTOFF).unwrap().rho).unwrap();
        prop_assert!((oracle - after).norm() <= 1e-5);
    }
}
