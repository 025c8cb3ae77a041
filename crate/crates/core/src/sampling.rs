//! Random generators for symplectic matrices, Hamiltonians and covariance
//! matrices, used by property tests and the acceptance suite.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{j_matrix, sym, Mat};
use crate::symplectic_core::SympMatrix;

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> Mat {
    sym(&random_matrix(rng, dim, dim, scale))
}

/// `X = J K` with K random symmetric, an element of sp(n).
pub fn random_hamiltonian_generator<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Mat {
    j_matrix(n) * random_symmetric(rng, 2 * n, scale)
}

/// Product of two exponentials of random sp(n) elements.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> SympMatrix {
    let a = random_hamiltonian_generator(rng, n, scale).exp();
    let b = random_hamiltonian_generator(rng, n, scale).exp();
    SympMatrix::trusted(a * b)
}

/// Random symmetric positive-definite matrix of size 2n.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Mat {
    let a = random_matrix(rng, 2 * n, 2 * n, scale);
    sym(&(a.transpose() * &a + Mat::identity(2 * n, 2 * n) * (0.2 * scale * scale)))
}

/// Covariance `S diag(ν, ν) Sᵀ` with symplectic eigenvalues drawn from
/// `[low, high]`.
pub fn random_covariance<R: Rng + ?Sized>(rng: &mut R, n: usize, low: f64, high: f64, squeeze: f64) -> Mat {
    let s = random_symplectic(rng, n, squeeze);
    let mut d = Mat::zeros(2 * n, 2 * n);
    for j in 0..n {
        let nu = rng.random_range(low..=high);
        d[(j, j)] = nu;
        d[(n + j, n + j)] = nu;
    }
    sym(&(s.matrix() * d * s.matrix().transpose()))
}
