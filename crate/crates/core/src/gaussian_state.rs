//! Gaussian mixed states described by a covariance matrix `V` and a mean
//! `z̄`, with admissibility, purity, Wigner and characteristic functions.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, check_square_even, eigh, from_blocks, is_positive_definite, j_matrix, max_abs, sigma, sym, Mat, Vector};
use crate::symplectic_core::{symplectic_eigenvalues, williamson, SympMatrix};

/// Slack allowed below the uncertainty bound.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    v: Mat,
    mean: Vector,
    hbar: f64,
}

/// Both forms of the uncertainty condition evaluated on one covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    /// Smallest eigenvalue of the Hermitian matrix `V + i(ħ/2)J`.
    pub min_hermitian_eigenvalue: f64,
    /// Smallest symplectic eigenvalue of `V`.
    pub min_symplectic_eigenvalue: f64,
    pub hermitian_ok: bool,
    pub symplectic_ok: bool,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.hermitian_ok && self.symplectic_ok
    }

    pub fn criteria_agree(&self) -> bool {
        self.hermitian_ok == self.symplectic_ok
    }
}

/// Smallest eigenvalue of `V + i(ħ/2)J`, through the real embedding
/// `[[A, −B], [B, A]]` of a Hermitian matrix `A + iB`.
pub fn min_hermitian_eigenvalue(v: &Mat, hbar: f64) -> f64 {
    let b = j_matrix(v.nrows() / 2) * (0.5 * hbar);
    let embedded = from_blocks(v, &(-&b), &b, v);
    eigh(&embedded).0[0]
}

/// Classifies any symmetric matrix by both criteria.  A matrix that is not
/// positive definite has no symplectic spectrum and fails that test.
pub fn admissibility(v: &Mat, hbar: f64) -> Result<AdmissibilityReport> {
    check_square_even(v)?;
    let a = asymmetry(v);
    if a > 1e-12 * max_abs(v).max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: a });
    }
    let v = sym(v);
    let min_h = min_hermitian_eigenvalue(&v, hbar);
    let min_s = if is_positive_definite(&v) { symplectic_eigenvalues(&v)?[0] } else { f64::NEG_INFINITY };
    Ok(AdmissibilityReport {
        min_hermitian_eigenvalue: min_h,
        min_symplectic_eigenvalue: min_s,
        hermitian_ok: min_h >= -ADMISSIBILITY_TOL,
        symplectic_ok: min_s >= 0.5 * hbar - ADMISSIBILITY_TOL,
    })
}

/// Squeezing parameters `(X, Y)` of a pure Gaussian wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezedSpec {
    x: Mat,
    y: Mat,
}

impl SqueezedSpec {
    pub fn new(x: Mat, y: Mat) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::ZeroModes);
        }
        if x.ncols() != n || y.nrows() != n || y.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.nrows() });
        }
        for m in [&x, &y] {
            let a = asymmetry(m);
            if a > 1e-12 * max_abs(m).max(1.0) {
                return Err(Error::NotSymmetric { asymmetry: a });
            }
        }
        let x = sym(&x);
        if !is_positive_definite(&x) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(SqueezedSpec { x, y: sym(&y) })
    }

    /// `G = [[X + YX⁻¹Y, YX⁻¹], [X⁻¹Y, X⁻¹]]`, symplectic and symmetric.
    pub fn g_matrix(&self) -> Mat {
        let x_inv = self.x.clone().try_inverse().expect("X is positive definite");
        let yx = &self.y * &x_inv;
        sym(&from_blocks(&(&self.x + &yx * &self.y), &yx, &(&x_inv * &self.y), &x_inv))
    }

    /// Closed-form `G⁻¹ = [[X⁻¹, −X⁻¹Y], [−YX⁻¹, X + YX⁻¹Y]]`.
    fn g_inverse(&self) -> Mat {
        let x_inv = self.x.clone().try_inverse().expect("X is positive definite");
        let yx = &self.y * &x_inv;
        sym(&from_blocks(&x_inv, &(-(&x_inv * &self.y)), &(-&yx), &(&self.x + &yx * &self.y)))
    }
}

impl GaussianState {
    pub fn new(v: Mat, mean: Vector, hbar: f64) -> Result<Self> {
        let n = check_square_even(&v)?;
        if mean.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: mean.len() });
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::InvalidArgument(format!("hbar = {hbar} must be positive")));
        }
        let a = asymmetry(&v);
        if a > 1e-12 * max_abs(&v).max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: a });
        }
        let v = sym(&v);
        if !is_positive_definite(&v) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(GaussianState { v, mean, hbar })
    }

    /// Centered state; errors as in [`GaussianState::new`].
    pub fn centered(v: Mat, hbar: f64) -> Result<Self> {
        let dim = v.nrows();
        Self::new(v, Vector::zeros(dim), hbar)
    }

    /// Vacuum `V = (ħ/2)I`.
    pub fn coherent(n: usize, hbar: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroModes);
        }
        Self::centered(Mat::identity(2 * n, 2 * n) * (0.5 * hbar), hbar)
    }

    /// Product of thermal states with mean occupations `n̄_j`:
    /// `V = ħ(n̄_j + ½)` on each mode.
    pub fn thermal_occupations(nbar: &[f64], hbar: f64) -> Result<Self> {
        if nbar.is_empty() {
            return Err(Error::ZeroModes);
        }
        if nbar.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument("occupations must be finite and non-negative".into()));
        }
        let n = nbar.len();
        let mut v = Mat::zeros(2 * n, 2 * n);
        for (j, &x) in nbar.iter().enumerate() {
            v[(j, j)] = hbar * (x + 0.5);
            v[(n + j, n + j)] = hbar * (x + 0.5);
        }
        Self::centered(v, hbar)
    }

    /// Gibbs state of `H = ½ K z·z` with `K = RᵀD R` at inverse temperature
    /// `β`: `V = R⁻¹ diag((ħ/2)coth(βħω_j/2)) R⁻ᵀ`.
    pub fn thermal(omegas: &[f64], r: &SympMatrix, beta: f64, hbar: f64) -> Result<Self> {
        let n = omegas.len();
        if n == 0 {
            return Err(Error::ZeroModes);
        }
        if r.n() != n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: r.dim() });
        }
        if !(beta > 0.0) || omegas.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidArgument("beta and all frequencies must be positive".into()));
        }
        let mut d = Mat::zeros(2 * n, 2 * n);
        for (j, &w) in omegas.iter().enumerate() {
            let x = 0.5 * hbar / (0.5 * beta * hbar * w).tanh();
            d[(j, j)] = x;
            d[(n + j, n + j)] = x;
        }
        let r_inv = r.inverse();
        Self::centered(sym(&(r_inv.matrix() * d * r_inv.matrix().transpose())), hbar)
    }

    /// Pure squeezed state with `V = (ħ/2)G⁻¹`.
    pub fn squeezed_pure(spec: &SqueezedSpec, hbar: f64) -> Result<Self> {
        Self::centered(spec.g_inverse() * (0.5 * hbar), hbar)
    }

    pub fn v(&self) -> &Mat {
        &self.v
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn n(&self) -> usize {
        self.v.nrows() / 2
    }

    pub fn is_centered(&self) -> bool {
        self.mean.iter().all(|&x| x == 0.0)
    }

    pub fn with_mean(&self, mean: Vector) -> Result<Self> {
        Self::new(self.v.clone(), mean, self.hbar)
    }

    /// `F = (ħ/2)V⁻¹`.
    pub fn f_matrix(&self) -> Mat {
        sym(&(self.v.clone().try_inverse().expect("V is positive definite") * (0.5 * self.hbar)))
    }

    pub fn validate(&self) -> AdmissibilityReport {
        admissibility(&self.v, self.hbar).expect("V is symmetric positive definite")
    }

    /// Errors with the offending symplectic eigenvalue unless admissible.
    pub fn ensure_admissible(&self) -> Result<()> {
        let r = self.validate();
        if r.admissible() {
            Ok(())
        } else {
            Err(Error::Inadmissible { min_symplectic_eigenvalue: r.min_symplectic_eigenvalue, half_hbar: 0.5 * self.hbar })
        }
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.v).expect("V is symmetric positive definite")
    }

    /// `μ = (ħ/2)ⁿ det(V)^{−1/2}`.
    pub fn purity(&self) -> f64 {
        // product of (ħ/2)/ν_j avoids overflow in det V for many modes
        let w = williamson(&self.v).expect("V is symmetric positive definite");
        w.omegas.iter().map(|nu| 0.5 * self.hbar / nu).product()
    }

    /// True when `det V = (ħ/2)^{2n}` up to rounding.
    pub fn is_pure(&self) -> bool {
        let scaled = self.v.clone() * (2.0 / self.hbar);
        (scaled.determinant() - 1.0).abs() <= 1e-10
    }

    pub fn wigner_value(&self, z: &Vector) -> f64 {
        let n = self.n();
        let u = z - &self.mean;
        let chol = self.v.clone().cholesky().expect("V is positive definite");
        let w = chol.solve(&u);
        let det_sqrt: f64 = chol.l().diagonal().iter().product();
        (2.0 * PI).powi(-(n as i32)) / det_sqrt * (-0.5 * u.dot(&w)).exp()
    }

    /// Symplectic Fourier transform
    /// `ρ_σ(z) = (2πħ)^{−n} ∫ e^{−(i/ħ)σ(z, z′)} ρ(z′) dz′`.
    ///
    /// Completing the square around `z̄` gives
    /// `(2πħ)^{−n} e^{−(i/ħ)σ(z, z̄)} e^{−(Jz)ᵀV(Jz)/(2ħ²)}`.
    pub fn characteristic_value(&self, z: &Vector) -> Complex64 {
        let n = self.n();
        let jz = j_matrix(n) * z;
        let quad = jz.dot(&(&self.v * &jz));
        let norm = (2.0 * PI * self.hbar).powi(-(n as i32));
        let phase = -sigma(z, &self.mean) / self.hbar;
        Complex64::from_polar(norm * (-quad / (2.0 * self.hbar * self.hbar)).exp(), phase)
    }

    /// `V ↦ SVSᵀ`, `z̄ ↦ Sz̄ + shift`.
    pub fn transform(&self, s: &SympMatrix, shift: &Vector) -> Result<Self> {
        if s.dim() != self.v.nrows() {
            return Err(Error::DimensionMismatch { expected: self.v.nrows(), got: s.dim() });
        }
        if shift.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), got: shift.len() });
        }
        let v = sym(&(s.matrix() * &self.v * s.matrix().transpose()));
        Self::new(v, s.apply(&self.mean) + shift, self.hbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_covariance, random_symmetric, random_symplectic};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vacuum_saturates_the_bound() {
        for hbar in [1.0, 0.3] {
            let s = GaussianState::coherent(2, hbar).unwrap();
            let r = s.validate();
            assert!(r.admissible());
            assert_abs_diff_eq!(r.min_symplectic_eigenvalue, 0.5 * hbar, epsilon = 1e-15);
            assert_abs_diff_eq!(r.min_hermitian_eigenvalue, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s.purity(), 1.0, epsilon = 1e-14);
            assert!(s.is_pure());
        }
    }

    #[test]
    fn below_bound_is_rejected() {
        let s = GaussianState::centered(Mat::identity(2, 2) * 0.25, 1.0).unwrap();
        let r = s.validate();
        assert!(!r.hermitian_ok && !r.symplectic_ok);
        assert!(matches!(s.ensure_admissible(), Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn non_spd_rejected() {
        let v = Mat::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(GaussianState::centered(v, 1.0), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn criteria_agree_on_random_covariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut admissible = 0;
        for i in 0..400 {
            let n = 1 + i % 2;
            let v = if i % 3 == 0 {
                random_symmetric(&mut rng, 2 * n, 1.0)
            } else {
                random_covariance(&mut rng, n, 0.2, 1.5, 0.5)
            };
            let r = admissibility(&v, 1.0).unwrap();
            assert!(r.criteria_agree(), "{r:?}");
            admissible += r.admissible() as usize;
        }
        assert!(admissible > 50 && admissible < 350);
    }

    #[test]
    fn purity_of_thermal_mode() {
        let s = GaussianState::centered(Mat::identity(2, 2), 1.0).unwrap();
        assert_abs_diff_eq!(s.purity(), 0.5, epsilon = 1e-15);
        assert!(!s.is_pure());
        let t = GaussianState::thermal_occupations(&[0.5], 1.0).unwrap();
        assert_abs_diff_eq!(t.purity(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn purity_invariant_under_symplectic_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let v = random_covariance(&mut rng, 2, 0.5, 2.0, 0.4);
            let s = GaussianState::centered(v, 1.0).unwrap();
            let t = s.transform(&random_symplectic(&mut rng, 2, 0.4), &Vector::zeros(4)).unwrap();
            assert_abs_diff_eq!(s.purity(), t.purity(), epsilon = 1e-10);
            let (a, b) = (s.symplectic_eigenvalues(), t.symplectic_eigenvalues());
            for (x, y) in a.iter().zip(&b) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn transform_by_identity_translates() {
        let s = GaussianState::coherent(1, 1.0).unwrap();
        let w = Vector::from_vec(vec![0.3, -1.2]);
        let t = s.transform(&SympMatrix::identity(1), &w).unwrap();
        assert_eq!(t.mean(), &w);
        assert_eq!(t.v(), s.v());
        let rot = SympMatrix::rotation(1, 0.7);
        let r = s.transform(&rot, &Vector::zeros(2)).unwrap();
        assert_abs_diff_eq!(r.v().clone(), s.v().clone(), epsilon = 1e-15);
    }

    #[test]
    fn wigner_examples() {
        let hbar = 0.7;
        let s = GaussianState::coherent(1, hbar).unwrap();
        let z = Vector::from_vec(vec![0.4, -0.9]);
        let expected = (PI * hbar).recip() * (-z.norm_squared() / hbar).exp();
        assert_abs_diff_eq!(s.wigner_value(&z), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(s.wigner_value(&Vector::zeros(2)), 1.0 / (PI * hbar), epsilon = 1e-15);
    }

    #[test]
    fn wigner_integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let v = random_covariance(&mut rng, 1, 0.5, 1.0, 0.3);
        let s = GaussianState::new(v, Vector::from_vec(vec![0.2, -0.1]), 1.0).unwrap();
        let (h, m) = (0.02, 600_i32);
        let mut total = 0.0;
        for i in -m..=m {
            for j in -m..=m {
                total += s.wigner_value(&Vector::from_vec(vec![i as f64 * h, j as f64 * h]));
            }
        }
        assert_abs_diff_eq!(total * h * h, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn characteristic_normalization_and_squeezed_form() {
        let hbar = 1.3;
        let spec = SqueezedSpec::new(Mat::from_row_slice(1, 1, &[4.0]), Mat::from_row_slice(1, 1, &[0.5])).unwrap();
        let s = GaussianState::squeezed_pure(&spec, hbar).unwrap();
        let origin = s.characteristic_value(&Vector::zeros(2));
        assert_abs_diff_eq!(origin.re, 1.0 / (2.0 * PI * hbar), epsilon = 1e-15);
        assert_eq!(origin.im, 0.0);
        let g = spec.g_matrix();
        let z = Vector::from_vec(vec![0.7, -0.4]);
        let expected = (-(z.dot(&(&g * &z))) / (4.0 * hbar)).exp() / (2.0 * PI * hbar);
        assert_abs_diff_eq!(s.characteristic_value(&z).re, expected, epsilon = 1e-14);
    }

    #[test]
    fn characteristic_matches_direct_fourier_integral() {
        let hbar = 0.8;
        let v = Mat::from_row_slice(2, 2, &[0.9, 0.2, 0.2, 0.6]);
        let s = GaussianState::new(v, Vector::from_vec(vec![0.3, -0.5]), hbar).unwrap();
        let (h, m) = (0.025, 400_i32);
        for z in [Vector::from_vec(vec![0.4, 0.1]), Vector::from_vec(vec![-1.0, 0.7])] {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in -m..=m {
                for j in -m..=m {
                    let w = Vector::from_vec(vec![0.3 + i as f64 * h, -0.5 + j as f64 * h]);
                    acc += Complex64::from_polar(s.wigner_value(&w), -sigma(&z, &w) / hbar);
                }
            }
            let numeric = acc * h * h / (2.0 * PI * hbar);
            let closed = s.characteristic_value(&z);
            assert!((numeric - closed).norm() <= 1e-6, "{numeric} vs {closed}");
        }
    }

    #[test]
    fn squeezed_states_are_pure() {
        let spec = SqueezedSpec::new(Mat::from_row_slice(1, 1, &[4.0]), Mat::zeros(1, 1)).unwrap();
        let g = spec.g_matrix();
        assert_abs_diff_eq!(g, Mat::from_diagonal(&Vector::from_vec(vec![4.0, 0.25])), epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..50 {
            let a = crate::sampling::random_matrix(&mut rng, 2, 2, 1.0);
            let x = a.transpose() * &a + Mat::identity(2, 2) * 0.1;
            let y = random_symmetric(&mut rng, 2, 1.0);
            let spec = SqueezedSpec::new(x, y).unwrap();
            let g = spec.g_matrix();
            assert!(crate::symplectic_core::symplectic_defect(&g) <= 1e-10 * max_abs(&g).powi(2));
            let s = GaussianState::squeezed_pure(&spec, 1.0).unwrap();
            assert_abs_diff_eq!(s.purity(), 1.0, epsilon = 1e-12);
            assert!(s.is_pure());
        }
    }
}
