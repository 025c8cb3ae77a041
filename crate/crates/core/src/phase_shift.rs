//! Closed-form traces `Tr(Ŝ_t ρ̂)` for Gaussian states, the resulting phase
//! series, and the dynamical phase.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cz_index::{cz_harmonic_closed, crossing_scan};
use crate::error::{Error, Result};
use crate::gaussian_state::GaussianState;
use crate::isotopy::{AffinePath, SympPath};
use crate::linalg::{is_positive_definite, j_matrix, sym, to_complex_vec, CMat, CVector, Mat, Vector};
use crate::symplectic_core::{cayley, SympMatrix};

/// Traces smaller than this carry no usable phase.
pub const TRACE_FLOOR: f64 = 1e-12;

fn i_pow(nu: i64) -> Complex64 {
    match nu.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `(det A)^{−1/2}` as the product over eigenvalues α of the root of `1/α`
/// with positive real part.  Requires `Re A` positive definite.
pub fn fresnel_det_invsqrt(a: &CMat) -> Result<Complex64> {
    let re = sym(&a.map(|x| x.re));
    if !is_positive_definite(&re) {
        return Err(Error::FresnelNotPositive);
    }
    let eig = a
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    // Re α > 0 for every eigenvalue, so the principal root is the right branch
    Ok(eig.iter().map(|alpha| alpha.inv().sqrt()).product())
}

fn nondegenerate(s: &SympMatrix) -> Result<f64> {
    let det = s.det_minus_identity();
    if det.abs() < s.degeneracy_floor() {
        return Err(Error::DegenerateEndpoint { det });
    }
    Ok(det)
}

/// `V/ħ + i·J M(S) J`, which is `½F⁻¹ + iM(Sᵀ)`.
fn fresnel_matrix(s: &SympMatrix, state: &GaussianState) -> Result<CMat> {
    let j = j_matrix(s.n());
    let m_t = sym(&(&j * cayley(s)?.matrix() * &j));
    let re = state.v() / state.hbar();
    Ok(CMat::from_fn(re.nrows(), re.ncols(), |r, c| Complex64::new(re[(r, c)], m_t[(r, c)])))
}

fn check_dims(s: &SympMatrix, state: &GaussianState) -> Result<()> {
    if s.n() != state.n() {
        return Err(Error::DimensionMismatch { expected: s.dim(), got: 2 * state.n() });
    }
    Ok(())
}

/// `i^ν |det(S − I)|^{−1/2} (det[V/ħ + iJM(S)J])^{−1/2}` for a centered state.
pub fn trace_gaussian(s: &SympMatrix, nu: i64, state: &GaussianState) -> Result<Complex64> {
    check_dims(s, state)?;
    if !state.is_centered() {
        return Err(Error::NotCentered);
    }
    state.ensure_admissible()?;
    trace_centered_unchecked(s, nu, state)
}

fn trace_centered_unchecked(s: &SympMatrix, nu: i64, state: &GaussianState) -> Result<Complex64> {
    let det = nondegenerate(s)?;
    let a = fresnel_matrix(s, state)?;
    Ok(i_pow(nu) / det.abs().sqrt() * fresnel_det_invsqrt(&a)?)
}

/// `Tr(e^{(i/ħ)γ} T̂(z_t) Ŝ ρ̂)` for a state with mean `z̄`.
///
/// Writing the trace as a Gaussian integral over the twisted symbol gives
/// `i^ν |det(S − I)|^{−1/2} (det A)^{−1/2} exp(iγ/ħ + c + (ħ/2) bᵀA⁻¹b)` with
/// `A = JᵀVJ/ħ − iM`, `b = (i/ħ)(−Mz_t + ½Jz_t − Jz̄)` and
/// `c = (i/2ħ)Mz_t·z_t`.  Since `A = Jᵀ(V/ħ + iJMJ)J`, the Fresnel factor is
/// shared with [`trace_gaussian`], which this reduces to exactly when
/// `z_t = z̄ = 0` and `γ = 0`.
pub fn trace_inhomogeneous(s: &SympMatrix, nu: i64, z_t: &Vector, gamma_t: f64, state: &GaussianState) -> Result<Complex64> {
    check_dims(s, state)?;
    if z_t.len() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), got: z_t.len() });
    }
    state.ensure_admissible()?;
    let base = trace_centered_unchecked(s, nu, state)?;
    let zbar = state.mean();
    if gamma_t == 0.0 && z_t.iter().all(|&x| x == 0.0) && zbar.iter().all(|&x| x == 0.0) {
        return Ok(base);
    }
    let hbar = state.hbar();
    let j = j_matrix(s.n());
    let m = cayley(s)?.into_matrix();
    let a_prime = fresnel_matrix(s, state)?;
    let i = Complex64::new(0.0, 1.0);
    let b_real: Vector = -(&m * z_t) + (&j * z_t) * 0.5 - &j * zbar;
    // bᵀA⁻¹b = (Jb)ᵀ A′⁻¹ (Jb) with b = (i/ħ)·b_real
    let jb: CVector = to_complex_vec(&(&j * &b_real)) * (i / hbar);
    let sol = a_prime
        .clone()
        .lu()
        .solve(&jb)
        .ok_or_else(|| Error::Numerical("singular Fresnel matrix".into()))?;
    let quad = jb.transpose() * sol;
    let c = i / (2.0 * hbar) * z_t.dot(&(&m * z_t));
    let exponent = i * gamma_t / hbar + c + quad[(0, 0)] * (hbar / 2.0);
    Ok(base * exponent.exp())
}

/// Trace for `K = RᵀDR`, evaluated in normal-mode coordinates: the state is
/// transported by `R` and the path becomes independent rotations, with
/// `ν = Σ_j ν_j(ω_j t)`.
pub fn trace_generalized(omegas: &[f64], r: &SympMatrix, t: f64, state: &GaussianState) -> Result<Complex64> {
    if omegas.len() != r.n() {
        return Err(Error::DimensionMismatch { expected: r.n(), got: omegas.len() });
    }
    check_dims(r, state)?;
    let mut nu = 0;
    for &w in omegas {
        nu += cz_harmonic_closed(w, t)?.nu.expect("closed form is exact");
    }
    let angles: Vec<f64> = omegas.iter().map(|w| w * t).collect();
    let rot = SympMatrix::mode_rotation(&angles);
    let moved = state.transform(r, &Vector::zeros(r.dim()))?;
    trace_gaussian(&rot, nu, &moved)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub t: f64,
    /// `None` on degenerate samples.
    pub trace: Option<Complex64>,
    pub phase_principal: Option<f64>,
    pub phase_unwrapped: Option<f64>,
    pub nu: Option<u8>,
    pub det_s_minus_i: f64,
    pub degenerate: bool,
}

fn principal(x: f64) -> f64 {
    // maps to (−π, π]
    let y = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Fills `phase_unwrapped` by adding the principal difference to the last
/// usable sample; degenerate samples and vanishing traces are skipped.
pub fn unwrap_phases(records: &mut [PhaseRecord]) {
    let mut last: Option<(f64, f64)> = None;
    for r in records.iter_mut() {
        let Some(p) = r.phase_principal else { continue };
        let u = match last {
            None => p,
            Some((lp, lu)) => lu + principal(p - lp),
        };
        r.phase_unwrapped = Some(u);
        last = Some((p, u));
    }
}

fn record(t: f64, s: &SympMatrix, nu: Option<i64>, trace: impl FnOnce() -> Result<Complex64>) -> Result<PhaseRecord> {
    let det = s.det_minus_identity();
    let degenerate = det.abs() < s.degeneracy_floor();
    if degenerate {
        return Ok(PhaseRecord { t, trace: None, phase_principal: None, phase_unwrapped: None, nu: None, det_s_minus_i: det, degenerate });
    }
    let nu = nu.expect("index is defined away from degenerate samples");
    let tr = trace()?;
    let phase = (tr.norm() > TRACE_FLOOR).then(|| tr.arg());
    Ok(PhaseRecord {
        t,
        trace: Some(tr),
        phase_principal: phase,
        phase_unwrapped: None,
        nu: Some(nu.rem_euclid(4) as u8),
        det_s_minus_i: det,
        degenerate,
    })
}

fn indices(path: &SympPath, times: &[f64]) -> Result<Vec<Option<i64>>> {
    if let Some(&bad) = times.iter().find(|&&t| !(t >= 0.0 && t <= path.end_time())) {
        return Err(Error::InvalidGrid(format!("t = {bad} outside the path")));
    }
    let scan = crossing_scan(path)?;
    Ok(times
        .iter()
        .map(|&t| {
            let s = SympMatrix::trusted(path.eval(t));
            (!s.is_degenerate()).then(|| scan.nu_at(t))
        })
        .collect())
}

/// Phase records at every sample of the path.
pub fn phase_series(path: &SympPath, state: &GaussianState) -> Result<Vec<PhaseRecord>> {
    phase_series_at(path, state, path.times())
}

/// Phase records at arbitrary times inside the path.  The index at each time
/// is that of the prefix path.
pub fn phase_series_at(path: &SympPath, state: &GaussianState, times: &[f64]) -> Result<Vec<PhaseRecord>> {
    if !state.is_centered() {
        return Err(Error::NotCentered);
    }
    if path.n() != state.n() {
        return Err(Error::DimensionMismatch { expected: 2 * path.n(), got: 2 * state.n() });
    }
    state.ensure_admissible()?;
    let nus = indices(path, times)?;
    let mut records = times
        .par_iter()
        .zip(nus.par_iter())
        .map(|(&t, &nu)| {
            let s = SympMatrix::trusted(path.eval(t));
            record(t, &s, nu, || trace_centered_unchecked(&s, nu.unwrap_or(0), state))
        })
        .collect::<Result<Vec<_>>>()?;
    unwrap_phases(&mut records);
    Ok(records)
}

/// Phase records for an affine path `e^{(i/ħ)γ_t} T̂(z_t) Ŝ_t` at its samples.
pub fn phase_series_affine(path: &AffinePath, state: &GaussianState) -> Result<Vec<PhaseRecord>> {
    if path.base.n() != state.n() {
        return Err(Error::DimensionMismatch { expected: 2 * path.base.n(), got: 2 * state.n() });
    }
    state.ensure_admissible()?;
    let times = path.base.times();
    let nus = indices(&path.base, times)?;
    let mut records = (0..times.len())
        .into_par_iter()
        .map(|i| {
            let s = &path.base.matrices()[i];
            record(times[i], s, nus[i], || trace_inhomogeneous(s, nus[i].unwrap_or(0), &path.z_t[i], path.gamma_t[i], state))
        })
        .collect::<Result<Vec<_>>>()?;
    unwrap_phases(&mut records);
    Ok(records)
}

/// `Tr(ρ̂Ĥ)` for `H = ½Kz·z`: `½tr(KV) + ½Kz̄·z̄`.
pub fn mean_energy(k: &Mat, state: &GaussianState) -> f64 {
    let z = state.mean();
    0.5 * (k * state.v()).trace() + 0.5 * z.dot(&(k * z))
}

/// `φ′_d(t) = −(1/ħ)∫₀ᵗ Tr(ρ̂Ĥ(t′)) dt′` at every sample, by Simpson's rule
/// on each interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalPhase {
    pub times: Vec<f64>,
    pub phi_d: Vec<f64>,
}

pub fn dynamical_phase(path: &SympPath, state: &GaussianState) -> Result<DynamicalPhase> {
    if path.n() != state.n() {
        return Err(Error::DimensionMismatch { expected: 2 * path.n(), got: 2 * state.n() });
    }
    state.ensure_admissible()?;
    let times = path.times().to_vec();
    let e = |t: f64| mean_energy(&path.hamiltonian_at(t), state);
    let mut phi_d = Vec::with_capacity(times.len());
    phi_d.push(0.0);
    let mut acc = 0.0;
    let mut left = e(times[0]);
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        let right = e(b);
        acc += (b - a) / 6.0 * (left + 4.0 * e(0.5 * (a + b)) + right);
        phi_d.push(-acc / state.hbar());
        left = right;
    }
    Ok(DynamicalPhase { times, phi_d })
}

/// `φ(t) − φ′_d(t)` on samples where the unwrapped phase exists.
pub fn geometric_candidate(records: &[PhaseRecord], dynamical: &DynamicalPhase) -> Result<Vec<Option<f64>>> {
    if records.len() != dynamical.phi_d.len() {
        return Err(Error::GridMismatch(format!("{} records but {} dynamical samples", records.len(), dynamical.phi_d.len())));
    }
    Ok(records.iter().zip(&dynamical.phi_d).map(|(r, d)| r.phase_unwrapped.map(|p| p - d)).collect())
}

/// `det(V/ħ + iJM(S)J)`, exposed for the harmonic closed form.
pub fn fresnel_determinant(s: &SympMatrix, state: &GaussianState) -> Result<Complex64> {
    Ok(fresnel_matrix(s, state)?.determinant())
}
