//! Phase-space quadrature of trace integrals and of the twisted convolution
//! of two Gaussian symbols at the origin.

use metaphase_core::gaussian_state::GaussianState;
use metaphase_core::linalg::{eigh, Mat, Vector};
use metaphase_core::symplectic_core::standard_form;
use metaphase_core::weyl_symbol::TwistedGaussianSymbol;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{OracleError, Result};

/// Boundary-to-peak ratio above which the integrand counts as non-decaying.
const DECAY_RATIO: f64 = 1e-9;

/// Trapezoidal product grid over a box measured in envelope standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Nodes per axis; made odd if even.
    pub points: usize,
    /// Half-width of the box in standard deviations.
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(points: usize, half_width: f64) -> Self {
        GridSpec { points, half_width }
    }

    /// 201 nodes per axis for one mode, 41 for two.
    pub fn default_for(n: usize) -> Self {
        GridSpec { points: if n == 1 { 201 } else { 41 }, half_width: 8.0 }
    }

    fn nodes(&self) -> usize {
        (self.points.max(5)) | 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    /// `|I_h − I_{2h}|`, the Richardson-style discretization estimate.
    pub error_estimate: f64,
    pub nodes_per_axis: usize,
}

struct GridSum {
    value: Complex64,
    peak: f64,
    boundary: f64,
}

/// Trapezoid rule on `[−a, a]^d` with `m` nodes per axis, `f` taking whitened
/// coordinates.
fn grid_sum<F>(d: usize, m: usize, a: f64, f: &F) -> GridSum
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let h = 2.0 * a / (m - 1) as f64;
    let outer = m.pow((d - 1) as u32);
    let partial: Vec<GridSum> = (0..outer)
        .into_par_iter()
        .map(|o| {
            let mut u = vec![0.0; d];
            let mut weight_o = 1.0;
            let mut edge_o = false;
            let mut rest = o;
            for k in 0..d - 1 {
                let i = rest % m;
                rest /= m;
                u[k] = -a + h * i as f64;
                if i == 0 || i == m - 1 {
                    weight_o *= 0.5;
                    edge_o = true;
                }
            }
            let mut acc = GridSum { value: Complex64::new(0.0, 0.0), peak: 0.0, boundary: 0.0 };
            for i in 0..m {
                u[d - 1] = -a + h * i as f64;
                let edge = edge_o || i == 0 || i == m - 1;
                let w = if i == 0 || i == m - 1 { 0.5 * weight_o } else { weight_o };
                let v = f(&u);
                acc.value += v * w;
                acc.peak = acc.peak.max(v.norm());
                if edge {
                    acc.boundary = acc.boundary.max(v.norm());
                }
            }
            acc
        })
        .collect();
    partial.into_iter().fold(GridSum { value: Complex64::new(0.0, 0.0), peak: 0.0, boundary: 0.0 }, |a, b| GridSum {
        value: a.value + b.value,
        peak: a.peak.max(b.peak),
        boundary: a.boundary.max(b.boundary),
    })
    .scaled(h.powi(d as i32))
}

impl GridSum {
    fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        self
    }
}

/// Fine and coarse sums with the decay check.
fn integrate<F>(d: usize, grid: &GridSpec, f: F) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    if !(grid.half_width > 0.0) {
        return Err(OracleError::InvalidArgument(format!("half-width {} must be positive", grid.half_width)));
    }
    let m = grid.nodes();
    let fine = grid_sum(d, m, grid.half_width, &f);
    if fine.peak == 0.0 || !fine.value.is_finite() {
        return Err(OracleError::NonDecaying { ratio: f64::INFINITY });
    }
    let ratio = fine.boundary / fine.peak;
    if ratio > DECAY_RATIO {
        return Err(OracleError::NonDecaying { ratio });
    }
    let coarse = grid_sum(d, (m - 1) / 2 + 1, grid.half_width, &f);
    Ok(QuadratureResult { value: fine.value, error_estimate: (fine.value - coarse.value).norm(), nodes_per_axis: m })
}

fn check_modes(n: usize) -> Result<()> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(OracleError::UnsupportedModes(n))
    }
}

/// `∫ s(z) ρ_σ(−z) dz` where ρ_σ is the (normalized) characteristic function
/// of the state.  The box follows the envelope of ρ_σ, whose covariance is
/// `ħ² JᵀV⁻¹J`.
pub fn quadrature_trace<F>(symbol: F, state: &GaussianState, grid: &GridSpec) -> Result<QuadratureResult>
where
    F: Fn(&Vector) -> Complex64 + Sync,
{
    let n = state.n();
    check_modes(n)?;
    let hbar = state.hbar();
    let j = standard_form(n)?;
    let v_inv = state.v().clone().try_inverse().ok_or_else(|| OracleError::InvalidArgument("singular covariance".into()))?;
    let env = (j.transpose() * v_inv * &j) * (hbar * hbar);
    let l = nalgebra::Cholesky::new(0.5 * (&env + env.transpose()))
        .ok_or_else(|| OracleError::InvalidArgument("envelope covariance is not positive".into()))?
        .l();
    let jac = l.determinant();
    let mut res = integrate(2 * n, grid, |u| {
        let z = &l * Vector::from_column_slice(u);
        symbol(&z) * state.characteristic_value(&(-&z))
    })?;
    res.value *= jac;
    res.error_estimate *= jac;
    Ok(res)
}

/// `(2πħ)^{−n} ∫ a(z′) b(−z′) dz′`, the twisted convolution of two Gaussian
/// symbols at the origin.  The integral only converges conditionally on the
/// real plane, so each eigendirection of `M_a + M_b` is rotated by `e^{±iπ/4}`
/// into the half-plane where the integrand decays.
pub fn twisted_convolution_at_origin(a: &TwistedGaussianSymbol, b: &TwistedGaussianSymbol, grid: &GridSpec) -> Result<QuadratureResult> {
    let dim = a.m.matrix().nrows();
    if b.m.matrix().nrows() != dim {
        return Err(OracleError::ShapeMismatch(dim, b.m.matrix().nrows()));
    }
    check_modes(dim / 2)?;
    if (a.hbar - b.hbar).abs() > 0.0 {
        return Err(OracleError::InvalidArgument("symbols use different ħ".into()));
    }
    let hbar = a.hbar;
    let sum: Mat = a.m.matrix() + b.m.matrix();
    let (vals, vecs) = eigh(&(0.5 * (&sum + sum.transpose())));
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if vals.iter().any(|v| v.abs() <= 1e-10 * scale.max(1.0)) {
        return Err(OracleError::NonDecaying { ratio: 1.0 });
    }
    // z = Σ_k c_k r_k σ_k u_k with c_k = e^{iπ/4·sgn λ_k}, σ_k = √(ħ/|λ_k|)
    let rot: Vec<Complex64> = vals.iter().map(|v| Complex64::from_polar(1.0, v.signum() * std::f64::consts::FRAC_PI_4)).collect();
    let widths: Vec<f64> = vals.iter().map(|v| (hbar / v.abs()).sqrt()).collect();
    let jac: Complex64 = rot.iter().zip(&widths).map(|(c, w)| c * w).product();
    let mut res = integrate(dim, grid, |u| {
        let z: Vec<Complex64> = (0..dim)
            .map(|r| (0..dim).map(|k| rot[k] * (widths[k] * u[k] * vecs[(r, k)])).sum())
            .collect();
        let neg: Vec<Complex64> = z.iter().map(|x| -x).collect();
        a.eval_complex(&z) * b.eval_complex(&neg)
    })?;
    let norm = (2.0 * std::f64::consts::PI * hbar).powi(-((dim / 2) as i32));
    res.value *= jac * norm;
    res.error_estimate *= jac.norm() * norm;
    Ok(res)
}
