//! Metaplectic operators as `(S, ν mod 4)` pairs, their twisted Weyl symbols,
//! composition with index bookkeeping and the Heisenberg displacement algebra.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cz_index::{cz_harmonic_closed, cz_mod2_argdet};
use crate::error::{Error, Result};
use crate::linalg::{inert, sigma, Mat, Vector};
use crate::symplectic_core::{cayley, cayley_sum, generating_function_from_matrix, CayleyMatrix, GeneratingFunction, SympMatrix};

fn i_pow(nu: i64) -> Complex64 {
    match nu.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaplecticElement {
    s: SympMatrix,
    nu: u8,
}

impl MetaplecticElement {
    /// Reduces `nu` mod 4.  When `S` is non-degenerate the parity must match
    /// `n + [det(S − I) < 0]`.
    pub fn new(s: SympMatrix, nu: i64) -> Result<Self> {
        if !s.is_degenerate() {
            let expected = cz_mod2_argdet(&s)?;
            if nu.rem_euclid(2) as u8 != expected {
                return Err(Error::IndexParity { nu, expected });
            }
        }
        Ok(MetaplecticElement { s, nu: nu.rem_euclid(4) as u8 })
    }

    pub fn matrix(&self) -> &SympMatrix {
        &self.s
    }

    pub fn nu(&self) -> u8 {
        self.nu
    }

    /// `i^ν`.
    pub fn phase_factor(&self) -> Complex64 {
        i_pow(self.nu as i64)
    }
}

/// `s_σ(z) = prefactor · exp((i/2ħ) M z·z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedGaussianSymbol {
    pub prefactor: Complex64,
    pub m: CayleyMatrix,
    pub hbar: f64,
}

impl TwistedGaussianSymbol {
    pub fn eval(&self, z: &Vector) -> Complex64 {
        let q = z.dot(&(self.m.matrix() * z));
        self.prefactor * Complex64::from_polar(1.0, q / (2.0 * self.hbar))
    }

    /// Analytic continuation to complex arguments.
    pub fn eval_complex(&self, z: &[Complex64]) -> Complex64 {
        let m = self.m.matrix();
        let mut q = Complex64::new(0.0, 0.0);
        for i in 0..z.len() {
            for j in 0..z.len() {
                q += z[i] * m[(i, j)] * z[j];
            }
        }
        self.prefactor * (Complex64::new(0.0, 1.0) * q / (2.0 * self.hbar)).exp()
    }
}

/// `i^ν |det(S − I)|^{−1/2} exp((i/2ħ) M(S) z·z)`.
pub fn twisted_symbol(elem: &MetaplecticElement, hbar: f64) -> Result<TwistedGaussianSymbol> {
    let m = cayley(&elem.s)?;
    let det = elem.s.det_minus_identity();
    Ok(TwistedGaussianSymbol { prefactor: elem.phase_factor() / det.abs().sqrt(), m, hbar })
}

/// Product of two elements; the index picks up `½ sign(M(S) + M(S′))`.
pub fn compose(a: &MetaplecticElement, b: &MetaplecticElement) -> Result<MetaplecticElement> {
    let m = cayley_sum(&a.s, &b.s)?;
    let nu = a.nu as i64 + b.nu as i64 + m.signature()? / 2;
    MetaplecticElement::new(a.s.compose(&b.s), nu)
}

/// Relative mismatch of `det[(S − I)(S′ − I)(M(S) + M(S′))]` against
/// `det(SS′ − I)`.  The matrix version of this relation does not hold in
/// general; the determinant version does.
pub fn determinant_identity_residual(s: &SympMatrix, s2: &SympMatrix) -> Result<f64> {
    let m = cayley_sum(s, s2)?;
    let id = Mat::identity(s.dim(), s.dim());
    let lhs = ((s.matrix() - &id) * (s2.matrix() - &id) * m.matrix()).determinant();
    let rhs = s.compose(s2).det_minus_identity();
    Ok((lhs - rhs).abs() / rhs.abs())
}

/// `S = S_W S_{W′}` with both factors free and non-degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeFactorization {
    pub w: GeneratingFunction,
    pub w_prime: GeneratingFunction,
    /// Rotation angle used for `S_{W′}`.
    pub theta: f64,
    /// Whether the Maslov indices were fixed from the reference index (false
    /// when `S` is degenerate and the product rule does not apply).
    pub from_reference: bool,
}

/// Maslov index of a free, non-degenerate `S` carrying CZ index `nu`:
/// `m = ν + Inert W_xx (mod 4)`.
fn maslov_for(s: &SympMatrix, nu: i64) -> Result<GeneratingFunction> {
    // the parity of m is fixed by det L alone, so W_xx can be read off either choice
    let probe = generating_function_from_matrix(s, if s.det_b() > 0.0 { 0 } else { 1 })?;
    let m = nu + inert(&probe.w_xx())? as i64;
    generating_function_from_matrix(s, m)
}

/// Scans `θ = π/3, π/4, π/5, …`, setting `S_{W′} = rotation(θ)` and
/// `S_W = S·rotation(−θ)`, and accepts the first angle where both factors
/// are free and non-degenerate.
pub fn free_factorization(s: &SympMatrix, nu: i64) -> Result<FreeFactorization> {
    let n = s.n();
    for k in 3..64 {
        let theta = PI / k as f64;
        let right = SympMatrix::rotation(n, theta);
        let left = s.compose(&SympMatrix::rotation(n, -theta));
        if !left.is_free() || left.is_degenerate() || !right.is_free() || right.is_degenerate() {
            continue;
        }
        let nu_right = n as i64 * cz_harmonic_closed(1.0, theta)?.nu.expect("closed form is exact");
        let w_prime = maslov_for(&right, nu_right)?;
        if s.is_degenerate() {
            let probe = if left.det_b() > 0.0 { 0 } else { 1 };
            let w = generating_function_from_matrix(&left, probe)?;
            return Ok(FreeFactorization { w, w_prime, theta, from_reference: false });
        }
        let sig = cayley_sum(&left, &right)?.signature()?;
        let w = maslov_for(&left, nu - nu_right - sig / 2)?;
        return Ok(FreeFactorization { w, w_prime, theta, from_reference: true });
    }
    Err(Error::SearchFailed)
}

/// `e^{(i/ħ)·phase} T̂(z0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementElement {
    pub z0: Vector,
    pub phase: f64,
}

impl DisplacementElement {
    pub fn new(z0: Vector, phase: f64) -> Self {
        DisplacementElement { z0, phase }
    }

    /// `T̂(z₀)T̂(z₁) = e^{(i/2ħ)σ(z₀,z₁)} T̂(z₀ + z₁)`.
    pub fn compose(&self, other: &DisplacementElement) -> Result<DisplacementElement> {
        if self.z0.len() != other.z0.len() {
            return Err(Error::DimensionMismatch { expected: self.z0.len(), got: other.z0.len() });
        }
        Ok(DisplacementElement {
            z0: &self.z0 + &other.z0,
            phase: self.phase + other.phase + 0.5 * sigma(&self.z0, &other.z0),
        })
    }

    pub fn inverse(&self) -> DisplacementElement {
        DisplacementElement { z0: -&self.z0, phase: -self.phase }
    }
}

pub fn displacement_compose(a: &DisplacementElement, b: &DisplacementElement) -> Result<DisplacementElement> {
    a.compose(b)
}

/// Twisted symbol of `e^{(i/ħ)phase} T̂(z₀) Ŝ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacedSymbol {
    pub base: TwistedGaussianSymbol,
    pub displacement: DisplacementElement,
}

impl DisplacedSymbol {
    /// `e^{(i/ħ)phase} s_σ(z − z₀) e^{−(i/2ħ)σ(z, z₀)}`.
    pub fn eval(&self, z: &Vector) -> Complex64 {
        let d = &self.displacement;
        let hbar = self.base.hbar;
        let shifted = z - &d.z0;
        self.base.eval(&shifted) * Complex64::from_polar(1.0, (d.phase - 0.5 * sigma(z, &d.z0)) / hbar)
    }
}

pub fn displaced_twisted_symbol(d: &DisplacementElement, elem: &MetaplecticElement, hbar: f64) -> Result<DisplacedSymbol> {
    if d.z0.len() != elem.s.dim() {
        return Err(Error::DimensionMismatch { expected: elem.s.dim(), got: d.z0.len() });
    }
    Ok(DisplacedSymbol { base: twisted_symbol(elem, hbar)?, displacement: d.clone() })
}
