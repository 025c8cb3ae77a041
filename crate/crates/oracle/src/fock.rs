//! Truncated Fock-space realization of quadratic Hamiltonians, Gaussian
//! density operators and displacements, built from ladder operators only.
//!
//! Basis states of `n` modes with at most `cutoff − 1` quanta each are indexed
//! with mode 0 as the slowest digit, matching `A₀ ⊗ A₁ ⊗ …`.

use metaphase_core::gaussian_state::GaussianState;
use metaphase_core::linalg::{spd_log, spd_sqrt, sym, CMat, Mat, Vector};
use metaphase_core::symplectic_core::{standard_form, williamson};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;

use crate::error::{OracleError, Result};

/// Largest dense operator the oracle will build.
pub const MAX_ROWS: usize = 4096;
/// Largest acceptable `1 − tr ρ` before renormalization.
pub const TRUNCATION_LIMIT: f64 = 1e-6;
/// Thermal components lighter than this are not propagated.
const DROP_WEIGHT: f64 = 1e-15;
/// Tolerance of the moment self-check, relative to `max(1, ‖V‖)`.
const MOMENT_TOL: f64 = 1e-6;

type Sparse = CsrMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn guard(cutoff: usize, n: usize) -> Result<usize> {
    if cutoff < 2 {
        return Err(OracleError::Cutoff(cutoff));
    }
    if n == 0 {
        return Err(OracleError::InvalidArgument("need at least one mode".into()));
    }
    let rows = cutoff.checked_pow(n as u32).unwrap_or(usize::MAX);
    if rows > MAX_ROWS {
        return Err(OracleError::Guard { cutoff, modes: n, rows, limit: MAX_ROWS });
    }
    Ok(rows)
}

/// Padding used when building operators that are truncated afterwards.
fn padding(cutoff: usize) -> usize {
    (cutoff / 2).max(16)
}

#[derive(Debug, Clone, Copy)]
struct Basis {
    cutoff: usize,
    n: usize,
}

impl Basis {
    fn dim(&self) -> usize {
        self.cutoff.pow(self.n as u32)
    }

    fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((self.n - 1 - mode) as u32)
    }

    fn occupation(&self, idx: usize, mode: usize) -> usize {
        (idx / self.stride(mode)) % self.cutoff
    }

    /// Positions in `self` of the basis states of the smaller `inner` basis.
    fn embed(&self, inner: &Basis) -> Vec<usize> {
        (0..inner.dim())
            .map(|idx| (0..self.n).map(|j| inner.occupation(idx, j) * self.stride(j)).sum())
            .collect()
    }

    /// `x̂_j` then `p̂_j` for every mode, as sparse matrices.
    fn quadratures(&self, hbar: f64) -> Vec<Sparse> {
        let c = (0.5 * hbar).sqrt();
        let dim = self.dim();
        let mut xs = Vec::with_capacity(self.n);
        let mut ps = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let s = self.stride(j);
            let mut x = CooMatrix::new(dim, dim);
            let mut p = CooMatrix::new(dim, dim);
            for idx in 0..dim {
                let k = self.occupation(idx, j);
                if k == 0 {
                    continue;
                }
                let amp = c * (k as f64).sqrt();
                // a: |k⟩ → √k |k−1⟩, a†: |k−1⟩ → √k |k⟩
                x.push(idx - s, idx, Complex64::new(amp, 0.0));
                x.push(idx, idx - s, Complex64::new(amp, 0.0));
                p.push(idx - s, idx, -I * amp);
                p.push(idx, idx - s, I * amp);
            }
            xs.push(Sparse::from(&x));
            ps.push(Sparse::from(&p));
        }
        xs.into_iter().chain(ps).collect()
    }

    /// `½ Σ K_ab ẑ_a ẑ_b + Σ ℓ_a ẑ_a`; symmetric K makes the quadratic part
    /// Weyl ordered.
    fn hamiltonian(&self, k: Option<&Mat>, ell: Option<&Vector>, hbar: f64) -> Sparse {
        let z = self.quadratures(hbar);
        let dim = self.dim();
        let mut coo = CooMatrix::new(dim, dim);
        if let Some(k) = k {
            for a in 0..2 * self.n {
                for b in 0..2 * self.n {
                    let w = k[(a, b)];
                    if w == 0.0 {
                        continue;
                    }
                    let prod = &z[a] * &z[b];
                    for (r, c, v) in prod.triplet_iter() {
                        coo.push(r, c, v * (0.5 * w));
                    }
                }
            }
        }
        if let Some(ell) = ell {
            for (a, za) in z.iter().enumerate() {
                if ell[a] == 0.0 {
                    continue;
                }
                for (r, c, v) in za.triplet_iter() {
                    coo.push(r, c, v * ell[a]);
                }
            }
        }
        Sparse::from(&coo)
    }
}

/// Dense block of `op` on the basis states listed in `keep`.
fn restrict(op: &Sparse, outer: usize, keep: &[usize]) -> CMat {
    let mut pos = vec![usize::MAX; outer];
    for (i, &k) in keep.iter().enumerate() {
        pos[k] = i;
    }
    let mut m = CMat::zeros(keep.len(), keep.len());
    for (r, c, v) in op.triplet_iter() {
        let (pr, pc) = (pos[r], pos[c]);
        if pr != usize::MAX && pc != usize::MAX {
            m[(pr, pc)] += *v;
        }
    }
    m
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

/// `exp(−iτH)·B` by a truncated Taylor series on sub-steps with `‖H‖τ ≤ 1`.
fn expm_action(h: &Sparse, tau: f64, mut b: CMat) -> CMat {
    let norm = (0..h.nrows())
        .map(|r| h.row(r).values().iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let steps = (norm * tau.abs()).ceil().max(1.0) as usize;
    let dt = tau / steps as f64;
    for _ in 0..steps {
        let mut term = b.clone();
        for k in 1..100 {
            term = (h * &term) * (-I * (dt / k as f64));
            b += &term;
            if max_abs(&term) <= 1e-17 * max_abs(&b) {
                break;
            }
        }
    }
    b
}

/// `exp(−iτH)·B` for an `H` that conserves the total quantum number, by
/// diagonalizing each fixed-number sector.  `None` when `H` couples sectors.
fn sector_expm_action(h: &Sparse, basis: &Basis, tau: f64, b: &CMat) -> Option<CMat> {
    let dim = basis.dim();
    let total: Vec<usize> = (0..dim).map(|i| (0..basis.n).map(|j| basis.occupation(i, j)).sum()).collect();
    let scale = h.values().iter().fold(0.0_f64, |m, v| m.max(v.norm())).max(1.0);
    if h.triplet_iter().any(|(r, c, v)| total[r] != total[c] && v.norm() > 1e-12 * scale) {
        return None;
    }
    let sectors = total.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); sectors];
    let mut pos = vec![0; dim];
    for (i, &t) in total.iter().enumerate() {
        pos[i] = members[t].len();
        members[t].push(i);
    }
    let mut blocks: Vec<CMat> = members.iter().map(|m| CMat::zeros(m.len(), m.len())).collect();
    for (r, c, v) in h.triplet_iter() {
        if total[r] == total[c] {
            blocks[total[r]][(pos[r], pos[c])] += *v;
        }
    }
    let mut out = CMat::zeros(dim, b.ncols());
    for (idx, block) in members.iter().zip(blocks) {
        let eig = ((&block + block.adjoint()) * Complex64::new(0.5, 0.0)).symmetric_eigen();
        let q = eig.eigenvectors;
        let mut scaled = q.clone();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let ph = Complex64::from_polar(1.0, -lam * tau);
            scaled.column_mut(k).iter_mut().for_each(|x| *x *= ph);
        }
        let e = scaled * q.adjoint();
        let rows = CMat::from_fn(idx.len(), b.ncols(), |r, c| b[(idx[r], c)]);
        let moved = e * rows;
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(i).copy_from(&moved.row(r));
        }
    }
    Some(out)
}

/// Dense operator on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: CMat,
    cutoff: usize,
    n: usize,
}

impl FockOperator {
    pub fn new(matrix: CMat, cutoff: usize, n: usize) -> Result<Self> {
        let dim = guard(cutoff, n)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(OracleError::ShapeMismatch(matrix.nrows(), dim));
        }
        Ok(FockOperator { matrix, cutoff, n })
    }

    pub fn identity(cutoff: usize, n: usize) -> Result<Self> {
        let dim = guard(cutoff, n)?;
        Ok(FockOperator { matrix: CMat::identity(dim, dim), cutoff, n })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn same_shape(&self, other: &FockOperator) -> Result<()> {
        if self.dim() != other.dim() || self.n != other.n {
            return Err(OracleError::ShapeMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    pub fn product(&self, other: &FockOperator) -> Result<FockOperator> {
        self.same_shape(other)?;
        Ok(FockOperator { matrix: &self.matrix * &other.matrix, ..*self })
    }

    pub fn sum(&self, other: &FockOperator) -> Result<FockOperator> {
        self.same_shape(other)?;
        Ok(FockOperator { matrix: &self.matrix + &other.matrix, ..*self })
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator { matrix: self.matrix.adjoint(), ..*self }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// `‖U†U − I‖` restricted to states with fewer than `block` quanta per mode.
    pub fn unitarity_defect(&self, block: usize) -> f64 {
        let outer = Basis { cutoff: self.cutoff, n: self.n };
        let inner = Basis { cutoff: block.min(self.cutoff), n: self.n };
        let keep = outer.embed(&inner);
        let cols = CMat::from_fn(self.dim(), keep.len(), |r, c| self.matrix[(r, keep[c])]);
        let gram = cols.adjoint() * cols;
        max_abs(&(gram - CMat::identity(keep.len(), keep.len())))
    }

    fn sandwich(&self, s: &FockOperator) -> FockOperator {
        FockOperator { matrix: &s.matrix * &self.matrix * s.matrix.adjoint(), ..*self }
    }

    /// `U ρ U†`.
    pub fn conjugated_by(&self, u: &FockOperator) -> Result<FockOperator> {
        self.same_shape(u)?;
        Ok(self.sandwich(u))
    }
}

/// Dense lowering operator of one mode.
pub fn ladder_operator(mode: usize, cutoff: usize, n: usize) -> Result<FockOperator> {
    let dim = guard(cutoff, n)?;
    if mode >= n {
        return Err(OracleError::InvalidArgument(format!("mode {mode} out of range for {n} modes")));
    }
    let basis = Basis { cutoff, n };
    let s = basis.stride(mode);
    let mut m = CMat::zeros(dim, dim);
    for idx in 0..dim {
        let k = basis.occupation(idx, mode);
        if k > 0 {
            m[(idx - s, idx)] = Complex64::new((k as f64).sqrt(), 0.0);
        }
    }
    FockOperator::new(m, cutoff, n)
}

fn check_symmetric_k(k: &Mat) -> Result<usize> {
    if k.nrows() != k.ncols() || k.nrows() % 2 == 1 || k.nrows() == 0 {
        return Err(OracleError::InvalidArgument(format!("K must be square of even size, got {}×{}", k.nrows(), k.ncols())));
    }
    let asym = (k - k.transpose()).amax();
    if asym > 1e-12 * k.amax().max(1.0) {
        return Err(OracleError::InvalidArgument(format!("K is not symmetric (asymmetry {asym:.3e})")));
    }
    Ok(k.nrows() / 2)
}

/// `H = ½ K ẑ·ẑ (+ ℓ·ẑ)` projected onto the truncated space.  Built two
/// quanta larger and then cut so that every kept matrix element is exact.
pub fn hamiltonian_fock(k: &Mat, ell: Option<&Vector>, hbar: f64, cutoff: usize) -> Result<FockOperator> {
    let n = check_symmetric_k(k)?;
    guard(cutoff, n)?;
    if let Some(l) = ell {
        if l.len() != 2 * n {
            return Err(OracleError::ShapeMismatch(l.len(), 2 * n));
        }
    }
    if !(hbar > 0.0) {
        return Err(OracleError::InvalidArgument(format!("hbar = {hbar} must be positive")));
    }
    let outer = Basis { cutoff: cutoff + 2, n };
    let inner = Basis { cutoff, n };
    let h = outer.hamiltonian(Some(&sym(k)), ell, hbar);
    FockOperator::new(restrict(&h, outer.dim(), &outer.embed(&inner)), cutoff, n)
}

pub fn quadratic_hamiltonian_fock(k: &Mat, hbar: f64, cutoff: usize) -> Result<FockOperator> {
    hamiltonian_fock(k, None, hbar, cutoff)
}

/// Spectral decomposition of a Hermitian operator, reused across times.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    values: Vec<f64>,
    vectors: CMat,
    cutoff: usize,
    n: usize,
}

impl SpectralPropagator {
    pub fn new(h: &FockOperator) -> Result<Self> {
        let defect = h.hermiticity_defect();
        if defect > 1e-12 * max_abs(h.matrix()).max(1.0) {
            return Err(OracleError::InvalidArgument(format!("operator is not Hermitian (defect {defect:.3e})")));
        }
        let eig = h.matrix().clone().symmetric_eigen();
        Ok(SpectralPropagator { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors, cutoff: h.cutoff, n: h.n })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// `exp(−iHt/ħ)`.
    pub fn unitary(&self, t: f64, hbar: f64) -> FockOperator {
        let q = &self.vectors;
        let mut scaled = q.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let ph = Complex64::from_polar(1.0, -lam * t / hbar);
            scaled.column_mut(k).iter_mut().for_each(|x| *x *= ph);
        }
        FockOperator { matrix: scaled * q.adjoint(), cutoff: self.cutoff, n: self.n }
    }

    /// Diagonal of `Q†ρQ`, after which each `Tr(U(t)ρ)` costs one pass.
    pub fn prepare(&self, rho: &FockOperator) -> Result<PreparedTrace> {
        if rho.dim() != self.vectors.nrows() {
            return Err(OracleError::ShapeMismatch(rho.dim(), self.vectors.nrows()));
        }
        let x = rho.matrix() * &self.vectors;
        let weights = (0..self.values.len()).map(|k| self.vectors.column(k).dotc(&x.column(k))).collect();
        Ok(PreparedTrace { values: self.values.clone(), weights })
    }
}

#[derive(Debug, Clone)]
pub struct PreparedTrace {
    values: Vec<f64>,
    weights: Vec<Complex64>,
}

impl PreparedTrace {
    /// `Tr(exp(−iHt/ħ) ρ)`.
    pub fn trace(&self, t: f64, hbar: f64) -> Complex64 {
        self.values.iter().zip(&self.weights).map(|(&lam, &w)| w * Complex64::from_polar(1.0, -lam * t / hbar)).sum()
    }
}

pub fn evolve(h: &FockOperator, t: f64, hbar: f64) -> Result<FockOperator> {
    Ok(SpectralPropagator::new(h)?.unitary(t, hbar))
}

/// Principal logarithm of a unitary matrix through its Schur form.
fn unitary_log(u: &CMat) -> CMat {
    let (q, t) = u.clone().schur().unpack();
    let mut d = CMat::zeros(t.nrows(), t.ncols());
    for k in 0..t.nrows() {
        d[(k, k)] = t[(k, k)].ln();
    }
    &q * d * q.adjoint()
}

/// Quadratic Hamiltonian `K = −J log X` whose time-one flow is `X`.
fn generator_hamiltonian(log_x: &Mat) -> Mat {
    let j = standard_form(log_x.nrows() / 2).expect("even dimension");
    sym(&(-(j * log_x)))
}

/// Fock density operator with its truncation error.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    pub rho: FockOperator,
    /// `1 − tr ρ` before renormalization.
    pub truncation_error: f64,
    /// Largest deviation of the Fock moments from `(z̄, V)`.
    pub moment_deviation: f64,
}

/// `ρ = D(z̄) Û_O Û_P ρ_th Û_P† Û_O† D(z̄)†` where `V = S diag(ν, ν) Sᵀ`,
/// `S = OP` is the polar factorization of the Williamson matrix and `ρ_th` has
/// occupations `ν_j/ħ − ½`.
pub fn gaussian_density_fock(state: &GaussianState, cutoff: usize) -> Result<GaussianDensity> {
    let n = state.n();
    let dim = guard(cutoff, n)?;
    state.ensure_admissible()?;
    let hbar = state.hbar();
    let w = williamson(state.v())?;
    let s = w.r.matrix().transpose();
    let lambdas: Vec<f64> = w
        .omegas
        .iter()
        .map(|nu| {
            let nbar = (nu / hbar - 0.5).max(0.0);
            nbar / (nbar + 1.0)
        })
        .collect();

    let inner = Basis { cutoff, n };
    let outer = Basis { cutoff: cutoff + padding(cutoff), n };
    let embed = outer.embed(&inner);
    let mut columns = Vec::new();
    for idx in 0..dim {
        let p: f64 = lambdas.iter().enumerate().map(|(j, &l)| (1.0 - l) * l.powi(inner.occupation(idx, j) as i32)).product();
        if p > DROP_WEIGHT {
            columns.push((embed[idx], p.sqrt()));
        }
    }
    let mut b = CMat::zeros(outer.dim(), columns.len());
    for (c, &(row, amp)) in columns.iter().enumerate() {
        b[(row, c)] = Complex64::new(amp, 0.0);
    }

    let sts = sym(&(s.transpose() * &s));
    let log_p = spd_log(&sts)? * 0.5;
    let p_inv = spd_sqrt(&sts)?.try_inverse().ok_or_else(|| OracleError::InvalidArgument("singular polar factor".into()))?;
    let o = &s * p_inv;
    if log_p.amax() > 1e-14 {
        let h = outer.hamiltonian(Some(&generator_hamiltonian(&log_p)), None, hbar);
        b = expm_action(&h, 1.0 / hbar, b);
    }
    let u = CMat::from_fn(n, n, |r, c| Complex64::new(o[(r, c)], -o[(r, n + c)]));
    let log_u = unitary_log(&u);
    let g = Mat::from_fn(2 * n, 2 * n, |r, c| {
        let (lr, lc) = (r % n, c % n);
        match (r < n, c < n) {
            (true, true) | (false, false) => log_u[(lr, lc)].re,
            (true, false) => -log_u[(lr, lc)].im,
            (false, true) => log_u[(lr, lc)].im,
        }
    });
    if g.amax() > 1e-14 {
        // passive, so each fixed-number sector is exponentiated on its own
        let h = outer.hamiltonian(Some(&generator_hamiltonian(&g)), None, hbar);
        b = match sector_expm_action(&h, &outer, 1.0 / hbar, &b) {
            Some(moved) => moved,
            None => expm_action(&h, 1.0 / hbar, b),
        };
    }
    let mean = state.mean();
    if mean.amax() > 0.0 {
        // D(z̄) = exp(−(i/ħ) ℓ·ẑ) with ℓ = (−p̄, x̄)
        let ell = Vector::from_fn(2 * n, |a, _| if a < n { -mean[n + a] } else { mean[a - n] });
        let h = outer.hamiltonian(None, Some(&ell), hbar);
        b = expm_action(&h, 1.0 / hbar, b);
    }

    let kept = CMat::from_fn(dim, b.ncols(), |r, c| b[(embed[r], c)]);
    let tr: f64 = kept.iter().map(|x| x.norm_sqr()).sum();
    let truncation_error = (1.0 - tr).max(0.0);
    if truncation_error > TRUNCATION_LIMIT {
        return Err(OracleError::Truncation { error: truncation_error, cutoff, limit: TRUNCATION_LIMIT });
    }
    let moment_deviation = moment_deviation(&outer, &b, state);
    if moment_deviation > MOMENT_TOL {
        return Err(OracleError::MomentMismatch { deviation: moment_deviation });
    }
    let rho = (&kept * kept.adjoint()) / Complex64::new(tr, 0.0);
    Ok(GaussianDensity { rho: FockOperator::new(rho, cutoff, n)?, truncation_error, moment_deviation })
}

/// Compares first and symmetrized second moments of `B B†` with the state.
fn moment_deviation(basis: &Basis, b: &CMat, state: &GaussianState) -> f64 {
    let z = basis.quadratures(state.hbar());
    let norm: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    let zb: Vec<CMat> = z.iter().map(|za| za * b).collect();
    let dim = z.len();
    let inner = |x: &CMat, y: &CMat| x.iter().zip(y.iter()).map(|(a, c)| a.conj() * c).sum::<Complex64>() / norm;
    let means: Vec<f64> = zb.iter().map(|x| inner(b, x).re).collect();
    let mut dev = 0.0_f64;
    for a in 0..dim {
        dev = dev.max((means[a] - state.mean()[a]).abs());
        for c in 0..dim {
            let second = inner(&zb[a], &zb[c]).re - means[a] * means[c];
            dev = dev.max((second - state.v()[(a, c)]).abs());
        }
    }
    dev / state.v().amax().max(1.0)
}

/// `T̂(z₀) = exp((i/ħ)(p₀·x̂ − x₀·p̂))` on the truncated space.
pub fn displacement_fock(z0: &Vector, hbar: f64, cutoff: usize) -> Result<FockOperator> {
    if z0.len() % 2 == 1 || z0.is_empty() {
        return Err(OracleError::InvalidArgument("displacement must have even length".into()));
    }
    let n = z0.len() / 2;
    let dim = guard(cutoff, n)?;
    let inner = Basis { cutoff, n };
    let outer = Basis { cutoff: cutoff + padding(cutoff), n };
    let embed = outer.embed(&inner);
    let mut b = CMat::zeros(outer.dim(), dim);
    for (c, &row) in embed.iter().enumerate() {
        b[(row, c)] = Complex64::new(1.0, 0.0);
    }
    let ell = Vector::from_fn(2 * n, |a, _| if a < n { -z0[n + a] } else { z0[a - n] });
    let h = outer.hamiltonian(None, Some(&ell), hbar);
    let moved = expm_action(&h, 1.0 / hbar, b);
    FockOperator::new(CMat::from_fn(dim, dim, |r, c| moved[(embed[r], c)]), cutoff, n)
}

/// `Tr(Uρ)`.
pub fn trace_oracle(u: &FockOperator, rho: &FockOperator) -> Result<Complex64> {
    u.same_shape(rho)?;
    let (a, b) = (u.matrix(), rho.matrix());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc)
}

/// `tr(ρ²)` for Hermitian ρ.
pub fn purity(rho: &FockOperator) -> f64 {
    rho.matrix().iter().map(|x| x.norm_sqr()).sum()
}
