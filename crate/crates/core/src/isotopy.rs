//! Symplectic isotopies: sampled paths `t ↦ S_t` starting at the identity,
//! closed-form families, Hamiltonian flows and affine extensions.

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, j_matrix, logm, max_abs, mode_rotation, sigma, sym, Mat, Vector};
use crate::symplectic_core::{symplectic_defect, SympMatrix, SYMPLECTIC_TOL};

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorTag {
    Harmonic { omega: f64 },
    Exponential { x: Mat },
    NormalModes { omegas: Vec<f64>, r: SympMatrix },
}

impl GeneratorTag {
    /// Constant generator G with `S_t = exp(tG)`.
    pub fn generator(&self) -> Mat {
        match self {
            GeneratorTag::Harmonic { omega } => j_matrix(1) * *omega,
            GeneratorTag::Exponential { x } => x.clone(),
            GeneratorTag::NormalModes { omegas, r } => {
                let n = omegas.len();
                let mut jd = Mat::zeros(2 * n, 2 * n);
                for (i, w) in omegas.iter().enumerate() {
                    jd[(i, n + i)] = *w;
                    jd[(n + i, i)] = -*w;
                }
                r.inverse().matrix() * jd * r.matrix()
            }
        }
    }

    pub fn eval(&self, t: f64) -> Mat {
        match self {
            GeneratorTag::Harmonic { omega } => crate::linalg::rotation(1, omega * t),
            GeneratorTag::Exponential { x } => (x * t).exp(),
            GeneratorTag::NormalModes { omegas, r } => {
                let angles: Vec<f64> = omegas.iter().map(|w| w * t).collect();
                r.inverse().matrix() * mode_rotation(&angles) * r.matrix()
            }
        }
    }

    pub fn hamiltonian(&self) -> Mat {
        match self {
            GeneratorTag::Harmonic { omega } => Mat::identity(2, 2) * *omega,
            GeneratorTag::NormalModes { omegas, r } => {
                let n = omegas.len();
                let mut d = Mat::zeros(2 * n, 2 * n);
                for (i, w) in omegas.iter().enumerate() {
                    d[(i, i)] = *w;
                    d[(n + i, n + i)] = *w;
                }
                sym(&(r.matrix().transpose() * d * r.matrix()))
            }
            GeneratorTag::Exponential { x } => sym(&(-(j_matrix(x.nrows() / 2) * x))),
        }
    }
}

/// Uniform grid `t_i = t_max·i/steps`, i = 0..=steps.
pub fn time_grid(t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidGrid("need at least one step".into()));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidGrid(format!("t_max = {t_max} must be positive")));
    }
    Ok((0..=steps).map(|i| t_max * i as f64 / steps as f64).collect())
}

fn validate_grid(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidGrid("need at least two samples".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidGrid(format!("grid starts at {} instead of 0", times[0])));
    }
    if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Projection of a real matrix onto sp(n): `J·sym(−JG)`.
fn project_sp(g: &Mat) -> Mat {
    let j = j_matrix(g.nrows() / 2);
    &j * sym(&(-(&j * g)))
}

fn check_sp(x: &Mat) -> Result<usize> {
    let n = crate::linalg::check_square_even(x)?;
    let jx = j_matrix(n) * x;
    let a = asymmetry(&jx);
    if a > 1e-12 * max_abs(x).max(1.0) {
        return Err(Error::NotHamiltonian { asymmetry: a });
    }
    Ok(n)
}

/// Time-sampled symplectic path with `S(0) = I`.
///
/// Between samples the path is interpolated as `exp(G_i (t − t_i)) S_i` with one
/// generator per interval; tagged closed-form paths are evaluated exactly.
#[derive(Debug, Clone)]
pub struct SympPath {
    times: Vec<f64>,
    matrices: Vec<SympMatrix>,
    tag: Option<GeneratorTag>,
    segments: Vec<Mat>,
}

impl SympPath {
    fn tagged(tag: GeneratorTag, grid: &[f64]) -> Result<Self> {
        validate_grid(grid)?;
        let g = tag.generator();
        let matrices = grid.iter().map(|&t| SympMatrix::trusted(tag.eval(t))).collect();
        Ok(SympPath { times: grid.to_vec(), matrices, segments: vec![g; grid.len() - 1], tag: Some(tag) })
    }

    /// Builds a path from raw samples; each interval is interpolated with the
    /// principal logarithm of `S_{i+1} S_i⁻¹`.
    pub fn from_samples(times: Vec<f64>, samples: Vec<Mat>) -> Result<Self> {
        validate_grid(&times)?;
        if samples.len() != times.len() {
            return Err(Error::GridMismatch(format!("{} times but {} matrices", times.len(), samples.len())));
        }
        let matrices: Vec<SympMatrix> = samples.into_iter().map(SympMatrix::new).collect::<Result<_>>()?;
        let n = matrices[0].n();
        if matrices.iter().any(|m| m.n() != n) {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: matrices.iter().map(|m| m.dim()).find(|&d| d != 2 * n).unwrap() });
        }
        let deviation = max_abs(&(matrices[0].matrix() - Mat::identity(2 * n, 2 * n)));
        if deviation > SYMPLECTIC_TOL {
            return Err(Error::NotAtIdentity { deviation });
        }
        let mut matrices = matrices;
        matrices[0] = SympMatrix::identity(n);
        let segments = (0..times.len() - 1)
            .map(|i| {
                let step = matrices[i + 1].matrix() * matrices[i].inverse().matrix();
                Ok(project_sp(&logm(&step)?) / (times[i + 1] - times[i]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SympPath { times, matrices, tag: None, segments })
    }

    fn from_segments(times: Vec<f64>, segments: Vec<Mat>, start: SympMatrix) -> Self {
        let mut matrices = Vec::with_capacity(times.len());
        matrices.push(start);
        for i in 0..segments.len() {
            let dt = times[i + 1] - times[i];
            let next = (&segments[i] * dt).exp() * matrices[i].matrix();
            matrices.push(SympMatrix::trusted(next));
        }
        SympPath { times, matrices, tag: None, segments }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn matrices(&self) -> &[SympMatrix] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n(&self) -> usize {
        self.matrices[0].n()
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn end(&self) -> &SympMatrix {
        self.matrices.last().unwrap()
    }

    pub fn generator_tag(&self) -> Option<&GeneratorTag> {
        self.tag.as_ref()
    }

    /// Exact Hamiltonian matrix for closed-form paths.
    pub fn analytic_hamiltonian(&self) -> Option<Mat> {
        self.tag.as_ref().map(|t| t.hamiltonian())
    }

    /// Per-interval generators of the interpolant.
    pub fn segment_generators(&self) -> &[Mat] {
        &self.segments
    }

    fn segment_index(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.segments.len() - 1)
    }

    /// Evaluates the path (or its interpolant) at any `t` in range.
    pub fn eval(&self, t: f64) -> Mat {
        if let Some(tag) = &self.tag {
            return tag.eval(t);
        }
        let i = self.segment_index(t);
        (&self.segments[i] * (t - self.times[i])).exp() * self.matrices[i].matrix()
    }

    /// Hamiltonian matrix of the interpolant at `t`.
    pub fn hamiltonian_at(&self, t: f64) -> Mat {
        if let Some(tag) = &self.tag {
            return tag.hamiltonian();
        }
        let g = &self.segments[self.segment_index(t)];
        sym(&(-(j_matrix(self.n()) * g)))
    }

    /// The path `t ↦ S_t⁻¹`.
    pub fn inverse_path(&self) -> SympPath {
        let matrices: Vec<SympMatrix> = self.matrices.iter().map(|m| m.inverse()).collect();
        if let Some(tag) = &self.tag {
            let x = -tag.generator();
            return SympPath { times: self.times.clone(), matrices, segments: vec![x.clone(); self.segments.len()], tag: Some(GeneratorTag::Exponential { x }) };
        }
        let segments = self
            .segments
            .iter()
            .zip(&self.matrices)
            .map(|(g, s)| -(s.inverse().matrix() * g * s.matrix()))
            .collect();
        SympPath { times: self.times.clone(), matrices, tag: None, segments }
    }

    /// The conjugated path `t ↦ R S_t R⁻¹`.
    pub fn conjugate(&self, r: &SympMatrix) -> SympPath {
        let r_inv = r.inverse();
        let conj = |m: &Mat| r.matrix() * m * r_inv.matrix();
        let matrices = self.matrices.iter().map(|m| SympMatrix::trusted(conj(m.matrix()))).collect();
        let segments: Vec<Mat> = self.segments.iter().map(conj).collect();
        let tag = self.tag.as_ref().map(|t| GeneratorTag::Exponential { x: conj(&t.generator()) });
        SympPath { times: self.times.clone(), matrices, tag, segments }
    }

    /// Pointwise product `t ↦ S_t S′_t` on a shared grid.
    pub fn pointwise_product(&self, other: &SympPath) -> Result<SympPath> {
        if self.times != other.times {
            return Err(Error::GridMismatch("paths use different grids".into()));
        }
        let samples = self.matrices.iter().zip(&other.matrices).map(|(a, b)| a.matrix() * b.matrix()).collect();
        SympPath::from_samples(self.times.clone(), samples)
    }

    /// Concatenation with `s ↦ L_s S_T`, where `L` is a path starting at I.
    pub fn then_left(&self, other: &SympPath) -> Result<SympPath> {
        if other.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.end().dim(), got: other.end().dim() });
        }
        let t_end = self.end_time();
        let end = self.end().clone();
        let mut times = self.times.clone();
        let mut matrices = self.matrices.clone();
        let mut segments = self.segments.clone();
        for k in 1..other.len() {
            times.push(t_end + other.times[k]);
            matrices.push(SympMatrix::trusted(other.matrices[k].matrix() * end.matrix()));
        }
        segments.extend(other.segments.iter().cloned());
        Ok(SympPath { times, matrices, tag: None, segments })
    }

    /// Largest symplecticity defect over the samples.
    pub fn max_defect(&self) -> f64 {
        self.matrices.iter().map(|m| m.defect()).fold(0.0, f64::max)
    }
}

/// Integrates `Ṡ = J K(t) S` with the exponential midpoint rule and a
/// first-order symplectic re-projection after every step.
pub fn flow<F: Fn(f64) -> Mat>(k: F, grid: &[f64]) -> Result<SympPath> {
    validate_grid(grid)?;
    let k0 = k(0.0);
    let n = crate::linalg::check_square_even(&k0)?;
    let j = j_matrix(n);
    let mut matrices = Vec::with_capacity(grid.len());
    let mut segments = Vec::with_capacity(grid.len() - 1);
    let mut s = Mat::identity(2 * n, 2 * n);
    matrices.push(SympMatrix::identity(n));
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        let km = k(0.5 * (w[0] + w[1]));
        if km.nrows() != 2 * n || km.ncols() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: km.nrows() });
        }
        let a = asymmetry(&km);
        if a > 1e-12 * max_abs(&km).max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: a });
        }
        let g = &j * sym(&km);
        s = (&g * dt).exp() * s;
        for _ in 0..2 {
            let e = s.transpose() * &j * &s - &j;
            if max_abs(&e) < 1e-16 {
                break;
            }
            s = &s * (Mat::identity(2 * n, 2 * n) + &j * e * 0.5);
        }
        segments.push(g);
        matrices.push(SympMatrix::trusted(s.clone()));
    }
    debug_assert!(matrices.iter().all(|m| symplectic_defect(m.matrix()).is_finite()));
    Ok(SympPath { times: grid.to_vec(), matrices, tag: None, segments })
}

/// Same as [`flow`] with a piecewise-constant Hamiltonian given per interval.
pub fn flow_piecewise(k_per_interval: &[Mat], grid: &[f64]) -> Result<SympPath> {
    validate_grid(grid)?;
    if k_per_interval.len() + 1 != grid.len() {
        return Err(Error::GridMismatch("need one Hamiltonian per interval".into()));
    }
    let n = crate::linalg::check_square_even(&k_per_interval[0])?;
    let j = j_matrix(n);
    let segments = k_per_interval.iter().map(|k| &j * sym(k)).collect();
    Ok(SympPath::from_segments(grid.to_vec(), segments, SympMatrix::identity(n)))
}

pub fn harmonic_path(omega: f64, grid: &[f64]) -> Result<SympPath> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega = {omega} must be positive")));
    }
    SympPath::tagged(GeneratorTag::Harmonic { omega }, grid)
}

pub fn one_parameter_group(x: &Mat, grid: &[f64]) -> Result<SympPath> {
    check_sp(x)?;
    SympPath::tagged(GeneratorTag::Exponential { x: project_sp(x) }, grid)
}

pub fn normal_mode_path(omegas: &[f64], r: &SympMatrix, grid: &[f64]) -> Result<SympPath> {
    if omegas.len() != r.n() {
        return Err(Error::DimensionMismatch { expected: r.n(), got: omegas.len() });
    }
    if omegas.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidArgument("normal-mode frequencies must be positive".into()));
    }
    SympPath::tagged(GeneratorTag::NormalModes { omegas: omegas.to_vec(), r: r.clone() }, grid)
}

/// Symplectic path together with a displacement path and a phase path,
/// representing `T̂(z_t, γ_t) Ŝ_t`.
#[derive(Debug, Clone)]
pub struct AffinePath {
    pub base: SympPath,
    pub z_t: Vec<Vector>,
    pub gamma_t: Vec<f64>,
}

pub fn affine_extend(base: SympPath, z_t: Vec<Vector>, gamma_t: Vec<f64>) -> Result<AffinePath> {
    if z_t.len() != base.len() || gamma_t.len() != base.len() {
        return Err(Error::GridMismatch(format!(
            "base has {} samples, z_t {}, gamma_t {}",
            base.len(),
            z_t.len(),
            gamma_t.len()
        )));
    }
    if let Some(z) = z_t.iter().find(|z| z.len() != 2 * base.n()) {
        return Err(Error::DimensionMismatch { expected: 2 * base.n(), got: z.len() });
    }
    Ok(AffinePath { base, z_t, gamma_t })
}

impl AffinePath {
    /// Classical flow `z(t_i) = S_i (z(0) − z_0) + z_i`.
    pub fn classical_flow(&self, i: usize, z_init: &Vector) -> Vector {
        self.base.matrices()[i].matrix() * (z_init - &self.z_t[0]) + &self.z_t[i]
    }

    /// Affine isotopy of `H = ½Kz·z + ℓ·z` for a path with constant invertible
    /// Hamiltonian matrix K.
    ///
    /// With `z_c = −K⁻¹ℓ` the flow is `z_t = (I − S_t) z_c` and
    /// `γ_t = ½K z_c·z_c t − ½σ(z_c, S_t z_c)`.
    pub fn linear_drive(base: SympPath, ell: &Vector) -> Result<AffinePath> {
        let k = base
            .analytic_hamiltonian()
            .ok_or_else(|| Error::InvalidArgument("linear drive needs a constant Hamiltonian".into()))?;
        if ell.len() != k.nrows() {
            return Err(Error::DimensionMismatch { expected: k.nrows(), got: ell.len() });
        }
        let k_inv = k.clone().try_inverse().ok_or_else(|| Error::InvalidArgument("Hamiltonian matrix is singular".into()))?;
        let zc = -(k_inv * ell);
        let energy = 0.5 * (&k * &zc).dot(&zc);
        let mut z_t = Vec::with_capacity(base.len());
        let mut gamma_t = Vec::with_capacity(base.len());
        for (t, s) in base.times().iter().zip(base.matrices()) {
            let szc = s.apply(&zc);
            z_t.push(&zc - &szc);
            gamma_t.push(energy * t - 0.5 * sigma(&zc, &szc));
        }
        z_t[0].fill(0.0);
        gamma_t[0] = 0.0;
        affine_extend(base, z_t, gamma_t)
    }
}
