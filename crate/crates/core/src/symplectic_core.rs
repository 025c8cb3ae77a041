//! Linear symplectic algebra: form checks, inverses, Cayley transforms,
//! generating functions, Williamson normal forms and Hamiltonian extraction.

use crate::error::{Error, Result};
use crate::isotopy::SympPath;
use crate::linalg::{
    asymmetry, blocks, check_square_even, eigh, from_blocks, is_positive_definite, j_matrix, max_abs, signature,
    spd_sqrt, sym, Mat, Vector,
};

pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Relative floor for |det(S − I)| below which S counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Relative floor for |det B| below which S is not free.
pub const FREE_TOL: f64 = 1e-9;
const WILLIAMSON_GAP: f64 = 1e-8;

/// The standard symplectic matrix `J = [[0, I], [-I, 0]]`.
pub fn standard_form(n: usize) -> Result<Mat> {
    if n == 0 {
        return Err(Error::ZeroModes);
    }
    Ok(j_matrix(n))
}

/// `‖SᵀJS − J‖_max`.
pub fn symplectic_defect(s: &Mat) -> f64 {
    let j = j_matrix(s.nrows() / 2);
    max_abs(&(s.transpose() * &j * s - j))
}

pub fn is_symplectic(s: &Mat, tol: f64) -> Result<bool> {
    check_square_even(s)?;
    Ok(symplectic_defect(s) <= tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SympMatrix {
    m: Mat,
    n: usize,
}

impl SympMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        Self::with_tol(m, SYMPLECTIC_TOL)
    }

    pub fn with_tol(m: Mat, tol: f64) -> Result<Self> {
        let n = check_square_even(&m)?;
        let defect = symplectic_defect(&m);
        if defect > tol * max_abs(&m).max(1.0).powi(2) || !defect.is_finite() {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(SympMatrix { m, n })
    }

    /// Wraps a matrix known to be symplectic by construction.
    pub(crate) fn trusted(m: Mat) -> Self {
        let n = m.nrows() / 2;
        SympMatrix { m, n }
    }

    pub fn identity(n: usize) -> Self {
        Self::trusted(Mat::identity(2 * n, 2 * n))
    }

    pub fn rotation(n: usize, theta: f64) -> Self {
        Self::trusted(crate::linalg::rotation(n, theta))
    }

    pub fn mode_rotation(angles: &[f64]) -> Self {
        Self::trusted(crate::linalg::mode_rotation(angles))
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn blocks(&self) -> (Mat, Mat, Mat, Mat) {
        blocks(&self.m)
    }

    pub fn inverse(&self) -> SympMatrix {
        let (a, b, c, d) = self.blocks();
        Self::trusted(from_blocks(&d.transpose(), &(-b.transpose()), &(-c.transpose()), &a.transpose()))
    }

    pub fn transpose(&self) -> SympMatrix {
        Self::trusted(self.m.transpose())
    }

    pub fn compose(&self, other: &SympMatrix) -> SympMatrix {
        Self::trusted(&self.m * &other.m)
    }

    /// `R⁻¹ S R`.
    pub fn conjugate_by(&self, r: &SympMatrix) -> SympMatrix {
        Self::trusted(r.inverse().matrix() * &self.m * r.matrix())
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }

    pub fn det_minus_identity(&self) -> f64 {
        (&self.m - Mat::identity(self.dim(), self.dim())).determinant()
    }

    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.m)
    }

    /// Floor for |det(S − I)|, scaled by `∏ max(|λ|, 1)` over the spectrum so
    /// that it is unchanged by conjugation.
    pub fn degeneracy_floor(&self) -> f64 {
        let scale: f64 = self.m.complex_eigenvalues().iter().map(|l| l.norm().max(1.0)).product();
        DEGENERACY_TOL * scale
    }

    /// True when det(S − I) is numerically zero.
    pub fn is_degenerate(&self) -> bool {
        self.det_minus_identity().abs() < self.degeneracy_floor()
    }

    pub fn det_b(&self) -> f64 {
        self.blocks().1.determinant()
    }

    pub fn is_free(&self) -> bool {
        self.det_b().abs() >= FREE_TOL * max_abs(&self.m).max(1.0).powi(self.n as i32)
    }

    pub fn apply(&self, z: &Vector) -> Vector {
        &self.m * z
    }
}

pub fn symplectic_inverse(s: &SympMatrix) -> SympMatrix {
    s.inverse()
}

/// Symmetric matrix `M(S) = ½J(S+I)(S−I)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyMatrix {
    m: Mat,
}

impl CayleyMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        check_square_even(&m)?;
        let a = asymmetry(&m);
        if a > 1e-12 * max_abs(&m).max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: a });
        }
        Ok(CayleyMatrix { m: sym(&m) })
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    pub fn signature(&self) -> Result<i64> {
        signature(&self.m)
    }

    /// `M(Sᵀ) = J M(S) J`.
    pub fn transposed_form(&self) -> Mat {
        let j = j_matrix(self.m.nrows() / 2);
        sym(&(&j * &self.m * &j))
    }
}

fn ensure_nondegenerate(s: &SympMatrix) -> Result<f64> {
    let det = s.det_minus_identity();
    if det.abs() < s.degeneracy_floor() {
        return Err(Error::DegenerateEndpoint { det });
    }
    Ok(det)
}

pub fn cayley(s: &SympMatrix) -> Result<CayleyMatrix> {
    ensure_nondegenerate(s)?;
    let dim = s.dim();
    let id = Mat::identity(dim, dim);
    let inv = (s.matrix() - &id)
        .try_inverse()
        .ok_or(Error::DegenerateEndpoint { det: 0.0 })?;
    let j = j_matrix(s.n());
    Ok(CayleyMatrix { m: sym(&((j * (s.matrix() + &id) * inv) * 0.5)) })
}

/// `M(S) + M(S′)`, which is invertible when SS′ is non-degenerate.
pub fn cayley_sum(s: &SympMatrix, s2: &SympMatrix) -> Result<CayleyMatrix> {
    if s.n() != s2.n() {
        return Err(Error::DimensionMismatch { expected: s.dim(), got: s2.dim() });
    }
    let prod = s.compose(s2);
    let det = prod.det_minus_identity();
    if det.abs() < prod.degeneracy_floor() {
        return Err(Error::DegenerateProduct { det });
    }
    let a = cayley(s)?;
    let b = cayley(s2)?;
    Ok(CayleyMatrix { m: a.m + b.m })
}

/// Quadratic form `W(x, x′) = ½Px² − Lx·x′ + ½Qx′²` with a Maslov index.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingFunction {
    p: Mat,
    q: Mat,
    l: Mat,
    m: u8,
}

impl GeneratingFunction {
    pub fn new(p: Mat, q: Mat, l: Mat, m: i64) -> Result<Self> {
        let n = p.nrows();
        for x in [&p, &q, &l] {
            if x.nrows() != n || x.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: x.nrows() });
            }
        }
        if n == 0 {
            return Err(Error::ZeroModes);
        }
        for x in [&p, &q] {
            let a = asymmetry(x);
            if a > 1e-10 * max_abs(x).max(1.0) {
                return Err(Error::NotSymmetric { asymmetry: a });
            }
        }
        let det_l = l.determinant();
        if det_l.abs() < 1e-14 * max_abs(&l).max(1.0).powi(n as i32) {
            return Err(Error::SingularL);
        }
        let m = m.rem_euclid(4);
        if (m % 2 == 0) != (det_l > 0.0) {
            return Err(Error::MaslovParity { m, det_l_sign: if det_l > 0.0 { 1 } else { -1 } });
        }
        Ok(GeneratingFunction { p: sym(&p), q: sym(&q), l, m: m as u8 })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn p(&self) -> &Mat {
        &self.p
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn l(&self) -> &Mat {
        &self.l
    }

    /// Maslov index reduced to {0, 1, 2, 3}.
    pub fn maslov(&self) -> u8 {
        self.m
    }

    /// Hessian of x ↦ W(x, x): `P − L − Lᵀ + Q`.
    pub fn w_xx(&self) -> Mat {
        sym(&(&self.p - &self.l - self.l.transpose() + &self.q))
    }

    /// Generating function of the inverse matrix with index `n − m`.
    pub fn inverse(&self) -> Result<GeneratingFunction> {
        GeneratingFunction::new(-&self.q, -&self.p, -self.l.transpose(), self.n() as i64 - self.m as i64)
    }
}

pub fn matrix_from_generating_function(w: &GeneratingFunction) -> Result<SympMatrix> {
    let l_inv = w.l.clone().try_inverse().ok_or(Error::SingularL)?;
    let a = &l_inv * &w.q;
    let c = &w.p * &l_inv * &w.q - w.l.transpose();
    let d = &w.p * &l_inv;
    Ok(SympMatrix::trusted(from_blocks(&a, &l_inv, &c, &d)))
}

pub fn generating_function_from_matrix(s: &SympMatrix, m_choice: i64) -> Result<GeneratingFunction> {
    if !s.is_free() {
        return Err(Error::NotFree { det_b: s.det_b() });
    }
    let (a, b, _, d) = s.blocks();
    let l = b.try_inverse().ok_or(Error::NotFree { det_b: 0.0 })?;
    let q = &l * a;
    let p = d * &l;
    GeneratingFunction::new(sym(&p), sym(&q), l, m_choice)
}

/// `K = RᵀDR` with `D = diag(Ω, Ω)` and ω ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsonForm {
    pub r: SympMatrix,
    pub omegas: Vec<f64>,
}

impl WilliamsonForm {
    pub fn diagonal(&self) -> Mat {
        let n = self.omegas.len();
        let mut d = Mat::zeros(2 * n, 2 * n);
        for (j, &w) in self.omegas.iter().enumerate() {
            d[(j, j)] = w;
            d[(n + j, n + j)] = w;
        }
        d
    }

    pub fn reconstruct(&self) -> Mat {
        self.r.matrix().transpose() * self.diagonal() * self.r.matrix()
    }
}

fn first_significant_negative(v: &Vector) -> bool {
    v.iter().find(|x| x.abs() > 1e-8).is_some_and(|x| *x < 0.0)
}

pub fn williamson(k: &Mat) -> Result<WilliamsonForm> {
    let n = check_square_even(k)?;
    let a = asymmetry(k);
    if a > 1e-10 * max_abs(k).max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: a });
    }
    let k = sym(k);
    if !is_positive_definite(&k) {
        return Err(Error::NotPositiveDefinite);
    }
    let k_half = spd_sqrt(&k)?;
    let j = j_matrix(n);
    let anti = &k_half * &j * &k_half;
    let (values, vectors) = eigh(&(anti.transpose() * &anti));

    // Group eigenvalues of AᵀA (each ω² appears twice) by relative gap.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..values.len() {
        let w = values[i].max(0.0).sqrt();
        match groups.last_mut() {
            Some(g) if {
                let w0 = values[g[g.len() - 1]].max(0.0).sqrt();
                (w - w0).abs() <= WILLIAMSON_GAP * w.max(1e-300)
            } =>
            {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }

    let mut us: Vec<Vector> = Vec::with_capacity(n);
    let mut vs: Vec<Vector> = Vec::with_capacity(n);
    let mut omegas: Vec<f64> = Vec::with_capacity(n);
    for g in &groups {
        if g.len() % 2 == 1 {
            return Err(Error::Numerical("symplectic eigenvalues did not pair".into()));
        }
        let omega = (g.iter().map(|&i| values[i].max(0.0)).sum::<f64>() / g.len() as f64).sqrt();
        let mut taken = 0;
        for &i in g {
            if taken == g.len() / 2 {
                break;
            }
            let mut u = vectors.column(i).into_owned();
            for _ in 0..2 {
                for w in us.iter().chain(vs.iter()) {
                    u -= w * w.dot(&u);
                }
            }
            let norm = u.norm();
            if norm < 1e-6 {
                continue;
            }
            u /= norm;
            if first_significant_negative(&u) {
                u = -u;
            }
            let v = -(&anti * &u) / omega;
            us.push(u);
            vs.push(v);
            omegas.push(omega);
            taken += 1;
        }
        if taken != g.len() / 2 {
            return Err(Error::Numerical("could not build a symplectic basis".into()));
        }
    }

    let mut o = Mat::zeros(2 * n, 2 * n);
    for jdx in 0..n {
        o.set_column(jdx, &us[jdx]);
        o.set_column(n + jdx, &vs[jdx]);
    }
    let d_inv_half = {
        let mut d = Mat::zeros(2 * n, 2 * n);
        for (jdx, &w) in omegas.iter().enumerate() {
            d[(jdx, jdx)] = 1.0 / w.sqrt();
            d[(n + jdx, n + jdx)] = 1.0 / w.sqrt();
        }
        d
    };
    let r = d_inv_half * o.transpose() * k_half;
    Ok(WilliamsonForm { r: SympMatrix::trusted(r), omegas })
}

pub fn symplectic_eigenvalues(k: &Mat) -> Result<Vec<f64>> {
    Ok(williamson(k)?.omegas)
}

/// `K = sym(−J Ṡ S⁻¹)`.
pub fn hamiltonian_from_derivative(s: &Mat, s_dot: &Mat) -> Mat {
    let n = s.nrows() / 2;
    let j = j_matrix(n);
    let s_inv = -(&j * s.transpose() * &j);
    sym(&(-(j * s_dot * s_inv)))
}

/// Same Hamiltonian matrix assembled from the block derivatives of S.
pub fn hamiltonian_from_blocks(s: &Mat, s_dot: &Mat) -> Mat {
    let (a, b, c, d) = blocks(s);
    let (ad, bd, cd, dd) = blocks(s_dot);
    let kxx = &dd * c.transpose() - &cd * d.transpose();
    let kxp = &cd * b.transpose() - &dd * a.transpose();
    let kpp = &bd * a.transpose() - &ad * b.transpose();
    sym(&from_blocks(&kxx, &kxp, &kxp.transpose(), &kpp))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSample {
    pub k: Mat,
    /// True when a one-sided difference was used at a grid boundary.
    pub one_sided: bool,
}

/// Hamiltonian matrix of the path at `t`: exact for closed-form paths,
/// otherwise second-order finite differences on the sample grid.
pub fn hamiltonian_from_path(path: &SympPath, t: f64) -> Result<HamiltonianSample> {
    if let Some(k) = path.analytic_hamiltonian() {
        let (t0, t1) = (path.times()[0], path.end_time());
        if t < t0 || t > t1 {
            return Err(Error::InvalidArgument(format!("t = {t} outside [{t0}, {t1}]")));
        }
        return Ok(HamiltonianSample { k, one_sided: false });
    }
    let times = path.times();
    let scale = path.end_time().abs().max(1.0);
    let i = times
        .iter()
        .position(|&x| (x - t).abs() <= 1e-12 * scale)
        .ok_or_else(|| Error::InvalidArgument(format!("t = {t} is not a grid point")))?;
    let s = |k: usize| path.matrices()[k].matrix();
    let last = times.len() - 1;
    let (s_dot, one_sided) = if i > 0 && i < last {
        let h1 = times[i] - times[i - 1];
        let h2 = times[i + 1] - times[i];
        let d = s(i - 1) * (-h2 / (h1 * (h1 + h2))) + s(i) * ((h2 - h1) / (h1 * h2)) + s(i + 1) * (h1 / (h2 * (h1 + h2)));
        (d, false)
    } else if last == 1 {
        ((s(1) - s(0)) / (times[1] - times[0]), true)
    } else if i == 0 {
        let h1 = times[1] - times[0];
        let h2 = times[2] - times[1];
        let d = s(0) * (-(2.0 * h1 + h2) / (h1 * (h1 + h2))) + s(1) * ((h1 + h2) / (h1 * h2)) + s(2) * (-h1 / (h2 * (h1 + h2)));
        (d, true)
    } else {
        let a = times[last] - times[last - 1];
        let b = times[last - 1] - times[last - 2];
        let d = s(last) * ((2.0 * a + b) / (a * (a + b))) + s(last - 1) * (-(a + b) / (a * b)) + s(last - 2) * (a / (b * (a + b)));
        (d, true)
    };
    Ok(HamiltonianSample { k: hamiltonian_from_derivative(s(i), &s_dot), one_sided })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotopy::{harmonic_path, one_parameter_group, time_grid};
    use crate::sampling::{random_spd, random_symplectic};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rot(theta: f64) -> SympMatrix {
        SympMatrix::rotation(1, theta)
    }

    #[test]
    fn standard_form_examples() {
        assert_eq!(standard_form(1).unwrap(), Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let j = standard_form(3).unwrap();
        assert_eq!(&j * &j, -Mat::identity(6, 6));
        assert_eq!(standard_form(0), Err(Error::ZeroModes));
    }

    #[test]
    fn symplectic_checks() {
        assert!(is_symplectic(rot(0.7).matrix(), 1e-10).unwrap());
        assert!(is_symplectic(&Mat::from_diagonal(&Vector::from_vec(vec![2.0, 0.5])), 1e-10).unwrap());
        assert!(!is_symplectic(&Mat::from_diagonal(&Vector::from_vec(vec![2.0, 2.0])), 1e-10).unwrap());
        assert_eq!(is_symplectic(&Mat::identity(3, 3), 1e-10), Err(Error::OddDimension(3)));
    }

    #[test]
    fn inverse_examples() {
        let j = SympMatrix::new(standard_form(1).unwrap()).unwrap();
        assert_eq!(symplectic_inverse(&j).matrix(), &(-standard_form(1).unwrap()));
        assert_abs_diff_eq!(rot(0.4).inverse().matrix(), rot(-0.4).matrix(), epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s = random_symplectic(&mut rng, 2, 1.0);
            let lu = s.matrix().clone().try_inverse().unwrap();
            assert_abs_diff_eq!(s.inverse().matrix(), &lu, epsilon = 1e-10 * max_abs(&lu));
            assert!(max_abs(&(s.matrix() * s.inverse().matrix() - Mat::identity(4, 4))) <= 1e-12 * max_abs(s.matrix()).powi(2));
        }
    }

    #[test]
    fn cayley_examples() {
        let m = cayley(&SympMatrix::new(-Mat::identity(2, 2)).unwrap()).unwrap();
        assert_abs_diff_eq!(m.matrix(), &Mat::zeros(2, 2), epsilon = 1e-15);
        let m = cayley(&rot(PI / 2.0)).unwrap();
        assert_abs_diff_eq!(m.matrix(), &(Mat::identity(2, 2) * 0.5), epsilon = 1e-15);
        assert!(matches!(cayley(&SympMatrix::identity(1)), Err(Error::DegenerateEndpoint { .. })));
    }

    #[test]
    fn cayley_conjugation_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let s = random_symplectic(&mut rng, 2, 0.4);
            let r = random_symplectic(&mut rng, 2, 0.4);
            if crate::linalg::smallest_singular_value(&(s.matrix() - Mat::identity(4, 4))) < 0.05 {
                continue;
            }
            let m = cayley(&s).unwrap();
            let lhs = r.matrix().transpose() * m.matrix() * r.matrix();
            let rhs = cayley(&s.conjugate_by(&r)).unwrap();
            let err = max_abs(&(&lhs - rhs.matrix())) / max_abs(&lhs).max(1.0);
            assert!(err <= 1e-10, "conjugation error {err}");
            let minv = cayley(&s.inverse()).unwrap();
            assert!(max_abs(&(minv.matrix() + m.matrix())) <= 1e-10 * max_abs(m.matrix()).max(1.0));
            let mt = cayley(&s.transpose()).unwrap();
            assert!(max_abs(&(mt.matrix() - m.transposed_form())) <= 1e-10 * max_abs(m.matrix()).max(1.0));
        }
    }

    #[test]
    fn cayley_sum_examples() {
        let s = rot(PI / 3.0);
        let s2 = rot(PI / 4.0);
        let m = cayley_sum(&s, &s2).unwrap();
        let id = Mat::identity(2, 2);
        let rhs = standard_form(1).unwrap()
            * (s.matrix() - &id).try_inverse().unwrap()
            * (s.matrix() * s2.matrix() - &id)
            * (s2.matrix() - &id).try_inverse().unwrap();
        assert_abs_diff_eq!(m.matrix(), &rhs, epsilon = 1e-12);
        assert!(matches!(cayley_sum(&s, &s.inverse()), Err(Error::DegenerateProduct { .. })));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let a = random_symplectic(&mut rng, 2, 1.0);
            let b = random_symplectic(&mut rng, 2, 1.0);
            if let Ok(m) = cayley_sum(&a, &b) {
                if let Ok(sig) = m.signature() {
                    assert_eq!(sig % 2, 0);
                }
            }
        }
    }

    #[test]
    fn generating_function_examples() {
        let j = standard_form(1).unwrap();
        let w = GeneratingFunction::new(Mat::zeros(1, 1), Mat::zeros(1, 1), Mat::identity(1, 1), 0).unwrap();
        assert_abs_diff_eq!(matrix_from_generating_function(&w).unwrap().matrix(), &j, epsilon = 1e-15);

        let t = PI / 2.0;
        let cot = t.cos() / t.sin();
        let w = GeneratingFunction::new(
            Mat::from_element(1, 1, cot),
            Mat::from_element(1, 1, cot),
            Mat::from_element(1, 1, 1.0 / t.sin()),
            0,
        )
        .unwrap();
        assert_abs_diff_eq!(matrix_from_generating_function(&w).unwrap().matrix(), rot(t).matrix(), epsilon = 1e-15);

        let back = generating_function_from_matrix(&SympMatrix::new(j).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(back.p()[(0, 0)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(back.q()[(0, 0)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(back.l()[(0, 0)], 1.0, epsilon = 1e-15);

        let t = PI / 3.0;
        let w = generating_function_from_matrix(&rot(t), 0).unwrap();
        assert_abs_diff_eq!(w.p()[(0, 0)], 1.0 / t.tan(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.q()[(0, 0)], 1.0 / t.tan(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.l()[(0, 0)], 1.0 / t.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.w_xx()[(0, 0)], -2.0 * (PI / 6.0).tan(), epsilon = 1e-14);

        assert!(matches!(generating_function_from_matrix(&SympMatrix::identity(1), 0), Err(Error::NotFree { .. })));
        assert!(matches!(generating_function_from_matrix(&rot(t), 1), Err(Error::MaslovParity { .. })));
    }

    #[test]
    fn generating_function_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let s = random_symplectic(&mut rng, 2, 0.4);
            if crate::linalg::smallest_singular_value(&s.blocks().1) < 0.05 {
                continue;
            }
            let m = if s.det_b() > 0.0 { 0 } else { 1 };
            let w = generating_function_from_matrix(&s, m).unwrap();
            let back = matrix_from_generating_function(&w).unwrap();
            let err = max_abs(&(back.matrix() - s.matrix())) / max_abs(s.matrix());
            assert!(err <= 1e-12, "round trip error {err}");
            let inv = w.inverse().unwrap();
            let back_inv = matrix_from_generating_function(&inv).unwrap();
            assert!(max_abs(&(back_inv.matrix() - s.inverse().matrix())) <= 1e-10 * max_abs(s.matrix()));
        }
    }

    #[test]
    fn williamson_examples() {
        let w = williamson(&(Mat::identity(2, 2) * 1.7)).unwrap();
        assert_abs_diff_eq!(w.omegas[0], 1.7, epsilon = 1e-14);
        assert_abs_diff_eq!(w.reconstruct(), Mat::identity(2, 2) * 1.7, epsilon = 1e-14);

        let k = Mat::from_diagonal(&Vector::from_vec(vec![3.0, 0.25]));
        let w = williamson(&k).unwrap();
        assert_abs_diff_eq!(w.omegas[0], (0.75f64).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.reconstruct(), k, epsilon = 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let k = random_spd(&mut rng, 2, 2.0);
            let w = williamson(&k).unwrap();
            assert!(w.r.defect() <= 1e-10);
            assert!(max_abs(&(w.reconstruct() - &k)) <= 1e-10 * max_abs(&k));
            assert!(w.omegas.windows(2).all(|p| p[0] <= p[1]));
        }
        assert_eq!(williamson(&Mat::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]))), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn williamson_degenerate_group() {
        // Equal symplectic eigenvalues in two modes, disguised by a symplectic change of basis.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_symplectic(&mut rng, 2, 0.7);
        let k = s.matrix().transpose() * s.matrix() * 2.0;
        let w = williamson(&k).unwrap();
        assert_abs_diff_eq!(w.omegas[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(w.omegas[1], 2.0, epsilon = 1e-8);
        assert!(w.r.defect() <= 1e-10);
        assert!(max_abs(&(w.reconstruct() - &k)) <= 1e-10 * max_abs(&k));
    }

    #[test]
    fn williamson_invariant_under_congruence() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let k = random_spd(&mut rng, 2, 1.0);
            let r = random_symplectic(&mut rng, 2, 0.6);
            let k2 = sym(&(r.matrix().transpose() * &k * r.matrix()));
            let a = symplectic_eigenvalues(&k).unwrap();
            let b = symplectic_eigenvalues(&k2).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-9 * x.max(1.0));
            }
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let grid = time_grid(2.0, 2000).unwrap();
        let samples: Vec<Mat> = grid.iter().map(|&t| rot(1.3 * t).into_matrix()).collect();
        let path = crate::isotopy::SympPath::from_samples(grid.clone(), samples).unwrap();
        let h = hamiltonian_from_path(&path, grid[700]).unwrap();
        assert!(!h.one_sided);
        assert_abs_diff_eq!(h.k, Mat::identity(2, 2) * 1.3, epsilon = 1e-6);
        let h0 = hamiltonian_from_path(&path, 0.0).unwrap();
        assert!(h0.one_sided);
        assert_abs_diff_eq!(h0.k, Mat::identity(2, 2) * 1.3, epsilon = 1e-5);

        let x = Mat::from_row_slice(2, 2, &[0.3, 1.0, -0.5, -0.3]);
        let path = one_parameter_group(&x, &grid).unwrap();
        let h = hamiltonian_from_path(&path, 0.5).unwrap();
        assert_abs_diff_eq!(h.k, sym(&(-(standard_form(1).unwrap() * &x))), epsilon = 1e-14);

        let exact = harmonic_path(2.0, &grid).unwrap();
        assert_abs_diff_eq!(hamiltonian_from_path(&exact, 1.0).unwrap().k, Mat::identity(2, 2) * 2.0, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_block_form_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base = random_symplectic(&mut rng, 2, 0.5);
        let x1 = crate::sampling::random_hamiltonian_generator(&mut rng, 2, 1.0);
        let x2 = crate::sampling::random_hamiltonian_generator(&mut rng, 2, 1.0);
        // S(t) = exp(t X1) B exp(t² X2)
        let t = 0.37;
        let e1 = (&x1 * t).exp();
        let e2 = (&x2 * (t * t)).exp();
        let s = &e1 * base.matrix() * &e2;
        let s_dot = &x1 * &s + &e1 * base.matrix() * &x2 * (2.0 * t) * &e2;
        let k1 = hamiltonian_from_derivative(&s, &s_dot);
        let k2 = hamiltonian_from_blocks(&s, &s_dot);
        assert!(max_abs(&(&k1 - &k2)) <= 1e-8 * max_abs(&k1));
    }
}
