//! Small dense linear-algebra helpers shared by the symplectic modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// `[[0, I], [-I, 0]]` without argument checks.
pub(crate) fn j_matrix(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// Symmetric part `(A + Aᵀ)/2`.
pub fn sym(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn asymmetry(a: &Mat) -> f64 {
    max_abs(&(a - a.transpose()))
}

/// Symplectic form σ(z, w) = Jz·w = p·x′ − p′·x.
pub fn sigma(z: &Vector, w: &Vector) -> f64 {
    let n = z.len() / 2;
    (0..n).map(|i| z[n + i] * w[i] - w[n + i] * z[i]).sum()
}

pub(crate) fn check_square_even(a: &Mat) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if a.nrows() % 2 == 1 {
        return Err(Error::OddDimension(a.nrows()));
    }
    if a.nrows() == 0 {
        return Err(Error::ZeroModes);
    }
    Ok(a.nrows() / 2)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn eigh(a: &Mat) -> (Vec<f64>, Mat) {
    let eig = SymmetricEigen::new(sym(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Mat::zeros(a.nrows(), a.ncols());
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Numbers of positive and negative eigenvalues; errors if an eigenvalue is
/// below `rel_tol` times the largest magnitude.
pub fn inertia(a: &Mat, rel_tol: f64) -> Result<(usize, usize)> {
    let (values, _) = eigh(a);
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = rel_tol * scale.max(f64::MIN_POSITIVE);
    let mut pos = 0;
    let mut neg = 0;
    for v in values {
        if v.abs() <= floor {
            return Err(Error::SingularForm { value: v.abs() });
        }
        if v > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    Ok((pos, neg))
}

pub const FORM_TOL: f64 = 1e-12;

/// Signature (#positive − #negative) of a nonsingular symmetric matrix.
pub fn signature(a: &Mat) -> Result<i64> {
    let (p, n) = inertia(a, FORM_TOL)?;
    Ok(p as i64 - n as i64)
}

/// Number of negative eigenvalues of a nonsingular symmetric matrix.
pub fn inert(a: &Mat) -> Result<usize> {
    Ok(inertia(a, FORM_TOL)?.1)
}

pub fn is_positive_definite(a: &Mat) -> bool {
    a.clone().cholesky().is_some()
}

/// Principal square root of a symmetric positive-definite matrix.
pub fn spd_sqrt(a: &Mat) -> Result<Mat> {
    let (values, vectors) = eigh(a);
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let d = Mat::from_diagonal(&Vector::from_iterator(values.len(), values.iter().map(|v| v.sqrt())));
    Ok(sym(&(&vectors * d * vectors.transpose())))
}

/// Logarithm of a symmetric positive-definite matrix.
pub fn spd_log(a: &Mat) -> Result<Mat> {
    let (values, vectors) = eigh(a);
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let d = Mat::from_diagonal(&Vector::from_iterator(values.len(), values.iter().map(|v| v.ln())));
    Ok(sym(&(&vectors * d * vectors.transpose())))
}

pub fn singular_values(a: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

pub fn smallest_singular_value(a: &Mat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis (as columns) of the right singular vectors whose singular
/// values are at most `tol`.
pub fn null_space(a: &Mat, tol: f64) -> Mat {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        Mat::zeros(a.ncols(), 0)
    } else {
        Mat::from_columns(&cols)
    }
}

fn sqrtm_denman_beavers(a: &Mat) -> Result<Mat> {
    let mut y = a.clone();
    let mut z = Mat::identity(a.nrows(), a.ncols());
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse().ok_or_else(|| Error::Numerical("singular iterate in square root".into()))?;
        let z_inv = z.clone().try_inverse().ok_or_else(|| Error::Numerical("singular iterate in square root".into()))?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let change = max_abs(&(&y_next - &y)) / max_abs(&y_next).max(1.0);
        y = y_next;
        z = z_next;
        if change < 1e-15 {
            return Ok(y);
        }
    }
    Ok(y)
}

/// Principal real logarithm by inverse scaling and squaring.  Requires no
/// eigenvalues on the closed negative real axis.
pub fn logm(a: &Mat) -> Result<Mat> {
    let dim = a.nrows();
    let id = Mat::identity(dim, dim);
    let mut x = a.clone();
    let mut k = 0;
    while max_abs(&(&x - &id)) > 0.05 {
        x = sqrtm_denman_beavers(&x)?;
        k += 1;
        if k > 60 {
            return Err(Error::Numerical("matrix logarithm did not converge".into()));
        }
    }
    let e = &x - &id;
    let mut term = e.clone();
    let mut sum = e.clone();
    for j in 2..60 {
        term = &term * &e;
        let add = &term * (if j % 2 == 0 { -1.0 } else { 1.0 } / j as f64);
        sum += &add;
        if max_abs(&add) < 1e-18 {
            break;
        }
    }
    Ok(sum * 2f64.powi(k))
}

pub fn to_complex(a: &Mat) -> CMat {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn to_complex_vec(a: &Vector) -> CVector {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Top-left, top-right, bottom-left and bottom-right n×n blocks.
pub fn blocks(s: &Mat) -> (Mat, Mat, Mat, Mat) {
    let n = s.nrows() / 2;
    (
        s.view((0, 0), (n, n)).into_owned(),
        s.view((0, n), (n, n)).into_owned(),
        s.view((n, 0), (n, n)).into_owned(),
        s.view((n, n), (n, n)).into_owned(),
    )
}

pub fn from_blocks(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
    let n = a.nrows();
    let mut s = Mat::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(a);
    s.view_mut((0, n), (n, n)).copy_from(b);
    s.view_mut((n, 0), (n, n)).copy_from(c);
    s.view_mut((n, n), (n, n)).copy_from(d);
    s
}

/// Mode-wise rotation `[[cos θ I, sin θ I], [−sin θ I, cos θ I]]`.
pub fn rotation(n: usize, theta: f64) -> Mat {
    let c = Mat::identity(n, n) * theta.cos();
    let s = Mat::identity(n, n) * theta.sin();
    from_blocks(&c, &s, &(-&s), &c)
}

/// Block rotation with one angle per mode.
pub fn mode_rotation(angles: &[f64]) -> Mat {
    let n = angles.len();
    let c = Mat::from_diagonal(&Vector::from_iterator(n, angles.iter().map(|a| a.cos())));
    let s = Mat::from_diagonal(&Vector::from_iterator(n, angles.iter().map(|a| a.sin())));
    from_blocks(&c, &s, &(-&s), &c)
}
