//! Conley–Zehnder index of symplectic isotopies and Maslov-index tracking of
//! their generating functions.

use crate::error::{Error, Result};
use crate::isotopy::SympPath;
use crate::linalg::{blocks, eigh, inert, max_abs, null_space, signature, smallest_singular_value, Mat};
use crate::symplectic_core::{cayley_sum, matrix_from_generating_function, GeneratingFunction, SympMatrix};

/// Affine map from the raw crossing count to the reported index.  Fixed once
/// by the harmonic oscillator: ν = −(2k+1) on (2kπ, 2(k+1)π).
pub const CALIBRATION_SIGN: i64 = -1;
pub const CALIBRATION_OFFSET: i64 = 0;

const KERNEL_TOL: f64 = 1e-8;
const BISECTION_TOL: f64 = 1e-12;
const PERTURBATION: f64 = 1e-7;
const FORM_DEGENERACY: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Crossing,
    ClosedForm,
    Mod4Free,
    Mod2Argdet,
    Product,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub kernel_dim: usize,
    /// Raw signature contribution (before calibration).
    pub contribution: i64,
    /// True when the crossing form was degenerate and the contribution came
    /// from the Cayley-signature jump across `t ± δ`.
    pub perturbed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CZResult {
    pub nu: Option<i64>,
    pub nu_mod4: u8,
    pub nu_mod2: u8,
    pub route: Route,
    pub crossings: Vec<Crossing>,
}

impl CZResult {
    fn full(nu: i64, route: Route, crossings: Vec<Crossing>) -> Self {
        CZResult { nu: Some(nu), nu_mod4: nu.rem_euclid(4) as u8, nu_mod2: nu.rem_euclid(2) as u8, route, crossings }
    }
}

/// `Inert(x)`: 0 for x > 0, 1 for x < 0.
pub fn inert_scalar(x: f64) -> Result<u8> {
    if x > 0.0 {
        Ok(0)
    } else if x < 0.0 {
        Ok(1)
    } else {
        Err(Error::SingularForm { value: 0.0 })
    }
}

fn calibrate(raw: i64) -> i64 {
    CALIBRATION_SIGN * raw + CALIBRATION_OFFSET
}

/// Evaluation points: every grid interval split finely enough to resolve the
/// local rotation rate.
fn scan_points(path: &SympPath) -> Vec<f64> {
    let times = path.times();
    let mut pts = vec![times[0]];
    for (i, w) in times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        // relative speed of the sample, not the size of the generator
        let s = path.matrices()[i].matrix();
        let rate = (&path.segment_generators()[i] * s).norm() / s.norm();
        let m = ((dt * rate / 0.05).ceil() as usize).clamp(4, 20_000);
        for k in 1..=m {
            pts.push(if k == m { w[1] } else { w[0] + dt * k as f64 / m as f64 });
        }
    }
    pts
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Locates isolated zeros in (0, T] of `det(g(S_t))` where `g` extracts a
/// square matrix from the path sample.  Sign changes are bisected; touching
/// zeros are found as minima of the smallest singular value.
fn find_zeros<G: Fn(&Mat) -> Mat>(path: &SympPath, g: G) -> Result<Vec<f64>> {
    let pts = scan_points(path);
    let t_end = path.end_time();
    let vals: Vec<(f64, f64)> = pts
        .iter()
        .map(|&t| {
            let a = g(&path.eval(t));
            (a.determinant(), smallest_singular_value(&a))
        })
        .collect();
    let thresh = |t: f64| KERNEL_TOL * max_abs(&path.eval(t)).max(1.0);
    let tol = BISECTION_TOL * t_end.max(1.0);
    let mut zeros = Vec::new();

    for k in 1..pts.len() - 1 {
        let (d0, d1) = (vals[k].0, vals[k + 1].0);
        if d0 * d1 < 0.0 {
            let (mut a, mut b, mut fa) = (pts[k], pts[k + 1], d0);
            while b - a > tol {
                let m = 0.5 * (a + b);
                let fm = g(&path.eval(m)).determinant();
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            let t = 0.5 * (a + b);
            let s = smallest_singular_value(&g(&path.eval(t)));
            if s > thresh(t) {
                return Err(Error::UnresolvedCrossing { t });
            }
            zeros.push(t);
        }
    }

    for k in 1..pts.len() {
        let s = vals[k].1;
        let left_ok = s <= vals[k - 1].1;
        let right_ok = k + 1 == pts.len() || s <= vals[k + 1].1;
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = if k == 1 { 0.5 * (pts[0] + pts[1]) } else { pts[k - 1] };
        let hi = if k + 1 == pts.len() { pts[k] } else { pts[k + 1] };
        let (t, smin) = golden_min(|t| smallest_singular_value(&g(&path.eval(t))), lo, hi, tol);
        if smin <= thresh(t) {
            zeros.push(t);
        } else if k + 1 == pts.len() && vals[k].1 <= thresh(pts[k]) {
            zeros.push(pts[k]);
        }
    }

    zeros.sort_by(f64::total_cmp);
    let merge = 1e-9 * t_end.max(1.0);
    let mut out: Vec<f64> = Vec::new();
    for z in zeros {
        match out.last() {
            Some(&prev) if z - prev <= merge => {}
            _ => out.push(z),
        }
    }
    Ok(out)
}

/// Raw crossing data of a path: the initial half-signature and the signed
/// contributions of every interior crossing.
#[derive(Debug, Clone)]
pub struct CrossingScan {
    pub initial: i64,
    pub crossings: Vec<Crossing>,
}

impl CrossingScan {
    /// Calibrated index of the prefix path ending at `t`.
    pub fn nu_at(&self, t: f64) -> i64 {
        let raw = self.initial + self.crossings.iter().filter(|c| c.t < t).map(|c| c.contribution).sum::<i64>();
        calibrate(raw)
    }
}

fn cayley_signature_at(path: &SympPath, t: f64) -> Option<i64> {
    let s = path.eval(t);
    let dim = s.nrows();
    let id = Mat::identity(dim, dim);
    let inv = (&s - &id).try_inverse()?;
    let m = crate::linalg::sym(&(crate::linalg::j_matrix(dim / 2) * (&s + &id) * inv * 0.5));
    signature(&m).ok()
}

fn cayley_jump(path: &SympPath, t: f64) -> Result<i64> {
    let delta = PERTURBATION * path.end_time();
    if t - delta <= 0.0 || t + delta >= path.end_time() {
        return Err(Error::UnresolvedCrossing { t });
    }
    let before = cayley_signature_at(path, t - delta).ok_or(Error::UnresolvedCrossing { t })?;
    let after = cayley_signature_at(path, t + delta).ok_or(Error::UnresolvedCrossing { t })?;
    Ok((after - before) / 2)
}

fn crossing_at(path: &SympPath, t: f64) -> Result<Crossing> {
    let s = path.eval(t);
    let dim = s.nrows();
    let thresh = KERNEL_TOL * max_abs(&s).max(1.0);
    let kernel = null_space(&(&s - Mat::identity(dim, dim)), thresh);
    let k = path.hamiltonian_at(t);
    let kernel_dim = kernel.ncols();
    if kernel_dim > 0 {
        let form = kernel.transpose() * &k * &kernel;
        let (values, _) = eigh(&form);
        let floor = FORM_DEGENERACY * max_abs(&k).max(f64::MIN_POSITIVE);
        if values.iter().all(|v| v.abs() > floor) {
            let contribution = values.iter().map(|v| v.signum() as i64).sum();
            return Ok(Crossing { t, kernel_dim, contribution, perturbed: false });
        }
    }
    Ok(Crossing { t, kernel_dim, contribution: cayley_jump(path, t)?, perturbed: true })
}

pub fn crossing_scan(path: &SympPath) -> Result<CrossingScan> {
    let k0 = path.hamiltonian_at(0.0);
    let initial = match signature(&k0) {
        Ok(sig) => sig / 2,
        Err(_) => {
            let delta = PERTURBATION * path.end_time();
            cayley_signature_at(path, delta).ok_or(Error::UnresolvedCrossing { t: 0.0 })? / 2
        }
    };
    let t_end = path.end_time();
    let crossings = find_zeros(path, |s| s - Mat::identity(s.nrows(), s.ncols()))?
        .into_iter()
        .filter(|&t| t < t_end * (1.0 - 1e-12))
        // a small singular value alone is not scale invariant; confirm with det(S − I)
        .filter(|&t| SympMatrix::trusted(path.eval(t)).is_degenerate())
        .map(|t| crossing_at(path, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossingScan { initial, crossings })
}

/// Full-integer index of the whole path by signed crossing counting.
pub fn cz_crossing(path: &SympPath) -> Result<CZResult> {
    let end = path.end();
    if end.is_degenerate() {
        return Err(Error::DegenerateEndpoint { det: end.det_minus_identity() });
    }
    let scan = crossing_scan(path)?;
    let nu = scan.nu_at(path.end_time());
    Ok(CZResult::full(nu, Route::Crossing, scan.crossings))
}

/// Index of every prefix path ending at a grid sample; `None` at degenerate
/// samples.
pub fn cz_crossing_series(path: &SympPath) -> Result<Vec<Option<i64>>> {
    let scan = crossing_scan(path)?;
    Ok(path
        .times()
        .iter()
        .zip(path.matrices())
        .map(|(&t, s)| if s.is_degenerate() { None } else { Some(scan.nu_at(t)) })
        .collect())
}

pub fn cz_harmonic_closed(omega: f64, t: f64) -> Result<CZResult> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega = {omega} must be positive")));
    }
    let theta = omega * t;
    let q = theta / std::f64::consts::PI;
    if (q - q.round()).abs() <= 1e-12 * q.abs().max(1.0) {
        return Err(Error::DegenerateTime { omega_t: theta });
    }
    let k = q.floor() as i64;
    let nu = -(k + inert_scalar(-(theta / 2.0).tan())? as i64);
    Ok(CZResult::full(nu, Route::ClosedForm, Vec::new()))
}

/// `(m − Inert W_xx) mod 4` for a free, non-degenerate `S_W`.
pub fn cz_mod4_free(w: &GeneratingFunction) -> Result<u8> {
    let s = matrix_from_generating_function(w)?;
    if s.is_degenerate() {
        return Err(Error::DegenerateEndpoint { det: s.det_minus_identity() });
    }
    let i = inert(&w.w_xx())? as i64;
    Ok((w.maslov() as i64 - i).rem_euclid(4) as u8)
}

/// `(n + [det(S − I) < 0]) mod 2`.
pub fn cz_mod2_argdet(s: &SympMatrix) -> Result<u8> {
    let det = s.det_minus_identity();
    if det.abs() < s.degeneracy_floor() {
        return Err(Error::DegenerateEndpoint { det });
    }
    Ok(((s.n() + usize::from(det < 0.0)) % 2) as u8)
}

/// `ν₁ + ν₂ + ½ sign(M(S₁) + M(S₂))`.
pub fn cz_product(nu1: i64, s1: &SympMatrix, nu2: i64, s2: &SympMatrix) -> Result<i64> {
    let m = cayley_sum(s1, s2)?;
    Ok(nu1 + nu2 + m.signature()? / 2)
}

/// Piecewise-constant Maslov index `m(t)` of the generating functions along a
/// path.
#[derive(Debug, Clone, PartialEq)]
pub struct MaslovTrack {
    pub initial: i64,
    /// Zeros of det B_t and the jump of m across each.
    pub jumps: Vec<(f64, i64)>,
}

impl MaslovTrack {
    pub fn at(&self, t: f64) -> i64 {
        self.initial + self.jumps.iter().filter(|(s, _)| *s < t).map(|(_, d)| d).sum::<i64>()
    }

    /// Values at the grid samples of `path`; `None` where `S_t` is not free.
    pub fn series(&self, path: &SympPath) -> Vec<Option<i64>> {
        path.times()
            .iter()
            .zip(path.matrices())
            .map(|(&t, s)| if s.is_free() { Some(self.at(t)) } else { None })
            .collect()
    }
}

pub fn maslov_track(path: &SympPath) -> Result<MaslovTrack> {
    let n = path.n();
    let k0 = path.hamiltonian_at(0.0);
    let (_, _, _, kpp0) = blocks(&k0);
    let initial = inert(&kpp0).map_err(|_| Error::NotFree { det_b: 0.0 })? as i64;
    let zeros = find_zeros(path, |s| blocks(s).1)?;
    let t_end = path.end_time();
    let mut jumps = Vec::new();
    for t in zeros {
        if t >= t_end * (1.0 - 1e-12) {
            continue;
        }
        let s = path.eval(t);
        let (_, b, _, d) = blocks(&s);
        let kernel = null_space(&b, KERNEL_TOL * max_abs(&s).max(1.0));
        if kernel.ncols() == 0 {
            return Err(Error::UnresolvedCrossing { t });
        }
        let (_, _, _, kpp) = blocks(&path.hamiltonian_at(t));
        let v = d * kernel;
        let form = v.transpose() * kpp * v;
        let (values, _) = eigh(&form);
        let floor = FORM_DEGENERACY * max_abs(&k0).max(max_abs(&form)).max(f64::MIN_POSITIVE);
        if values.iter().any(|x| x.abs() <= floor) {
            return Err(Error::UnresolvedCrossing { t });
        }
        let sig: i64 = values.iter().map(|x| x.signum() as i64).sum();
        jumps.push((t, -sig));
    }
    debug_assert!(n > 0);
    Ok(MaslovTrack { initial, jumps })
}
