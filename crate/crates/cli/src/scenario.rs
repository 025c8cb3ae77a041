//! Turns a validated config into a path, a state and the tables built from them.

use metaphase_core::cz_index::{crossing_scan, cz_mod2_argdet, cz_mod4_free, maslov_track};
use metaphase_core::gaussian_state::{admissibility, GaussianState, SqueezedSpec};
use metaphase_core::isotopy::{affine_extend, harmonic_path, normal_mode_path, one_parameter_group, time_grid, AffinePath, SympPath};
use metaphase_core::linalg::{Mat, Vector};
use metaphase_core::phase_shift::{phase_series, phase_series_affine, PhaseRecord};
use metaphase_core::symplectic_core::{generating_function_from_matrix, standard_form, SympMatrix};
use metaphase_oracle::fock::{gaussian_density_fock, hamiltonian_fock, SpectralPropagator};

use crate::config::{DriveSpec, HamiltonianSpec, ScenarioConfig, StateSpec};
use crate::error::CliError;
use crate::table::{Cell, Table};

pub const PHASE_COLUMNS: [&str; 8] = ["t", "re_trace", "im_trace", "phase_principal", "phase_unwrapped", "nu_mod4", "det_s_minus_i", "degenerate"];
pub const ORACLE_COLUMNS: [&str; 3] = ["oracle_re", "oracle_im", "residual"];
pub const DEFAULT_TOL: f64 = 1e-6;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<Mat, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Config(format!("{name} must be a non-empty rectangular matrix")));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

fn vector(v: &[f64], dim: usize, name: &str) -> Result<Vector, CliError> {
    if v.len() != dim {
        return Err(CliError::Config(format!("{name} has length {}, expected {dim}", v.len())));
    }
    Ok(Vector::from_column_slice(v))
}

fn symp(rows: &Option<Vec<Vec<f64>>>, n: usize, name: &str) -> Result<SympMatrix, CliError> {
    match rows {
        None => Ok(SympMatrix::identity(n)),
        Some(rows) => {
            let m = matrix(rows, name)?;
            if m.nrows() != 2 * n || m.ncols() != 2 * n {
                return Err(CliError::Config(format!("{name} must be {0}×{0}", 2 * n)));
            }
            SympMatrix::new(m).map_err(|e| CliError::Config(format!("{name}: {e}")))
        }
    }
}

/// Everything a subcommand needs, built once from the config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub hbar: f64,
    pub path: SympPath,
    /// Constant Hamiltonian matrix of the path.
    pub k: Mat,
    pub ell: Option<Vector>,
    pub affine: Option<AffinePath>,
    pub state: GaussianState,
}

impl Scenario {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self, CliError> {
        let hbar = cfg.hbar;
        let grid = time_grid(cfg.grid.t_max, cfg.grid.steps).map_err(config_err)?;
        let path = match &cfg.hamiltonian {
            HamiltonianSpec::Harmonic { omega } => harmonic_path(*omega, &grid),
            HamiltonianSpec::ConstantK(rows) => {
                let k = matrix(rows, "hamiltonian.constant_k")?;
                if k.nrows() != k.ncols() || k.nrows() % 2 == 1 {
                    return Err(CliError::Config("hamiltonian.constant_k must be square of even size".into()));
                }
                if (&k - k.transpose()).amax() > 1e-12 * k.amax().max(1.0) {
                    return Err(CliError::Config("hamiltonian.constant_k must be symmetric".into()));
                }
                let j = standard_form(k.nrows() / 2).map_err(config_err)?;
                one_parameter_group(&(j * k), &grid)
            }
            HamiltonianSpec::NormalModes { omegas, r } => {
                let r = symp(r, omegas.len(), "hamiltonian.normal_modes.r")?;
                normal_mode_path(omegas, &r, &grid)
            }
            HamiltonianSpec::Exponential { x } => one_parameter_group(&matrix(x, "hamiltonian.exponential.x")?, &grid),
        }
        .map_err(config_err)?;
        let n = path.n();
        let k = path.analytic_hamiltonian().ok_or_else(|| CliError::Config("path has no constant Hamiltonian".into()))?;
        let state = build_state(&cfg.state, n, hbar)?;

        let (ell, affine) = match &cfg.drive {
            None => (None, None),
            Some(DriveSpec::Linear { ell }) => {
                let ell = vector(ell, 2 * n, "drive.linear.ell")?;
                let affine = AffinePath::linear_drive(path.clone(), &ell).map_err(config_err)?;
                (Some(ell), Some(affine))
            }
            Some(DriveSpec::Sampled { z_t, gamma_t }) => {
                let z = z_t.iter().map(|z| vector(z, 2 * n, "drive.sampled.z_t")).collect::<Result<Vec<_>, _>>()?;
                (None, Some(affine_extend(path.clone(), z, gamma_t.clone()).map_err(config_err)?))
            }
        };
        Ok(Scenario { hbar, path, k, ell, affine, state })
    }

    pub fn n(&self) -> usize {
        self.path.n()
    }

    /// Fails with an inadmissibility error naming the violated eigenvalue.
    pub fn check_admissible(&self) -> Result<(), CliError> {
        let report = admissibility(self.state.v(), self.hbar)?;
        if report.admissible() {
            Ok(())
        } else {
            Err(CliError::Inadmissible(format!(
                "smallest symplectic eigenvalue {:?} is below hbar/2 = {:?} (smallest eigenvalue of V + i(hbar/2)J is {:?})",
                report.min_symplectic_eigenvalue,
                0.5 * self.hbar,
                report.min_hermitian_eigenvalue
            )))
        }
    }

    pub fn records(&self) -> Result<Vec<PhaseRecord>, CliError> {
        self.check_admissible()?;
        Ok(match &self.affine {
            Some(a) => phase_series_affine(a, &self.state)?,
            None if self.state.is_centered() => phase_series(&self.path, &self.state)?,
            None => {
                let len = self.path.len();
                let zero = affine_extend(self.path.clone(), vec![Vector::zeros(2 * self.n()); len], vec![0.0; len])?;
                phase_series_affine(&zero, &self.state)?
            }
        })
    }

    /// Fock-space traces at the given times.
    pub fn oracle_traces(&self, times: &[f64], cutoff: Option<usize>) -> Result<Vec<num_complex::Complex64>, CliError> {
        if self.affine.is_some() && self.ell.is_none() {
            return Err(CliError::Config("the oracle needs a Hamiltonian drive; sampled drives are not supported".into()));
        }
        let cutoff = cutoff.unwrap_or(if self.n() == 1 { 60 } else { 25 });
        let h = hamiltonian_fock(&self.k, self.ell.as_ref(), self.hbar, cutoff).map_err(oracle_config_err)?;
        let rho = gaussian_density_fock(&self.state, cutoff).map_err(oracle_config_err)?.rho;
        let prepared = SpectralPropagator::new(&h)?.prepare(&rho)?;
        Ok(times.iter().map(|&t| prepared.trace(t, self.hbar)).collect())
    }
}

/// Guard and truncation failures are fixed by editing the config.
fn oracle_config_err(e: metaphase_oracle::OracleError) -> CliError {
    use metaphase_oracle::OracleError as E;
    match e {
        E::Guard { .. } | E::Truncation { .. } | E::Cutoff(_) => CliError::Config(e.to_string()),
        other => other.into(),
    }
}

fn build_state(spec: &StateSpec, n: usize, hbar: f64) -> Result<GaussianState, CliError> {
    let with_mean = |s: GaussianState, mean: &Option<Vec<f64>>| -> Result<GaussianState, CliError> {
        match mean {
            None => Ok(s),
            Some(m) => s.with_mean(vector(m, 2 * n, "state mean")?).map_err(config_err),
        }
    };
    let state = match spec {
        StateSpec::Covariance { v, mean } => {
            let v = matrix(v, "state.covariance.v")?;
            if v.nrows() != 2 * n || v.ncols() != 2 * n {
                return Err(CliError::Config(format!("state.covariance.v must be {0}×{0}", 2 * n)));
            }
            with_mean(GaussianState::centered(v, hbar).map_err(config_err)?, mean)?
        }
        StateSpec::Squeezed { x, y, mean } => {
            let spec = SqueezedSpec::new(matrix(x, "state.squeezed.x")?, matrix(y, "state.squeezed.y")?).map_err(config_err)?;
            let s = GaussianState::squeezed_pure(&spec, hbar).map_err(config_err)?;
            with_mean(s, mean)?
        }
        StateSpec::Thermal { nbar, mean } => with_mean(GaussianState::thermal_occupations(nbar, hbar).map_err(config_err)?, mean)?,
        StateSpec::Gibbs { omegas, beta, r } => {
            let r = symp(r, omegas.len(), "state.gibbs.r")?;
            GaussianState::thermal(omegas, &r, *beta, hbar).map_err(config_err)?
        }
        StateSpec::Coherent { mean } => with_mean(GaussianState::coherent(n, hbar).map_err(config_err)?, mean)?,
    };
    if state.n() != n {
        return Err(CliError::Config(format!("state has {} modes but the Hamiltonian has {n}", state.n())));
    }
    Ok(state)
}

/// Largest oracle residual and where it occurred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSummary {
    pub max_residual: f64,
    pub at: f64,
}

/// One row per grid sample; oracle columns appended when `oracle` is set.
pub fn phase_table(sc: &Scenario, oracle: Option<Option<usize>>) -> Result<(Table, Option<OracleSummary>), CliError> {
    let records = sc.records()?;
    let mut headers: Vec<&str> = PHASE_COLUMNS.to_vec();
    let fock = match oracle {
        Some(cutoff) => {
            headers.extend(ORACLE_COLUMNS);
            let times: Vec<f64> = records.iter().map(|r| r.t).collect();
            Some(sc.oracle_traces(&times, cutoff)?)
        }
        None => None,
    };
    let mut table = Table::new(&headers);
    let mut summary: Option<OracleSummary> = None;
    for (i, r) in records.iter().enumerate() {
        let mut row = vec![
            Cell::Num(r.t),
            r.trace.map_or(Cell::Empty, |c| Cell::Num(c.re)),
            r.trace.map_or(Cell::Empty, |c| Cell::Num(c.im)),
            r.phase_principal.map_or(Cell::Empty, Cell::Num),
            r.phase_unwrapped.map_or(Cell::Empty, Cell::Num),
            r.nu.map_or(Cell::Empty, |v| Cell::Int(v as i64)),
            Cell::Num(r.det_s_minus_i),
            Cell::Bool(r.degenerate),
        ];
        if let Some(f) = &fock {
            let o = f[i];
            row.push(Cell::Num(o.re));
            row.push(Cell::Num(o.im));
            match r.trace {
                Some(c) => {
                    let res = (c - o).norm();
                    if summary.is_none_or(|s| res > s.max_residual) {
                        summary = Some(OracleSummary { max_residual: res, at: r.t });
                    }
                    row.push(Cell::Num(res));
                }
                None => row.push(Cell::Empty),
            }
        }
        table.push(row);
    }
    Ok((table, summary))
}

pub fn check_residual(summary: Option<OracleSummary>, tol: f64) -> Result<(), CliError> {
    match summary {
        Some(s) if !(s.max_residual <= tol) => Err(CliError::OracleDisagreement { residual: s.max_residual, tol, t: s.at }),
        _ => Ok(()),
    }
}

/// Index of every prefix path by crossing counting, with the mod-2 and
/// (where the endpoint is free) mod-4 routes alongside.
pub fn cz_table(sc: &Scenario) -> Result<Table, CliError> {
    let scan = crossing_scan(&sc.path)?;
    let track = maslov_track(&sc.path).ok();
    let mut table = Table::new(&["t", "nu", "nu_mod4", "argdet_mod2", "free_mod4", "degenerate"]);
    for (&t, s) in sc.path.times().iter().zip(sc.path.matrices()) {
        let degenerate = s.is_degenerate();
        let nu = (!degenerate).then(|| scan.nu_at(t));
        let argdet = if degenerate { None } else { cz_mod2_argdet(s).ok() };
        let free = match (&track, degenerate) {
            (Some(track), false) if s.is_free() => {
                generating_function_from_matrix(s, track.at(t)).ok().and_then(|w| cz_mod4_free(&w).ok())
            }
            _ => None,
        };
        table.push(vec![
            Cell::Num(t),
            nu.map_or(Cell::Empty, Cell::Int),
            nu.map_or(Cell::Empty, |v| Cell::Int(v.rem_euclid(4))),
            argdet.map_or(Cell::Empty, |v| Cell::Int(v as i64)),
            free.map_or(Cell::Empty, |v| Cell::Int(v as i64)),
            Cell::Bool(degenerate),
        ]);
    }
    Ok(table)
}

/// Both admissibility criteria, the symplectic spectrum and the purity.
pub fn validate_table(sc: &Scenario) -> Result<Table, CliError> {
    let report = admissibility(sc.state.v(), sc.hbar)?;
    let mut table = Table::new(&[
        "min_hermitian_eigenvalue",
        "min_symplectic_eigenvalue",
        "hermitian_ok",
        "symplectic_ok",
        "symplectic_eigenvalues",
        "purity",
        "pure",
    ]);
    let spectrum: Vec<String> = sc.state.symplectic_eigenvalues().iter().map(|v| format!("{v:?}")).collect();
    table.push(vec![
        Cell::Num(report.min_hermitian_eigenvalue),
        Cell::Num(report.min_symplectic_eigenvalue),
        Cell::Bool(report.hermitian_ok),
        Cell::Bool(report.symplectic_ok),
        Cell::Text(spectrum.join(" ")),
        Cell::Num(sc.state.purity()),
        Cell::Bool(sc.state.is_pure()),
    ]);
    Ok(table)
}
