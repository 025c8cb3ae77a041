//! Branch table of the harmonic oscillator phase, computed from the trace
//! formula at the midpoint of every half period and set beside the printed
//! branch formulas.

use std::f64::consts::PI;

use metaphase_core::cz_index::cz_harmonic_closed;
use metaphase_core::gaussian_state::GaussianState;
use metaphase_core::phase_shift::trace_gaussian;
use metaphase_core::symplectic_core::SympMatrix;

use crate::error::CliError;
use crate::table::{Cell, Table};

/// Reduces to (−π, π].
pub fn principal(x: f64) -> f64 {
    let y = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Printed branch formula for φ(t) on the half period containing `omega_t`.
pub fn tabulated_phase(omega_t: f64) -> Option<f64> {
    let q = omega_t / PI;
    if q <= 0.0 || q.fract() == 0.0 {
        return None;
    }
    let j = q.floor() as i64;
    let k = (j / 2) as f64;
    Some(if j % 2 == 0 { 2.0 * k * PI - omega_t / 2.0 } else { 2.0 * k * PI + omega_t / 2.0 })
}

/// Printed formula for Arg(t).
pub fn tabulated_arg(omega_t: f64) -> Option<f64> {
    let j = (omega_t / PI).floor() as i64;
    tabulated_phase(omega_t).map(|_| if j % 2 == 0 { -(omega_t + PI) / 2.0 } else { (omega_t - PI) / 2.0 })
}

/// `φ(t)` of the vacuum under the oscillator, from the trace formula.
pub fn computed_phase(omega: f64, t: f64) -> Result<(i64, f64), CliError> {
    let nu = cz_harmonic_closed(omega, t)?.nu.expect("closed form is a full index");
    let state = GaussianState::coherent(1, 1.0)?;
    let tr = trace_gaussian(&SympMatrix::rotation(1, omega * t), nu, &state)?;
    Ok((nu, tr.arg()))
}

pub fn harmonic_table(omega: f64, k_max: usize) -> Result<Table, CliError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(CliError::Config(format!("omega = {omega} must be positive")));
    }
    let mut table = Table::new(&[
        "k", "omega_t_lo", "omega_t_hi", "t_mid", "nu", "arg_mid", "arg_table", "phi_mid", "phi_table", "agrees",
    ]);
    for k in 0..=k_max {
        for half in 0..2 {
            let lo = (2 * k + half) as f64 * PI;
            let hi = lo + PI;
            let t = 0.5 * (lo + hi) / omega;
            let (nu, phi) = computed_phase(omega, t)?;
            let arg = principal(phi - 0.5 * PI * nu as f64);
            let phi_table = tabulated_phase(omega * t).expect("interior point");
            let arg_table = tabulated_arg(omega * t).expect("interior point");
            let agrees = principal(phi - phi_table).abs() <= 1e-9;
            table.push(vec![
                Cell::Int(k as i64),
                Cell::Num(lo),
                Cell::Num(hi),
                Cell::Num(t),
                Cell::Int(nu),
                Cell::Num(arg),
                Cell::Num(principal(arg_table)),
                Cell::Num(phi),
                Cell::Num(principal(phi_table)),
                Cell::Bool(agrees),
            ]);
        }
    }
    Ok(table)
}
