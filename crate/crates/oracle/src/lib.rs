//! Brute-force references for the closed-form traces: truncated Fock-space
//! matrices and direct phase-space quadrature.

pub mod error;
pub mod fock;
pub mod quadrature;

pub use error::{OracleError, Result};
