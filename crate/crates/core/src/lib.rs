//! Closed-form phase shifts of Gaussian mixed states under metaplectic
//! isotopies, with the symplectic, index and state machinery they need.

pub mod error;
pub mod linalg;
pub mod symplectic_core;
pub mod isotopy;
pub mod cz_index;
pub mod gaussian_state;
pub mod weyl_symbol;
pub mod phase_shift;
#[cfg(any(test, feature = "sampling"))]
pub mod sampling;

pub use error::{Error, Result};
