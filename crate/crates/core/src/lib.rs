//! Tangent-space excitation spectra for layered variational circuits.

pub mod circuits;
pub mod compare;
pub mod error;
pub mod hadamard;
pub mod io;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod oracles;
pub mod statevec;
pub mod symmetry;
pub mod tangent;
pub mod vqe;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
