//! Spectral laboratory for the Dirac operator
//! L = iσ₃ d/dx + V on [0, π], V = [[0, 𝒫], [𝒬, 0]],
//! under periodic, antiperiodic and strictly regular general boundary conditions.

pub mod bc;
pub mod error;
pub mod feshbach;
pub mod operator;
pub mod potential;
pub mod prooflab;
pub mod riesz;
pub mod spectral;

pub use error::{DiracError, Result};
pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
