//! Two independent realizations of L: a Fourier–Galerkin matrix for Per±
//! and a fundamental-solution backend for every boundary condition.

pub mod contour;
pub mod galerkin;
pub mod ode;
pub mod trig;

pub use contour::{
    analyze_samples, count_zeros_in_disc, disc_samples, disc_scan, riesz_projection_numeric, ContourAnalysis, DEFAULT_CONTOUR_NODES,
};
pub use galerkin::{assemble_galerkin, GalerkinMatrix, Parity};
pub use ode::{characteristic_value, chi_from_monodromy, default_steps, fundamental_solution, FundamentalSolution, Propagator};
pub use trig::TrigPair;
