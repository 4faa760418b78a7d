use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiracError {
    #[error("boundary condition violates {constraint} (residual {residual:.3e})")]
    ConstraintViolation {
        constraint: &'static str,
        residual: f64,
    },
    #[error("degenerate boundary condition: |ad| = {ad_abs:.3e}")]
    DegenerateBC { ad_abs: f64 },
    #[error("operation needs a General boundary condition, got {0}")]
    NotGeneral(&'static str),
    #[error("grid of {grid} points is too coarse for order {order} (need at least {needed})")]
    GridTooCoarse {
        grid: usize,
        order: usize,
        needed: usize,
    },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("decay fit needs at least 8 positive points, found {found}")]
    TooFewPoints { found: usize },
    #[error("Galerkin cutoff {k_cut} too small for potential order {order}")]
    TruncationTooSmall { k_cut: usize, order: usize },
    #[error("characteristic function vanishes near the contour |λ-{center}|={radius}")]
    ZeroOnContour { center: Complex64, radius: f64 },
    #[error("winding number {value:.4} is not close to an integer")]
    NonIntegerWinding { value: f64 },
    #[error("contour |λ-{center}|={radius} passes through the spectrum")]
    ContourHitsSpectrum { center: Complex64, radius: f64 },
    #[error("expected {expected} roots near n={n}, found {count} (radius {radius})")]
    WrongRootCount {
        n: i64,
        expected: usize,
        count: i64,
        radius: f64,
    },
    #[error("complementary block singular at n={n}, z={z}")]
    ComplementSingular { n: i64, z: Complex64 },
    #[error("invariant subspace at n={n} has rank {rank}, expected 2")]
    RankDeficientProjection { n: i64, rank: usize },
    #[error("root refinement did not converge near {near}")]
    NoConvergence { near: Complex64 },
}

pub type Result<T> = std::result::Result<T, DiracError>;
