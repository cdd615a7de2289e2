//! Downlink covariance estimation from uplink measurements for FDD massive MIMO.
//!
//! The uplink (UL) and downlink (DL) spatial covariance matrices of a ULA are
//! linked through a frequency-invariant angular power spectrum (APS):
//! `R = ∫ ρ(θ) a(θ)a(θ)^H dθ`. This crate reconstructs ρ from the UL covariance
//! by projection methods in `L²[-π/2, π/2]` and re-integrates it against the DL
//! array response:
//!
//! * Algorithm 1 — minimum-norm solution of the Gram system `G^u α = r^u`
//!   (projection of the zero function onto the linear constraint variety).
//! * Algorithm 2 — extrapolated alternating projections (EAPM) between the
//!   constraint variety and the cone of nonnegative functions.
//!
//! For ULAs both Gram matrices have closed forms in the Bessel function J0, so
//! no numerical integration is needed for Algorithm 1 at all.
//!
//! Supporting machinery: Hermitian-Toeplitz covariance handling with Dykstra
//! projection onto the PSD∩Toeplitz set, a geometry-based stochastic channel
//! model (GSCM) scenario generator, covariance error metrics, and a seeded
//! Monte Carlo campaign runner behind the `covconv` CLI.

pub mod aps_conversion;
pub mod array_model;
pub mod campaign;
pub mod covariance_core;
pub mod gscm_sim;
pub mod metrics;

pub use aps_conversion::{
    convert_alg1, convert_alg2, convert_pipeline, eapm_run, estimate_alg1, solve_gram, Algorithm,
    EapmConfig, EapmDiagnostics, GridFunction, ThetaGrid,
};
pub use array_model::{bessel_j0, ArrayGeometry, DuplexPair, GramOperators};
pub use covariance_core::{
    project_psd, project_toeplitz, project_toeplitz_psd, psd_sqrt, HermitianToeplitzCov,
};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dense real matrix.
pub type RMat = nalgebra::DMatrix<f64>;
/// Dense real vector.
pub type RVec = nalgebra::DVector<f64>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Structurally invalid input (dimension mismatch, bad config, bad file).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Numerical failure (eigensolver breakdown, non-finite iterate, ...).
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
