use thiserror::Error;

use crate::dae::Regime;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid material: nu = {nu}, lambda = {lambda} (both must be positive and finite)")]
    InvalidMaterial { nu: f64, lambda: f64 },

    #[error("squared stress must be finite and non-negative, got {0}")]
    NegativeStress(f64),

    #[error("canonical strain must be finite and non-negative, got {0}")]
    NegativeStrain(f64),

    #[error("|sigma|^2 = {sigma_sq} lies in the {regime:?} regime, outside the domain of this operation")]
    Regime { sigma_sq: f64, regime: Regime },

    #[error("branch {branch} has no real root at r = {r} (|sigma|^2 = {sigma_sq} exceeds the three-root threshold)")]
    BranchUnavailable { branch: u8, r: f64, sigma_sq: f64 },

    #[error("dual stress vanishes at r = {r} (|zeta| = {zeta})")]
    SingularDual { r: f64, zeta: f64 },

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("quadrature did not converge after {doublings} panel doublings (last difference {difference})")]
    Convergence { doublings: u32, difference: f64 },

    #[error("point r = {r} lies outside the domain [{r_min}, {r_max}]")]
    OutOfDomain { r: f64, r_min: f64, r_max: f64 },

    #[error("path leaves the annulus (radius range [{r_lo}, {r_hi}])")]
    PathOutsideDomain { r_lo: f64, r_hi: f64 },

    #[error("unsupported loads: {0}")]
    UnsupportedLoads(String),

    #[error("invalid branch map: {0}")]
    InvalidBranchMap(String),

    #[error("triality classification conflict: {0}")]
    ClassificationConflict(String),

    #[error("operation requires {expected}")]
    WrongProblem { expected: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("need at least two points per curve, got {0}")]
    TooFewPoints(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
