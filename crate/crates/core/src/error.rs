use num_complex::Complex64;
use thiserror::Error;

/// Domain errors raised by the numerical routines.
///
/// Variant names match the error vocabulary surfaced by the experiment runner,
/// so a failing config reports e.g. `SingularResolvent` verbatim.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("SingularResolvent: {lambda} is within tolerance of the spectrum (sigma_min = {sigma_min:e})")]
    SingularResolvent { lambda: Complex64, sigma_min: f64 },
    #[error("NotSectorial: {0}")]
    NotSectorial(String),
    #[error("PoleHit: |z - e^(i rho)| = {distance:e} at z = {z}")]
    PoleHit { z: Complex64, distance: f64 },
    #[error("MissingDecay: function `{0}` has no H-infinity_0 decay certificate; use the regularized route")]
    MissingDecay(String),
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("CommutantViolation: ||F(z)A - AF(z)|| = {defect:e} at z = {zeta}")]
    CommutantViolation { zeta: Complex64, defect: f64 },
    #[error("NonCommuting: ||AB - BA|| = {0:e} exceeds tolerance")]
    NonCommuting(f64),
    #[error("TailTooLarge: dyadic tail bound {bound:e} exceeds {tolerance:e} at K = {k}")]
    TailTooLarge { bound: f64, tolerance: f64, k: usize },
    #[error("AngleSumExceeded: spectral angles sum to {0} >= pi")]
    AngleSumExceeded(f64),
    #[error("AngleExceeded: spectral angle {0} >= pi/2")]
    AngleExceeded(f64),
    #[error("SumSingular: A + B is numerically singular (sigma_min = {0:e})")]
    SumSingular(f64),
    #[error("IllConditionedEigenbasis: eigenvector condition {0:e}")]
    IllConditionedEigenbasis(f64),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Short variant name, used in reports and exit diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::SingularResolvent { .. } => "SingularResolvent",
            Error::NotSectorial(_) => "NotSectorial",
            Error::PoleHit { .. } => "PoleHit",
            Error::MissingDecay(_) => "MissingDecay",
            Error::NoConvergence(_) => "NoConvergence",
            Error::CommutantViolation { .. } => "CommutantViolation",
            Error::NonCommuting(_) => "NonCommuting",
            Error::TailTooLarge { .. } => "TailTooLarge",
            Error::AngleSumExceeded(_) => "AngleSumExceeded",
            Error::AngleExceeded(_) => "AngleExceeded",
            Error::SumSingular(_) => "SumSingular",
            Error::IllConditionedEigenbasis(_) => "IllConditionedEigenbasis",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
