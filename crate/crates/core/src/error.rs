//! Error types shared across the crate.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem document parse error: {0}")]
    Parse(String),
    #[error("problem validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Error)]
pub enum ShootingError {
    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },
    #[error("non-finite potential value at x = {x}")]
    NonFinitePotential { x: f64 },
    #[error("lambda = {lambda} is not an approximate characteristic zero (|f| = {residual:.3e})")]
    NotAnEigenvalue { lambda: Complex64, residual: f64 },
    #[error("derivative order {requested} exceeds the validated cap {cap}")]
    OrderTooHigh { requested: usize, cap: usize },
}

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Shooting(#[from] ShootingError),
    #[error("operator A is not invertible: characteristic value at 0 vanishes (shift the spectral parameter first)")]
    NotInvertible,
    #[error("winding count unstable over box [{re0}, {re1}] x [{im0}, {im1}]")]
    UnstableWinding { re0: f64, re1: f64, im0: f64, im1: f64 },
    #[error("no sign change bracket found for slot {slot} after maximal widening")]
    BracketNotFound { slot: i64 },
    #[error("all characteristic derivatives up to order {max_order} vanish at lambda = {lambda}")]
    MultiplicityUndetermined { lambda: Complex64, max_order: usize },
    #[error("no real shift candidates found for automatic shift selection")]
    NoShiftCandidates,
}

#[derive(Debug, Error)]
pub enum NormingError {
    #[error(transparent)]
    Shooting(#[from] ShootingError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("eigenvalue too close to zero (|lambda| = {0:.3e}); shift the spectral parameter first")]
    LambdaNearZero(f64),
    #[error("route defined for simple eigenvalues only; multiplicity is {0}")]
    NotSimple(usize),
    #[error("multiplicity {0} outside the validated range (<= 2)")]
    MultiplicityOutOfRange(usize),
    #[error("characteristic symbol vanishes to order > {order} at lambda; degenerate chain")]
    DegenerateSymbol { order: usize },
    #[error("index window [{have}] insufficient, need at least {need}")]
    InsufficientWindow { have: usize, need: usize },
}

#[derive(Debug, Error)]
pub enum PontryaginError {
    #[error("discretization requires N >= 4, got {0}")]
    TooFewModes(usize),
    #[error("discretized operator A is singular (min |eig| = {0:.3e}); shift the spectral parameter first")]
    SingularA(f64),
    #[error("eigen decomposition failed")]
    EigenFailure,
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("shifted mixed operator has an eigenvalue within {0:.1e} of zero; negativity indeterminate")]
    Indeterminate(f64),
    #[error("interlacing requires real simple enumerated spectra; found a complex or multiple eigenvalue")]
    NotRealSimple,
}
