//! Error taxonomy shared across the pricing engine.

use thiserror::Error;

/// Crate-wide error type. Variants carry enough context to act on:
/// callers can perturb damping, shorten horizons, or refine grids.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A Riccati trajectory hit a pole / blew up; `at` is the time reached.
    #[error("riccati trajectory exploded at t = {at}")]
    PoleEncountered { at: f64 },

    /// Step-control or quadrature tolerances outside (0, 1).
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    /// Argument within the rejection radius of a pole or branch point.
    #[error("argument within rejection radius of a boundary: {0}")]
    BoundaryCase(String),

    /// Requested horizon at or beyond the explosion time of the transform.
    #[error("horizon {horizon} exceeds the transform lifetime {max}")]
    HorizonExceeded { horizon: f64, max: f64 },

    /// A quantity that must be real came back with a material imaginary part.
    #[error("non-real result: imaginary part {imag} exceeds tolerance")]
    NonRealResult { imag: f64 },

    /// Transform argument leaves the validity domain of the affine formula.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// Panel doubling or octave extension exhausted its budget.
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    /// Damping outside the integrability window, or degenerate for the
    /// closed-form transform family.
    #[error("invalid damping: {0}")]
    InvalidDamping(String),

    /// Exponent magnitude above the overflow guard (|Re| > 700).
    #[error("exponent overflow: |{0}| exceeds the guard")]
    Overflow(f64),

    /// A tilted or weighted density fails to integrate.
    #[error("integrability violation: {0}")]
    IntegrabilityViolation(String),

    /// Evaluation time too close to the information horizon.
    #[error("time {t} within the degenerate band around the horizon {horizon}")]
    DegenerateTime { t: f64, horizon: f64 },

    /// Malformed time or abscissa grid.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Parameter validation failure.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Market structure not supported by the requested pricing route.
    #[error("unsupported market structure: {0}")]
    UnsupportedMarket(String),

    /// Config file failed schema validation.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
