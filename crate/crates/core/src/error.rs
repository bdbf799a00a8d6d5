//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {x} outside coefficient domain: {detail}")]
    Domain { x: f64, detail: String },

    #[error("derivative undefined at {x}: one-sided values differ (left {left}, right {right})")]
    DerivativeJump { x: f64, left: f64, right: f64 },

    #[error("coefficient model invalid: {0}")]
    InvalidCoefficient(String),

    #[error("quadrature failed to converge on [{a}, {b}]: error estimate {err:.3e} after {panels} panels")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        err: f64,
        panels: usize,
    },

    #[error("coefficient vanishes inside integration range [{a}, {b}]")]
    CoefficientVanishes { a: f64, b: f64 },

    #[error("classification indeterminate: {0}")]
    Indeterminate(String),

    #[error("cutoff energy does not vanish; origin has positive capacity (nu bounded on the {side} side)")]
    BoundedNu { side: &'static str },

    #[error("growth hypothesis violated; lemma not applicable (integral of s/c(s) over [1, inf) is finite)")]
    GrowthHypothesisViolated,

    #[error("grading underflow: cell width {width:.3e} below representable range")]
    GradingUnderflow { width: f64 },

    #[error("boundary condition incompatible with geometry: {0}")]
    IncompatibleBc(String),

    #[error("coefficient negative at flux point x = {x}: c = {value}")]
    NegativeCoefficient { x: f64, value: f64 },

    #[error("eigensolver failed to converge: {0}")]
    EigenNonConvergence(String),

    #[error("resolvent pole: gamma = {gamma} is at or below the spectral threshold {threshold}")]
    ResolventPole { gamma: f64, threshold: f64 },

    #[error("resolvent pole crossed: time step {dt} makes (I + dt H) singular")]
    SingularStep { dt: f64 },

    #[error("truncation too small: far-boundary flux {flux:.3e} exceeds tolerance {tol:.3e}")]
    TruncationTooSmall { flux: f64, tol: f64 },

    #[error("case I has a unique extension; nothing to compare")]
    NothingToCompare,

    #[error("scenario parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("analysis `{analysis}` requires parameter `{key}`")]
    MissingParameter { analysis: String, key: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
