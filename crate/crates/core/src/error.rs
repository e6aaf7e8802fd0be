use std::fmt;

/// Errors raised across the crate.
#[derive(Debug)]
pub enum Error {
    /// Grid dimensions violate a sizing rule.
    GridSize(String),
    /// Physical or spectral data does not match the expected shape.
    ShapeMismatch { expected: usize, got: usize },
    /// Odd-parity samples carry nonzero wall values beyond tolerance.
    OddBoundary { max: f64, tol: f64 },
    /// A field had the wrong parity type for the requested operation.
    Parity(String),
    /// Linear system for a profile or projection is singular.
    Singular(String),
    /// Boundary-layer parameter too large: the two wall layers overlap.
    LayerOverlap { eps: f64 },
    /// Elliptic compatibility violated (mean of the normal source nonzero).
    Compatibility { mean: f64 },
    /// Time step violates the advective CFL bound.
    CflViolation { cfl: f64, limit: f64, t: f64 },
    /// A tracked norm exceeded the blow-up guard threshold.
    BlowUp { norm: f64, threshold: f64, t: f64 },
    /// Config text failed to parse.
    Config { line: usize, msg: String },
    /// Config parsed but a value is invalid.
    Validation { key: String, msg: String },
    /// Rate fitting was asked for on unusable data.
    FitData(String),
    /// Norm sweep that must decrease monotonically did not.
    NonMonotone(String),
    /// Snapshot or report file problem.
    Io(std::io::Error),
    /// Snapshot payload malformed.
    Snapshot(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::GridSize(msg) => write!(f, "grid sizing: {msg}"),
            Error::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected} values, got {got}")
            }
            Error::OddBoundary { max, tol } => write!(
                f,
                "odd-parity samples have wall values up to {max:e} (tolerance {tol:e})"
            ),
            Error::Parity(msg) => write!(f, "parity: {msg}"),
            Error::Singular(msg) => write!(f, "singular system: {msg}"),
            Error::LayerOverlap { eps } => write!(
                f,
                "layer parameter eps = {eps:e} too large: sqrt(eps) exceeds 1/2, wall layers overlap"
            ),
            Error::Compatibility { mean } => {
                write!(f, "elliptic compatibility violated: mean of normal source = {mean:e}")
            }
            Error::CflViolation { cfl, limit, t } => {
                write!(f, "CFL violation at t = {t}: cfl = {cfl:.3} > {limit}")
            }
            Error::BlowUp { norm, threshold, t } => {
                write!(f, "blow-up guard at t = {t}: tracked norm {norm:e} > {threshold:e}")
            }
            Error::Config { line, msg } => write!(f, "config line {line}: {msg}"),
            Error::Validation { key, msg } => write!(f, "config key `{key}`: {msg}"),
            Error::FitData(msg) => write!(f, "rate fit: {msg}"),
            Error::NonMonotone(msg) => write!(f, "non-monotone sweep: {msg}"),
            Error::Io(e) => write!(f, "io: {e}"),
            Error::Snapshot(msg) => write!(f, "snapshot: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
