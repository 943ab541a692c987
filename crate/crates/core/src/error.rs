use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel under-resolved: {points_per_radius:.2} grid points per support radius, need at least 16")]
    UnderresolvedKernel { points_per_radius: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("point {point:?} lies outside the periodic box [-{half_length}, {half_length})")]
    OutOfDomain { point: Vec<f64>, half_length: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),

    #[error("exclusion region {{|x| >= {radius}}} is empty inside |x| <= L/2 for half-length L = {half_length}")]
    EmptyExclusionRegion { radius: f64, half_length: f64 },

    #[error("non-finite state at t = {time}: {detail}")]
    NonfiniteState { time: f64, detail: String },

    #[error("singular datum |x|^-{alpha} is not locally integrable in dimension {dimension}")]
    SingularDatumUnsupported { alpha: f64, dimension: usize },

    #[error("invalid tail exponent alpha = {alpha} for dimension {dimension}: {reason}")]
    InvalidAlpha { alpha: f64, dimension: usize, reason: &'static str },

    #[error("exponent p = {p} is below the critical value {critical} for this family")]
    SubcriticalExponent { p: f64, critical: f64 },

    #[error("rescaled read needs half-length {needed}, fine grid only has {available}")]
    DomainTooSmall { needed: f64, available: f64 },

    #[error("need at least {needed} points inside the fit window, found {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("series value {value} at t = {time} is not positive")]
    NonpositiveValue { time: f64, value: f64 },

    #[error("window radius {radius} exceeds half the domain ({limit})")]
    WindowExceedsDomain { radius: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
