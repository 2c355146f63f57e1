use thiserror::Error;

/// Errors raised by the construction and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid velocity field: {0}")]
    InvalidField(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point ({x}, {y}) is a corner of the domain; normals are undefined there")]
    CornerPoint { x: f64, y: f64 },
    #[error("point ({x}, {y}) is not on the boundary")]
    NotOnBoundary { x: f64, y: f64 },
    #[error("resolution h = {h} produces no quadrature nodes")]
    ResolutionTooCoarse { h: f64 },
    #[error("velocity field degenerates: min |H| = {min_speed:e}")]
    DegenerateField { min_speed: f64 },
    #[error("time {t} lies outside the horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("point ({x}, {y}) lies outside the closed domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("aperture S* = {0} must lie in (1/sqrt(2), 1) ~ (0.7071, 1)")]
    ApertureOutOfRange(f64),
    #[error("partition construction failed: {0}")]
    PartitionFailure(String),
    #[error("partition violates the cone condition (margin {margin:e})")]
    InvalidPartition { margin: f64 },
    #[error("slack r = {0} must be positive")]
    SlackNonpositive(f64),
    #[error("velocity field is not continuously differentiable (tabulated data)")]
    NotC1,
    #[error("rho = {rho} must lie in (0, 2 sigma / 3) = (0, {limit})")]
    RhoOutOfRange { rho: f64, limit: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("window ({s1}, {s2}) must satisfy 0 <= s1 < s2 <= {horizon}")]
    WindowOutOfRange { s1: f64, s2: f64, horizon: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
