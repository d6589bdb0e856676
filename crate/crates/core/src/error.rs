use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("notch segment ({start:?} -> {end:?}) is outside the domain")]
    NotchOutsideDomain { start: [f64; 2], end: [f64; 2] },

    #[error("invalid notch: {0}")]
    InvalidNotch(String),

    #[error("no nodes matched {0}")]
    EmptyNodeSet(String),

    #[error("unknown node set `{0}`")]
    UnknownNodeSet(String),

    #[error("element {element} is distorted: det J = {det_j:e}")]
    DistortedElement { element: usize, det_j: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("conflicting prescriptions on node {node} field {field}")]
    ConflictingPrescription { node: usize, field: &'static str },

    #[error("invalid boundary condition: {0}")]
    InvalidBoundaryCondition(String),

    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    #[error("negative history input: H_prev = {h_prev}, psi_plus = {psi_plus}")]
    NegativeHistory { h_prev: f64, psi_plus: f64 },

    #[error(
        "factorization failed at pivot {pivot} (value {value:e}): matrix is not positive definite"
    )]
    Factorization { pivot: usize, value: f64 },

    #[error("solver aborted at t = {time} after {cutbacks} cutbacks: {reason}")]
    Aborted {
        time: f64,
        cutbacks: usize,
        reason: String,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("{}: line {line}: {message}", .path.display())]
    ConfigParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config validation failed:\n  - {}", .0.join("\n  - "))]
    ConfigValidation(Vec<String>),

    #[error("parse error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("comparison rejected: {0}")]
    Comparison(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
