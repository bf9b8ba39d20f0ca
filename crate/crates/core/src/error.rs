use thiserror::Error;

use crate::mesh::TriangleLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input parameter violated a documented bound.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Coincident or collinear input points.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The Beltrami field reached modulus one somewhere it was sampled.
    #[error("inadmissible Beltrami field: {0}")]
    InadmissibleField(String),

    #[error("inadmissible Beltrami field on triangle {label}: |nu| = {modulus}")]
    InadmissibleTriangle { label: TriangleLabel, modulus: f64 },

    #[error("solver failure ({solver}): {reason}")]
    SolverFailure {
        solver: String,
        reason: String,
        diagnostics: SolverDiagnostics,
    },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("no exact oracle for field `{0}`")]
    UnsupportedOracle(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

/// Numbers reported alongside a solver failure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub normal_residual: f64,
    pub rhs_norm: f64,
    pub condition_estimate: f64,
}
