//! Crate-wide error taxonomy.
//!
//! Variants are grouped by how the CLI maps them to exit codes: input and
//! configuration problems exit with 2, numeric failures with 3, acceptance
//! failures with 1.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an out-of-range parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A polygon failed simplicity or orientation validation.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A perturbation produced a self-intersecting boundary.
    #[error("perturbed boundary self-intersects near vertex {vertex}: {detail}")]
    SelfIntersection { vertex: usize, detail: String },

    /// Constraints passed to a field builder cannot be satisfied.
    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),

    /// Mesh is unusable for the requested operation.
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// Sparse factorization hit a non-positive pivot.
    #[error("factorization breakdown at row {row}: pivot {pivot:.3e}")]
    Factorization { row: usize, pivot: f64 },

    /// Eigensolver failed to reach the residual tolerance.
    #[error("eigensolver did not converge: {0}")]
    NotConverged(String),

    /// Too few interior vertices (or otherwise unresolvable discretization).
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    /// An eigenfunction is numerically zero where a nonzero one is required.
    #[error("field is numerically zero: {0}")]
    AllZero(String),

    /// A label, index or pair fails a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Operation requires a simple (non-clustered) eigenvalue.
    #[error("eigenvalue {index} is clustered (rel gap {gap:.2e}); use the cluster interface")]
    Clustered { index: usize, gap: f64 },

    /// Eigenvalue ordering changed inside a finite-difference stencil.
    #[error("eigenvalue crossing detected inside the FD stencil: {0}")]
    CrossingDetected(String),

    /// Root bracketing failed even after widening.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code class: 2 = config/validation, 3 = numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::InvalidGeometry(_)
            | Error::InvalidConstraints(_)
            | Error::InvalidInput(_)
            | Error::InvalidMesh(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::SelfIntersection { .. }
            | Error::Factorization { .. }
            | Error::NotConverged(_)
            | Error::MeshTooCoarse(_)
            | Error::AllZero(_)
            | Error::Clustered { .. }
            | Error::CrossingDetected(_)
            | Error::Numeric(_) => 3,
        }
    }
}
