use thiserror::Error;

/// Failures raised by the geometry pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {point:?} lies outside the chart domain of {model}")]
    OutOfDomain { model: String, point: Vec<f64> },

    #[error("contact form is degenerate at {point:?} (condition number {condition:.3e})")]
    DegenerateContact { point: Vec<f64>, condition: f64 },

    #[error("Levi form is not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:.3e})")]
    LeviNotPositive { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("CR frame is degenerate at {point:?}")]
    DegenerateFrame { point: Vec<f64> },

    #[error("connection system has rank {rank}, expected {expected}")]
    ConnectionRank { rank: usize, expected: usize },

    #[error("connection axioms not satisfied at {point:?}: residual {residual:.3e}")]
    ConnectionResidual { point: Vec<f64>, residual: f64 },

    #[error("vectors are not g-orthonormal (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },

    #[error("vector is not horizontal (theta = {theta:.3e})")]
    NotHorizontal { theta: f64 },

    #[error("geodesic integration failed: {0}")]
    Integration(String),

    #[error("map is not isopseudohermitian: |f*theta' - theta| = {residual:.3e}")]
    NotPseudohermitian { residual: f64 },

    #[error("map is not CR: residual {residual:.3e}")]
    NotCr { residual: f64 },

    #[error("immersion needs target CR dimension larger than source ({source_dim} -> {target_dim})")]
    Codimension { source_dim: usize, target_dim: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;
