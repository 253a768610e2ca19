use thiserror::Error;

use crate::sparse::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mesh needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("quadrature is exact only through degree 5, requested {0}")]
    UnsupportedDegree(usize),

    #[error("element {index} has nonpositive or non-finite weight {value:e}")]
    DegenerateElement { index: usize, value: f64 },

    #[error("curve edge {edge} has zero length")]
    DegenerateCurve { edge: usize },

    #[error(
        "step system is singular (vertex normals nonzero: {nonzero_normals}, \
         vertex normals span the plane: {spanning_normals}): {source}"
    )]
    Solvability {
        nonzero_normals: bool,
        spanning_normals: bool,
        source: LinalgError,
    },

    #[error("Picard iteration did not converge in {iterations} iterations (last increment {last_increment:e})")]
    PicardDivergence {
        iterations: usize,
        last_increment: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),

    #[error("misuse: {0}")]
    Misuse(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
