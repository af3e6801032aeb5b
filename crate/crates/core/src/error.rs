use thiserror::Error;

/// Errors raised by the geometry, return-map and analysis layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    GeometryDegenerate(String),

    /// The ray never crosses the target curve. `tangential` marks rays that
    /// only graze it.
    #[error("ray misses the boundary{}", if *.tangential { " (tangential contact only)" } else { "" })]
    RayMiss { tangential: bool },

    /// An inward normal from the outer boundary does not reach the core.
    #[error("O_C condition violated: inward normal from {point:?} along {normal:?} misses the core")]
    OcViolation { point: Vec<f64>, normal: Vec<f64> },

    #[error("degenerate equilibrium: smallest |Hessian eigenvalue| = {min_abs_eigenvalue:e}")]
    DegenerateEquilibrium { min_abs_eigenvalue: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("scenario error at `{path}`: {message}")]
    Scenario { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
