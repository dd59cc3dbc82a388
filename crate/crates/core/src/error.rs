use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The Euler-angle chart degenerates (|sin α2| at or below the gimbal tolerance).
    #[error("gimbal singularity: |sin(nutation)| = {sin_nutation:e} is below tolerance {tol:e}")]
    GimbalSingular { sin_nutation: f64, tol: f64 },

    #[error("vector is not unit length (|v| = {norm})")]
    NotUnit { norm: f64 },

    #[error("director field is not unit length at node {node} (|nu| = {norm})")]
    NotUnitField { node: usize, norm: f64 },

    #[error("inertia eigenvalue {value} on axis {axis} is not positive")]
    DegenerateInertia { axis: usize, value: f64 },

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("contact is receding (g.k = {normal_velocity:e})")]
    Receding { normal_velocity: f64 },

    #[error("effective inverse mass at contact is not positive ({value:e})")]
    SingularEffectiveMass { value: f64 },

    #[error("cell edge {cell_edge} is smaller than the molecule bounding diameter {diameter}")]
    CellTooSmall { cell_edge: f64, diameter: f64 },

    #[error("state invariant violated: {0}")]
    StateInvariantViolated(String),

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("non-positive density {value:e} at cell {cell}")]
    NonPositiveDensity { cell: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
