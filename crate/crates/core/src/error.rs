use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what}: expected {expected} entries, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("dielectric tensor is singular")]
    SingularDielectric,

    #[error("c33 equals c44: transverse velocity is undefined for degenerate isotropy")]
    DegenerateIsotropy,

    #[error("{function} is singular at x = {x}")]
    Domain { function: &'static str, x: f64 },

    #[error("propagation direction has zero length")]
    ZeroDirection,

    #[error("rotation matrix is not orthogonal (max deviation {0:.3e})")]
    NonOrthogonal(f64),

    #[error("requested {0} component from a uniform disk profile, which only carries E_z")]
    MissingComponent(char),

    #[error("{path}: {msg}")]
    FieldMap { path: PathBuf, msg: String },

    #[error("expected {expected} transducer")]
    WrongTransducer { expected: &'static str },

    #[error("grid under-resolved: {0}")]
    UnderResolved(String),

    #[error("Poisson truncation tail {tail:.3e} at N_max = {n_max} exceeds 1e-6")]
    Truncation { tail: f64, n_max: usize },

    #[error("fit did not converge: {0}")]
    NoConvergence(String),

    #[error("Jacobian is degenerate (parameter {0} has no effect on the residual)")]
    DegenerateJacobian(String),

    #[error("unknown material preset '{0}'")]
    UnknownPreset(String),

    #[error("empty frequency window")]
    EmptyWindow,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of an iterative or numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnderResolved(_)
                | Error::NoConvergence(_)
                | Error::DegenerateJacobian(_)
                | Error::Truncation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
