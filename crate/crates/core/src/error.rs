use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("non-manifold edge ({a}, {b}): {count} incident triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("triangle {face} has non-positive area {area:e}")]
    NegativeArea { face: usize, area: f64 },

    #[error("degenerate mesh: {degree}-simplex {index} has dual weight {weight:e}")]
    DegenerateMesh {
        degree: usize,
        index: usize,
        weight: f64,
    },

    #[error("field `{field}` is not defined on a {model} model")]
    DomainMismatch { field: String, model: String },

    #[error("not a Morse function: {0}")]
    NotMorse(String),

    #[error(
        "overflow guard: local |df|/t = {ratio:.3} exceeds {limit} at t = {t:e}; refine the mesh or raise t"
    )]
    OverflowGuard { ratio: f64, limit: f64, t: f64 },

    #[error("eigensolver failed: {0}")]
    SolverFailure(String),

    #[error("degenerate oscillator model: Hessian eigenvalue {0} is zero")]
    DegenerateModel(f64),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("not leafwise Morse on leaf {leaf} (intercept {intercept}): {msg}")]
    NotLeafwiseMorse {
        leaf: usize,
        intercept: f64,
        msg: String,
    },

    #[error("leaf {leaf} (intercept {intercept}): {source}")]
    Leaf {
        leaf: usize,
        intercept: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient k = {k}: largest rescaled eigenvalue {largest} is inside the support of φ (ends at {support})")]
    InsufficientK {
        k: usize,
        largest: f64,
        support: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True when the failure comes from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SolverFailure(_)
            | Error::OverflowGuard { .. }
            | Error::InsufficientK { .. }
            | Error::NotMorse(_)
            | Error::NotLeafwiseMorse { .. } => true,
            Error::Leaf { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
