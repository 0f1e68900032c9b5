use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("mesh generation failed: {0}")]
    Mesh(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("solver did not converge after {iterations} iterations (best quotient {best_quotient:.12e})")]
    NonConvergence { iterations: usize, best_quotient: f64 },

    #[error("{leg}: {source}")]
    Leg {
        leg: String,
        #[source]
        source: Box<Error>,
    },

    /// A shape-search candidate the backend could not evaluate.
    #[error("evaluating candidate polygon: {source}\n{polygon}")]
    Candidate {
        /// The polygon in the text format.
        polygon: String,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the name of the computation leg that produced it.
    pub fn in_leg(self, leg: impl Into<String>) -> Self {
        Error::Leg {
            leg: leg.into(),
            source: Box::new(self),
        }
    }

    /// True when the error (or the error it wraps) is a solver failure rather
    /// than a configuration problem.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::LinearAlgebra(_) | Error::Mesh(_) => true,
            Error::Leg { source, .. } | Error::Candidate { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
