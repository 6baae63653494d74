use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: dimension {dim} exceeds the hard cap {cap}")]
    DimensionCap { what: &'static str, dim: u128, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} is not Hermitian (residual {residual:.3e})")]
    NotHermitian { what: String, residual: f64 },

    #[error("{what} has a negative eigenvalue {min_eig:.3e}")]
    NotNonNegative { what: String, min_eig: f64 },

    #[error("epsilon mismatch: {left} vs {right}")]
    EpsilonMismatch { left: f64, right: f64 },

    #[error("truncation tail {tail:.3e} exceeds tolerance {tol:.3e} (n_max = {n_max})")]
    Truncation { tail: f64, tol: f64, n_max: usize },

    #[error(
        "conservation drift above tolerance {tol:.3e} after {halvings} step halvings \
         (charge drift {charge:.3e}, energy drift {energy:.3e}, last step {step:.3e})"
    )]
    Drift {
        charge: f64,
        energy: f64,
        tol: f64,
        step: f64,
        halvings: usize,
    },

    #[error("atom {index}: {source}")]
    Atom {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for failures of a numerical method (drift, truncation) as opposed
    /// to rejected input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Truncation { .. } | Error::Drift { .. } => true,
            Error::Atom { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
