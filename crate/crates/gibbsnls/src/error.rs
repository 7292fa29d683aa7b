use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature order {order} cannot certify orthogonality: |<e_{m}, e_{n}>| = {value:.3e} exceeds {tol:.1e}")]
    QuadratureTooCoarse {
        order: usize,
        m: usize,
        n: usize,
        value: f64,
        tol: f64,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("fixed-point iteration failed to converge after {iters} iterations (residual {residual:.3e}, dt {dt:.3e})")]
    StepFailure { iters: usize, residual: f64, dt: f64 },

    #[error("invariance experiment aborted: {0}")]
    Experiment(String),

    #[error("unknown observable '{name}'; registered: {registry:?}")]
    UnknownObservable { name: String, registry: Vec<String> },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
