use thiserror::Error;

/// Errors produced by the solvers and the disc machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("degree {degree} exceeds the largest degree {max} the grid integrates exactly")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("region `{0}` contains no grid nodes")]
    EmptyRegion(String),

    #[error("kernel pole: 1 - conj(z)*zeta vanishes")]
    KernelPole,

    #[error("infeasible constraint: distance {distance:.3e} of h_J to the truncated space exceeds M = {m:.3e}")]
    Infeasible { distance: f64, m: f64 },

    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },

    #[error("constraint error is not monotone in lambda: {0}")]
    NonMonotone(String),

    #[error("Neumann lift of seed {seed} diverges (step norms {steps:?})")]
    Divergence { seed: String, steps: Vec<f64> },

    #[error("conductivity violates 1/k <= |f| <= k: {0}")]
    ConductivityBound(String),

    #[error("function vanishes at grid node {0}")]
    VanishingFunction(usize),

    #[error("ill-conditioned basis: smallest Gram eigenvalue {0:.3e}")]
    IllConditioned(f64),
}

impl Error {
    /// Whether the error reports an iterative method failing rather than bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::NonMonotone(_) | Error::Divergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
