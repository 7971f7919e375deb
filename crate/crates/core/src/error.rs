use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: index out of range, malformed sample, bad configuration.
    #[error("{0}")]
    Domain(String),

    /// A symmetric positive-definite factorization broke down.
    #[error(
        "{context}: matrix is not numerically positive definite (pivot {pivot_index} = {pivot:e})"
    )]
    NotPositiveDefinite {
        context: String,
        pivot_index: usize,
        pivot: f64,
    },

    /// The BLUE information matrix is (numerically) singular.
    #[error("degenerate design: delta = {delta:e} is not above tolerance {tol:e}")]
    DegenerateDesign { delta: f64, tol: f64 },

    /// Quadrature did not reach the requested tolerance before the node cap.
    #[error("quadrature did not converge: change {achieved:e} at {nodes} nodes exceeds tolerance {tol:e}")]
    QuadratureConvergence {
        achieved: f64,
        nodes: usize,
        tol: f64,
    },

    /// The numerical optimizer failed at every start.
    #[error("optimizer did not converge: best gradient norm {grad_norm:e} after {iterations} iterations")]
    OptimizerConvergence {
        grad_norm: f64,
        iterations: usize,
        objective: f64,
        a: Vec<f64>,
        b: Vec<f64>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NotPositiveDefinite { .. } => "numerical-precision",
            Error::DegenerateDesign { .. } => "degenerate-design",
            Error::QuadratureConvergence { .. } => "numerical-precision",
            Error::OptimizerConvergence { .. } => "convergence",
        }
    }

    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_))
    }
}
