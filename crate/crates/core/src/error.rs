use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter, sample point or argument lies outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A measure charges nodes that are null for the reference measure.
    #[error("measure is not dominated at {} node(s) (first: {:?})", .nodes.len(), .nodes.first())]
    NotDominated { nodes: Vec<usize> },

    /// Inputs are individually valid but incompatible (e.g. different sample spaces).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("integration error: {0}")]
    Integration(String),

    /// A gradient has a component in the null space of a degenerate Fisher metric.
    #[error("gradient lies outside the range of the Fisher metric (residual {residual:.3e})")]
    OutsideRange { residual: f64 },

    #[error("cloud too sparse: mesh {mesh:.3e} exceeds {limit:.3e}")]
    SparseCloud { mesh: f64, limit: f64 },

    #[error("need at least 3 usable scales, found {found}")]
    InsufficientScale { found: usize },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
