use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("at least one observed event is required")]
    NoEvents,

    #[error("column `{0}` has zero standard deviation")]
    ZeroVariance(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("monotone likelihood: a coefficient exceeded |{bound}| (perfect separation)")]
    Separation { bound: f64 },

    #[error("no comparable pairs")]
    NoComparablePairs,

    #[error("{features} features exceed the exact enumeration limit of {limit}; use sampled attribution")]
    TooManyFeatures { features: usize, limit: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate}): loss = {loss}")]
    Diverged { epoch: usize, learning_rate: f64, loss: f64 },

    #[error("backward pass requires a matching train-mode forward pass")]
    StaleCache,

    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),

    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),

    #[error("condition stratum has {found} instances, at least {required} required")]
    SmallStratum { found: usize, required: usize },
}

impl Error {
    /// True for failures of the numerics (as opposed to rejected input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_) | Error::Separation { .. } | Error::NonFinite(_) | Error::Diverged { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
