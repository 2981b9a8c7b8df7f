//! Error type shared by every module of the crate.

use crate::numerics::Mat;

/// Errors produced by the identification, filtering and simulation routines.
#[derive(Debug, thiserror::Error)]
pub enum SubidError {
    /// A matrix argument has incompatible or unsupported dimensions.
    #[error("bad shape: {0}")]
    BadShape(String),

    /// Input data contains NaN or infinite entries.
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    /// An iterative factorization did not converge.
    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),

    /// A matrix that must be positive semi-definite is not.
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    /// The model has no Kalman gain but one is required.
    #[error("model has no Kalman gain")]
    MissingGain,

    /// Riccati fixed-point iteration did not converge; carries the last iterate.
    #[error("Riccati iteration did not converge after {iters} iterations")]
    RiccatiDivergence { iters: usize, last: Mat },

    /// Requested operation is not available for this configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The pair (A, C) is not observable.
    #[error("pair (A, C) is not observable")]
    NotObservable,

    /// The leading square block of the observability matrix is singular.
    #[error("leading block of the observability matrix is singular")]
    LeadingBlockSingular,

    /// A Hankel/regression window does not fit in the available samples.
    #[error("bad window: {0}")]
    BadWindow(String),

    /// The regressor matrix is rank deficient beyond the tolerance.
    #[error("rank-deficient regressors: rank {rank} of {expected}")]
    RankDeficientRegressors { rank: usize, expected: usize },

    /// The reduced-rank state sequence is numerically zero.
    #[error("degenerate state: largest singular value {sigma_max:.3e}")]
    DegenerateState { sigma_max: f64 },

    /// The observability shift equation is too ill conditioned to solve.
    #[error("shift solve ill conditioned: rank {rank} < order {order}")]
    ShiftSolveIllConditioned { rank: usize, order: usize },

    /// The VARX pre-estimation depth is too small for the requested windows.
    #[error("need deeper VARX: have {have} Markov parameters, need {need}")]
    NeedDeeperVarx { have: usize, need: usize },

    /// The closed-loop specification violates one of its invariants.
    #[error("bad loop spec: {0}")]
    BadLoopSpec(String),

    /// File or text format error at the IO boundary.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Labels the pipeline stage in which an inner error occurred.
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<SubidError>,
    },
}

impl SubidError {
    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Self {
        SubidError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, SubidError>;
