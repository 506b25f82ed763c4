use crate::engine::NegativeLadder;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index {index} is below the declared floor {floor}")]
    IndexBelowFloor { index: i64, floor: i64 },

    #[error("state escaped to a non-finite value at step {step}")]
    StateEscaped { step: i64 },

    /// The negative ladder did not settle within the depth budget; the
    /// partial ladder is attached for inspection.
    #[error("negative ladder not converged within depth {max_depth}")]
    NotConverged {
        max_depth: u64,
        ladder: Box<NegativeLadder>,
    },

    #[error("monotone ladder exceeded ceiling {ceiling:e} at depth {depth}; drift condition looks violated")]
    MonotoneDivergence { depth: u64, ceiling: f64 },

    #[error("trajectories did not coalesce within {max_n} steps")]
    NotCoalesced { max_n: u64 },

    #[error("no estimation method available: {0}")]
    MethodUnavailable(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("invalid envelope: lower bound {lower} exceeds upper bound {upper}")]
    InvalidEnvelope { lower: f64, upper: f64 },

    #[error("mean matrix is singular or ill-conditioned")]
    SingularMeanMatrix,

    #[error("offspring means exceed the drift cap {rho}")]
    DriftViolated { rho: f64 },

    #[error("comparison is gated to i.i.d. or reversible driving noise")]
    GateViolated,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
