use thiserror::Error;

/// Errors raised by lattice construction, distance queries and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {0:?} lies outside the box")]
    OutOfBox(Vec<i64>),

    #[error("configuration has no spanning giant cluster; resample")]
    NoGiant,

    #[error("no giant cluster after {attempts} resamples")]
    PersistentNoGiant { attempts: u32 },

    #[error("target {0:?} is not connected to the source")]
    Unreachable(Vec<i64>),

    #[error("box too small: half-side {required} needed, got {actual}")]
    BoxTooSmall { required: i64, actual: i64 },

    #[error("empty sample")]
    EmptySample,

    #[error("mean-gap stages share master seed {0}; use independent streams")]
    DependentSeeds(u64),

    #[error("skeleton cannot advance at path index {index}: increment {increment:?} is not in Q_x")]
    SkeletonStuck { index: usize, increment: Vec<i64> },

    #[error("increment {0:?} is neither short nor long")]
    Unclassified(Vec<i64>),

    #[error("degenerate direction fan: {0}")]
    DegenerateHull(String),

    #[error("dimension {0} unsupported here (only d = 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("h estimate unavailable for {0:?}: outside the tabulated range")]
    OutsideTable(Vec<i64>),

    #[error("malformed configuration file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error stems from bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::InvalidParameter(_)
                | Error::OutOfBox(_)
                | Error::BoxTooSmall { .. }
                | Error::DependentSeeds(_)
                | Error::UnsupportedDimension(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
