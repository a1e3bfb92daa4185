use thiserror::Error;

/// Errors raised by the kernel builders, samplers and file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A domain precondition on the parameters failed. `condition` names the
    /// violated inequality.
    #[error("domain error: {condition} ({detail})")]
    Domain { condition: String, detail: String },

    #[error("degenerate evaluation point: {0}")]
    Degenerate(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A sampled trajectory left the truncated state space; `partial` holds
    /// the path up to the last state inside the box.
    #[error("trajectory left the state box at t={time} from {from}")]
    TruncationExit {
        time: f64,
        from: String,
        partial: Vec<(f64, crate::signatures::Signature)>,
    },

    #[error("resampling failed: {0}")]
    Resampling(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn domain(condition: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Domain {
            condition: condition.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
