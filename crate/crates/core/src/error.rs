use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("invalid interval [{lo}, {hi}] at offset {pos}: bounds must satisfy 0 <= lo <= hi")]
    Interval { pos: usize, lo: f64, hi: f64 },

    #[error("grammar stratification violated: {0}")]
    Stratification(String),

    #[error("trajectory too short: evaluation needs sample index {needed}, trajectory has {available} samples")]
    TrajectoryTooShort { needed: usize, available: usize },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("unsupported task shape: {0}")]
    UnsupportedShape(String),

    #[error("unknown region `{0}`")]
    UnknownRegion(String),

    #[error("remaining time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("control norm {norm} exceeds input bound {bound}")]
    InputBound { norm: f64, bound: f64 },

    #[error("sequence is empty")]
    EmptySequence,

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("input bound u_max = {u_max} must exceed disturbance bound d_max = {d_max}")]
    BoundOrdering { u_max: f64, d_max: f64 },

    #[error("no feasible initial state found after {attempts} attempts ({detail})")]
    SamplerExhausted { attempts: usize, detail: String },

    #[error("invalid config at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
