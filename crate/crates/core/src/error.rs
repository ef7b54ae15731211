use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("Q^2 != 0 on coordinates: {}", .0.join(", "))]
    Q2Violation(Vec<String>),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("point outside the chart box: {0}")]
    OutsideBox(String),
    #[error("form leaves the chart box: {0}")]
    RangeViolation(String),
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("input form is not closed (|dB| = {0:e})")]
    NotClosed(f64),
    #[error("iteration diverged at iterate {iter}: {reason}")]
    Divergence { iter: usize, reason: String },
    #[error("incompatible horn: {0}")]
    IncompatibleHorn(String),
    #[error("singular Jacobian (condition number {0:e})")]
    SingularJacobian(f64),
    #[error("Newton solve failed: {0}")]
    NewtonFailed(String),
    #[error("flow left the chart box at t = {0}")]
    FlowExit(f64),
    #[error("gauge flow stalled: {0}")]
    Stalled(String),
    #[error("degree mismatch: {0}")]
    Degree(String),
    #[error("bad indices: {0}")]
    BadIndices(String),
    #[error("degenerate pairing: {0}")]
    Degenerate(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short name of the variant, used in machine-readable error blocks.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Q2Violation(_) => "q2_violation",
            Error::InvalidChart(_) => "invalid_chart",
            Error::OutsideBox(_) => "outside_box",
            Error::RangeViolation(_) => "range_violation",
            Error::FrameMismatch(_) => "frame_mismatch",
            Error::Dimension(_) => "dimension",
            Error::NotClosed(_) => "not_closed",
            Error::Divergence { .. } => "divergence",
            Error::IncompatibleHorn(_) => "incompatible_horn",
            Error::SingularJacobian(_) => "singular_jacobian",
            Error::NewtonFailed(_) => "newton_failed",
            Error::FlowExit(_) => "flow_exit",
            Error::Stalled(_) => "stalled",
            Error::Degree(_) => "degree",
            Error::BadIndices(_) => "bad_indices",
            Error::Degenerate(_) => "degenerate",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
