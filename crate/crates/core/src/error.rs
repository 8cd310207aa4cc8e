use thiserror::Error;

pub type Result<T> = std::result::Result<T, DgpError>;

#[derive(Debug, Error)]
pub enum DgpError {
    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("arity mismatch: {0}")]
    ArityMismatch(String),

    #[error("cannot shrink terminal node {0}")]
    ShrinkTerminal(usize),

    #[error("invalid primitive set: {0}")]
    InvalidPrimitiveSet(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown variable x{index} (dataset has {n_vars} features)")]
    UnknownVariable { index: usize, n_vars: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DgpError {
    pub fn is_degenerate_target(&self) -> bool {
        matches!(self, DgpError::DegenerateTarget(_))
    }
}
