use crate::ids::{NodeId, PrismId};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("prism {0} is not a leaf of the partition")]
    NotALeaf(PrismId),
    #[error("time {0} lies outside the time domain")]
    TimeOutOfRange(f64),
    #[error("nonconforming spatial mesh: {0}")]
    NonConforming(String),
    #[error("node {0} hangs both in time and in space")]
    InconsistentHanging(NodeId),
    #[error("node {0} is hanging and carries no degree of freedom")]
    HangingNode(NodeId),
    #[error("linear algebra failure: {0}")]
    Singular(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
