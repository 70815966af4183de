use crate::model::IndexSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("cannot restrict edge of index {from} to {to}")]
    InvalidRestriction { from: IndexSet, to: IndexSet },
    #[error("invalid edge: {0}")]
    InvalidEdge(String),
    #[error("domain vertex out of range: {0}")]
    InvalidDomain(String),
    #[error("regularization arity {s} out of range for k = {k}")]
    InvalidArity { s: usize, k: usize },
    #[error("conditioning frame has zero probability")]
    EmptyCondition,
    #[error("{what}: {needed} exceeds budget {budget}")]
    BudgetExceeded { what: &'static str, needed: u128, budget: u128 },
    #[error("no edge of index {0} realizes the requested frame")]
    FrameUnrealized(IndexSet),
    #[error("precondition not verified: {0}")]
    PreconditionUnverified(String),
    #[error("sample width {h0} exceeds smallest part size {min_part}")]
    SampleTooLarge { h0: usize, min_part: usize },
    #[error("vertex {vertex} is not in part {part}")]
    InvalidVertex { part: usize, vertex: u32 },
    #[error("cannot pad a {h}-vertex graph to {h0} vertices per part")]
    InvalidPadding { h: usize, h0: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Config(String),
    #[error("oracle rejected at registration: {0}")]
    OracleRejected(String),
    #[error("[{stage}] {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    /// The innermost error, past any stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn budget(what: &'static str, needed: u128, budget: u128) -> Self {
        Error::BudgetExceeded { what, needed, budget }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
