use thiserror::Error;

/// Errors raised while building, validating or solving an instance.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("duplicate agent id `{0}`")]
    DuplicateAgent(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("agent `{agent}` has no cost for candidate `{candidate}`")]
    MissingCost { agent: String, candidate: String },
    #[error("agent `{agent}` lists `{candidate}`, which is not an admissible candidate")]
    InvalidCandidate { agent: String, candidate: String },
    #[error("agent `{agent}` has tied costs for `{first}` and `{second}`")]
    TiedCost {
        agent: String,
        first: String,
        second: String,
    },
    #[error("negative cost for agent `{0}`")]
    NegativeCost(String),
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rotation is not exposed in the current shortlists")]
    NotExposed,
    #[error("rotation set is not closed under predecessors")]
    NotClosed,
    #[error("no baseline matching for leaver `{0}`")]
    MissingBaseline(String),
    #[error("instance has {agents} agents, oracle bound is {bound}")]
    BoundExceeded { agents: usize, bound: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
