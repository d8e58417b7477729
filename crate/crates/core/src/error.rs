use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no demand pair is separated by the assignment")]
    NoDemandSeparated,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("requested {requested} demand pairs but only {available} vertex pairs exist")]
    TooManyDemands { requested: usize, available: usize },
    #[error("index {index} out of range for path of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("state budget of {budget} exceeded")]
    Exceeded { budget: usize },
    #[error("bypass replay failed on pair ({0}, {1}): {2}")]
    TraceFailed(usize, usize, String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("demand denominator vanishes on the whole polytope")]
    DegenerateDenominator,
    #[error("pair ({0}, {1}) is neither a demand edge nor covered by a bag")]
    PairNotCovered(usize, usize),
    #[error("inconsistent local distributions: {0}")]
    InconsistencyDetected(String),
    #[error("conditioning event has zero probability at node {0}")]
    ZeroProbabilityCondition(usize),
    #[error("no rounding run separated any demand pair")]
    AllRunsDegenerate,
    #[error("no bag path connects vertices {0} and {1}")]
    PairNotConnected(usize, usize),
    #[error("endpoint {0} is not in the expected end bag")]
    EndpointNotInBag(usize),
    #[error("input too large: {0}")]
    TooLarge(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag, used in structured error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NoDemandSeparated => "NoDemandSeparated",
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidInstance(_) => "InvalidInstance",
            Error::InvalidDecomposition(_) => "InvalidDecomposition",
            Error::TooManyDemands { .. } => "TooManyDemands",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::Exceeded { .. } => "Exceeded",
            Error::TraceFailed(..) => "TraceFailed",
            Error::Infeasible => "Infeasible",
            Error::Unbounded => "Unbounded",
            Error::DegenerateDenominator => "DegenerateDenominator",
            Error::PairNotCovered(..) => "PairNotCovered",
            Error::InconsistencyDetected(_) => "InconsistencyDetected",
            Error::ZeroProbabilityCondition(_) => "ZeroProbabilityCondition",
            Error::AllRunsDegenerate => "AllRunsDegenerate",
            Error::PairNotConnected(..) => "PairNotConnected",
            Error::EndpointNotInBag(_) => "EndpointNotInBag",
            Error::TooLarge(_) => "TooLarge",
            Error::Parse(_) => "Parse",
            Error::Json(_) => "Json",
            Error::Io(_) => "Io",
        }
    }
}
