use thiserror::Error;

use crate::sdp::SdpSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("degenerate cut: {0}")]
    DegenerateCut(&'static str),

    #[error("exhaustive search over {n} vertices exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("no subset satisfies the balance constraint")]
    Infeasible,

    #[error("stripping the inner boundary leaves an empty set")]
    EmptyResult,

    #[error("peeling failed before reaching the balance target")]
    NoCut,

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph is too small ({0} vertices)")]
    TooSmall(usize),

    #[error("solver stopped after {iterations} iterations without converging")]
    NotConverged {
        iterations: usize,
        best: Box<SdpSolution>,
    },

    #[error("vector is degenerate (denominator {0:e})")]
    DegenerateVector(f64),

    #[error("matrix is not PSD (minimum eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("vector has empty positive support")]
    ZeroVector,

    #[error("assignment has zero l1-variance")]
    ZeroVariance,

    #[error("graph is not regular")]
    NotRegular,

    #[error("epsilon {0} outside (0, 1/4)")]
    BadEpsilon(f64),

    #[error("R = {0} exceeds the tabulation cap of 8")]
    TooLargeR(usize),

    #[error("covariance trace {0} is not 1")]
    BadNormalization(f64),

    #[error("degree sequence is infeasible: {0}")]
    InfeasibleDegreeSequence(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
