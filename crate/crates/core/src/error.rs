use thiserror::Error;

/// Violated hypothesis of one of the factorization theorems.
///
/// These are reported separately from ordinary errors because the CLI maps
/// them to their own exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Hypothesis {
    /// Hypothesis (i): the operator norm exceeds one.
    #[error("hypothesis (i) violated: ||A|| = {norm} exceeds 1 + {slack}")]
    NormAboveOne { norm: f64, slack: f64 },
    /// Hypothesis (ii): some column vanishes.
    #[error("hypothesis (ii) violated: min column norm theta = {theta} is not positive")]
    VanishingColumn { theta: f64 },
    /// The requested rank is larger than the theorem allows.
    #[error("rank n = {requested} exceeds the guaranteed rank {allowed} ({formula})")]
    RankTooLarge {
        requested: usize,
        allowed: usize,
        formula: &'static str,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for width {width}")]
    IndexOutOfRange { index: usize, width: usize },

    #[error("empty column set")]
    EmptyIndexSet,

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NonConvergence { iterations: usize, estimate: f64 },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("selection precondition fails: {0}")]
    Infeasible(String),

    #[error("no admissible column left after choosing {chosen} of {needed}")]
    Exhausted { chosen: usize, needed: usize },

    #[error("column {index} has zero norm")]
    ZeroColumn { index: usize },

    #[error("near-identity inversion diverges: ||S - I|| = {deviation} >= 1")]
    Divergence { deviation: f64 },

    #[error("||S - I|| = {deviation} exceeds the stated bound {hint}")]
    DeviationAboveHint { deviation: f64, hint: f64 },

    #[error("cover construction stalled at t = {at}: {detail}")]
    Stall { at: f64, detail: String },

    #[error("t = {t} outside domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error(transparent)]
    Hypothesis(#[from] Hypothesis),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
