use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A ratio rule produced `b_k < 2`, so the prefix products are not an
    /// arithmetic sequence.
    #[error("ratio sequence `{id}` is not arithmetic: b_{k} = {value} < 2")]
    NonArithmetic { id: String, k: u64, value: u64 },

    #[error("ratio sequence `{id}` is undefined at k = {k}")]
    UndefinedRatio { id: String, k: u64 },

    #[error("prefix product a_{k} of `{id}` needs {bits} bits, over the budget of {budget}")]
    BitBudget {
        id: String,
        k: u64,
        bits: u64,
        budget: u64,
    },

    #[error("{value} is outside the unit interval [0, 1)")]
    OutOfUnitInterval { value: String },

    #[error("digit c_{n} = {digit} is out of range for b_{n} = {ratio}")]
    DigitOutOfRange { n: u64, digit: u64, ratio: u64 },

    #[error("element has an unbounded digit source and no truncation was given")]
    UnboundedSource,

    #[error("elements are expanded over different bases (`{left}` vs `{right}`)")]
    BaseMismatch { left: String, right: String },

    #[error("schedule `{label}` block {k} is invalid: {reason}")]
    InvalidSchedule { label: String, k: u64, reason: String },

    #[error(
        "schedule `{label}` is unsatisfiable at k = {k}: needs {needed} multipliers, only {available} admissible"
    )]
    Unsatisfiable {
        label: String,
        k: u64,
        needed: u64,
        available: u64,
    },

    #[error("set `{label}` is only known on [1, {horizon}], but [1, {needed}] was requested")]
    HorizonExceeded {
        label: String,
        needed: u64,
        horizon: u64,
    },

    #[error("index map covers n_0..n_{last} = {reach}, which does not resolve [1, {needed}]")]
    IndexMapTooShort { last: u64, reach: u64, needed: u64 },

    #[error("invalid ladder: {0}")]
    InvalidLadder(String),

    #[error("epsilon {0} is outside (0, 1/2]")]
    InvalidEpsilon(String),

    #[error("set `{label}` carries no zero-density certificate")]
    MissingCertificate { label: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An exact inequality from a proof chain failed. This is never expected
    /// and indicates an implementation defect.
    #[error("exact check `{check}` violated at index {index}: {detail}")]
    ProofViolation {
        check: String,
        index: u64,
        detail: String,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn violation(check: &str, index: u64, detail: impl Into<String>) -> Self {
        Error::ProofViolation {
            check: check.to_owned(),
            index,
            detail: detail.into(),
        }
    }

    /// True for errors that signal a failed exact proof check rather than bad
    /// input.
    pub fn is_proof_violation(&self) -> bool {
        matches!(self, Error::ProofViolation { .. })
    }
}
