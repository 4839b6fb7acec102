use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state budget exceeded: {states} states > cap {cap}")]
    StateBudget { states: u64, cap: u64 },
    #[error("empty input")]
    EmptyInput,
    #[error("constant functional where a non-constant one is required")]
    ConstantFunctional,
    #[error("matrix is not invertible over F_{0}")]
    Singular(u32),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("recursion depth exceeded ({0})")]
    RecursionDepth(usize),
    #[error("subset sweep too large: m = {m}, cap = {cap}")]
    SweepTooLarge { m: usize, cap: usize },
    #[error("expansion stagnated at {covered} of {target} targets (T = {t})")]
    Stagnation { covered: u64, target: u64, t: i64 },
    #[error("ran out of disjoint pair elements at {covered} of {target} targets")]
    Exhausted { covered: u64, target: u64 },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
