use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("variable {var} appears more than once in clause {clause}")]
    DuplicateVariableInClause { clause: usize, var: usize },
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("assignment does not satisfy the formula")]
    NotSatisfying,
    #[error("coloring is not a valid H-coloring")]
    InvalidColoring,
    #[error("the model has no valid configuration")]
    EmptySupport,
    #[error("instance too large to enumerate: {size} exceeds cap {cap}")]
    TooLarge { size: u128, cap: u128 },
    #[error("component of {size} variables exceeds the enumeration cap {cap}")]
    ComponentTooLarge { size: usize, cap: usize },
    #[error("parameter {value} outside the accepted range [-{max}, {max}]")]
    ParameterOutOfRange { value: f64, max: f64 },
    #[error("no marking satisfying the quotas found within {rounds} rounds")]
    MarkingNotFound { rounds: u64 },
    #[error("generator gave up after {attempts} attempts")]
    GenerationBudgetExceeded { attempts: u64 },
    #[error("conditioning event has probability zero")]
    InconsistentConditioning,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}
