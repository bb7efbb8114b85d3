use thiserror::Error;

/// Structured failure cases surfaced by the library.
///
/// Numeric routines never panic on bad input and never return silently
/// truncated results: anything that stops short of its contract is reported
/// through one of these variants or through an explicit `partial` flag on
/// the result type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix dimension must be at least 1")]
    ZeroDimension,

    #[error("matrix dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {got}")]
    EntryCount {
        dim: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not symmetric within tolerance: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e} > {bound:e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        diff: f64,
        bound: f64,
    },

    #[error("eigenvalue iteration did not converge within {cap} sweeps for dimension {dim}")]
    EigenNoConvergence { dim: usize, cap: usize },

    #[error("matrix is numerically singular: |det| = {det:e} <= {threshold:e}")]
    Singular { det: f64, threshold: f64 },

    #[error("matrix set must contain at least one member")]
    EmptySet,

    #[error("set member {index} is {got}x{got}, expected {expected}x{expected}")]
    MemberDimension {
        index: usize,
        got: usize,
        expected: usize,
    },

    #[error("word must not be empty")]
    EmptyWord,

    #[error("letter {letter} at position {position} is outside 1..={alphabet}")]
    LetterRange {
        letter: usize,
        position: usize,
        alphabet: usize,
    },

    #[error("word parse error: {0}")]
    WordParse(String),

    #[error("enumerating {required} words would exceed the word budget {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("product entries overflowed the representable range")]
    ProductOverflow,

    #[error("parameter gate violated: {inequality}")]
    ParameterGate { inequality: String },

    #[error("set does not match the required shape: {reason}")]
    ShapeMismatch { reason: String },

    #[error(
        "certificate value {value:e} from `{criterion}` disagrees with the refine interval \
         [{lower:e}, {upper:e}] beyond {tol:e}"
    )]
    CrossValidation {
        criterion: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
        tol: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
