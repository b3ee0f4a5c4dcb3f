use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or option combinations (exit code 1).
    Usage,
    /// Input data that violates a precondition (exit code 2).
    Data,
    /// A numerical routine failed or produced a degenerate result (exit code 3).
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numeric => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("order statistic rank h = {h} exceeds sample size n = {n}")]
    DimensionExceedsSample { h: usize, n: usize },

    #[error("sample too small: n = {n}, need at least {required} observations")]
    SampleTooSmall { n: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("column {column} has zero scale")]
    DegenerateColumn { column: usize },

    #[error("all radial weights vanish; scatter matrix is degenerate")]
    DegenerateScatter,

    #[error("scatter matrix is singular (determinant {det:e})")]
    SingularScatter { det: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    InvalidMatrix { asymmetry: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("scatter has a negative eigenvalue {value:e}")]
    NegativeEigenvalue { value: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last: Vec<f64>,
    },

    #[error("density vanishes at {point}; influence function is singular")]
    SingularInfluence { point: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-numeric value {value:?} at row {row}, column {column}")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidArgument(_) => ErrorKind::Usage,
            EmptyInput
            | DimensionExceedsSample { .. }
            | SampleTooSmall { .. }
            | DimensionMismatch { .. }
            | DegenerateColumn { .. }
            | Parse { .. }
            | Malformed(_)
            | Config(_)
            | Io(_) => ErrorKind::Data,
            DegenerateScatter
            | SingularScatter { .. }
            | InvalidMatrix { .. }
            | NotPositiveDefinite
            | NegativeEigenvalue { .. }
            | NoConvergence { .. }
            | SingularInfluence { .. }
            | Numeric(_) => ErrorKind::Numeric,
        }
    }

    /// Stable machine-readable tag, printed as `error[<code>]: <message>`.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            EmptyInput => "empty-input",
            DimensionExceedsSample { .. } => "dimension-exceeds-sample",
            SampleTooSmall { .. } => "sample-too-small",
            DimensionMismatch { .. } => "dimension-mismatch",
            DegenerateColumn { .. } => "degenerate-column",
            DegenerateScatter => "degenerate-scatter",
            SingularScatter { .. } => "singular-scatter",
            InvalidMatrix { .. } => "invalid-matrix",
            NotPositiveDefinite => "not-positive-definite",
            NegativeEigenvalue { .. } => "negative-eigenvalue",
            NoConvergence { .. } => "no-convergence",
            SingularInfluence { .. } => "singular-influence",
            Numeric(_) => "numeric",
            InvalidArgument(_) => "invalid-argument",
            Parse { .. } => "parse",
            Malformed(_) => "malformed-input",
            Config(_) => "config",
            Io(_) => "io",
        }
    }
}
