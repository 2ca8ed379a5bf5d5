use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad class of a failure, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input data or inconsistent shapes.
    Data,
    /// A numerical routine could not produce a result.
    Numerical,
    /// Invalid parameters.
    Config,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("estimate is missing a value at patient {patient}, row {row}, variable {variable}")]
    IncompleteEstimate {
        patient: usize,
        row: usize,
        variable: usize,
    },

    #[error("mask disagrees with data at patient {patient}, row {row}, variable {variable}")]
    MaskInconsistent {
        patient: usize,
        row: usize,
        variable: usize,
    },

    #[error("patient {id}: timestamps must be finite and strictly increasing (row {row})")]
    NonMonotoneTimestamps { id: String, row: usize },

    #[error("patient {id}: {reason}")]
    InvalidPatient { id: String, reason: String },

    #[error("variable {name}: invalid range [{low}, {high}]")]
    InvalidRange { name: String, low: f64, high: f64 },

    #[error("line {line}: malformed row ({reason})")]
    MalformedRow { line: u64, reason: String },

    #[error("line {line}: unknown variable `{name}`")]
    UnknownVariable { line: u64, name: String },

    #[error("line {line}: non-finite value")]
    NonFiniteValue { line: u64 },

    #[error("no records survive preprocessing")]
    EmptyCohort,

    #[error("column {0} has no observed values")]
    AllMissingColumn(usize),

    #[error("linear system is singular")]
    SingularSystem,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight inputs out of domain: f={f}, r={r}, dt={dt}")]
    DomainError { f: f64, r: f64, dt: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("zero value range for normalisation")]
    ZeroRange,

    #[error("labels contain a single class")]
    SingleClass,

    #[error("non-finite feature at example {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },

    #[error("patient {0} has too few observations in the window")]
    InsufficientObservations(String),

    #[error("fold {0} lacks one of the classes")]
    FoldDegenerate(usize),

    #[error("method `{method}` left {cells} evaluation cells unimputed")]
    IncompleteOutput { method: String, cells: usize },

    #[error("method `{method}` failed: {source}")]
    Method {
        method: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::SingularSystem | Error::ZeroRange | Error::FoldDegenerate(_) => {
                ErrorClass::Numerical
            }
            Error::InvalidParameter(_) | Error::DomainError { .. } => ErrorClass::Config,
            Error::Method { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn tagged(self, method: &str) -> Error {
        Error::Method {
            method: method.to_string(),
            source: Box::new(self),
        }
    }
}
