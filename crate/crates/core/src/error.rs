use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // ingestion
    #[error("failed reading input: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("column '{column}' named by the schema is not present in the header")]
    UnknownColumn { column: String },
    #[error("line {line}: {message}")]
    BadRow { line: u64, message: String },
    #[error("line {line}: duplicate id '{id}'")]
    DuplicateId { line: u64, id: String },
    #[error("line {line}: malformed attribute cell '{value}' in column '{column}' (expected 0, 1 or the missing sentinel)")]
    MalformedAttribute { line: u64, column: String, value: String },
    #[error("line {line}: non-numeric scalar cell '{value}' in column '{column}'")]
    NonNumericScalar { line: u64, column: String, value: String },
    #[error("line {line}: loss '{value}' must be a finite non-negative number")]
    InvalidLoss { line: u64, value: String },
    #[error("label '{label}' is not in the label space")]
    UnknownLabel { label: String },
    #[error("dataset is invalid: {0}")]
    InvalidDataset(String),

    // join
    #[error("no prediction for item '{id}'")]
    MissingPrediction { id: String },
    #[error("prediction for unknown item '{id}'")]
    UnknownItem { id: String },
    #[error("item '{id}' has predicted label '{label}' outside the label space")]
    PredictionOutsideLabelSpace { id: String, label: String },

    // topology
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("unknown scalar '{0}'")]
    UnknownScalar(String),
    #[error("subbasis selection is empty")]
    EmptySubbasis,
    #[error("subbasis does not cover the dataset: {uncovered} item(s) belong to no element")]
    CoverageViolation { uncovered: usize },
    #[error("duplicate subbasis element name '{0}'")]
    DuplicateElementName(String),
    #[error("{0} must be at least 1")]
    ArityBelowOne(&'static str),
    #[error("open-set count would exceed max_open_sets = {max}")]
    TooManyOpenSets { max: usize },
    #[error("unknown open set id {0}")]
    UnknownOpenSet(usize),
    #[error("item index {index} out of range (dataset has {n_items} items)")]
    ItemOutOfRange { index: usize, n_items: usize },
    #[error("cannot parse set expression '{input}': {message}")]
    BadExpression { input: String, message: String },
    #[error("expression '{0}' does not name a materialized open set")]
    NotMaterialized(String),
    #[error("topology import is inconsistent: {0}")]
    BadTopologyImport(String),

    // presheaf / analysis
    #[error("open set {v} is not a subset of open set {u}; restriction undefined")]
    NotNested { u: usize, v: usize },
    #[error("unknown statistic '{0}'")]
    UnknownStatistic(String),
    #[error("statistic mean_loss needs a loss for every item, but item '{id}' has none")]
    MissingLoss { id: String },
    #[error("topology covers {topology} items but the evaluation context has {context}")]
    ContextMismatch { topology: usize, context: usize },
    #[error("assignment covers {assignment} open sets but the topology has {topology}")]
    AssignmentMismatch { assignment: usize, topology: usize },

    #[error("open set {0} was given more than one value")]
    DuplicateValue(usize),

    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
