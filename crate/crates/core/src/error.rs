use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("quantile count Q={q} out of range (must satisfy 2 <= Q <= {max})")]
    QuantileOutOfRange { q: usize, max: usize },

    #[error("quantile fraction {0} must lie strictly between 0 and 1")]
    BadQuantileFraction(f64),

    #[error("column {column}: {reason}")]
    BadColumn { column: String, reason: String },

    #[error("condition references feature {index} but dataset has {count} columns")]
    MissingColumn { index: usize, count: usize },

    #[error("condition kind does not match the type of column {column}")]
    ConditionKindMismatch { column: String },

    #[error("coupling ({i}, {j}) is not strictly upper-triangular within {n} variables")]
    MalformedCoupling { i: usize, j: usize, n: usize },

    #[error("non-finite coefficient for variable(s) {0}")]
    NonFiniteCoefficient(String),

    #[error("malformed QUBO text at line {line}: {reason}")]
    QuboParse { line: usize, reason: String },

    #[error("inequality bounds are reversed: alpha={alpha} > beta={beta}")]
    ReversedBounds { alpha: i64, beta: i64 },

    #[error("maximum condition count M={m} must satisfy 1 <= M <= N_B={n_b}")]
    BadConditionLimit { m: usize, n_b: usize },

    #[error("minimum split ratio a={0} must satisfy 0 <= a < 0.5")]
    BadSplitRatio(f64),

    #[error("penalty weights must be strictly positive")]
    BadWeights,

    #[error("assignment has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid annealing schedule: {0}")]
    BadSchedule(String),

    #[error("splitting vector selects no condition")]
    EmptySplittingVector,

    #[error("exhaustive search over {n_b} conditions exceeds the limit of {limit}")]
    TooManyConditions { n_b: usize, limit: usize },

    #[error("no splitting vector satisfies the split-ratio bound")]
    NoFeasibleSplit,

    #[error("ratio undefined for rho={rho}, gamma={gamma}")]
    RatioUndefined { rho: f64, gamma: f64 },

    #[error("invalid synthetic spec: {0}")]
    BadSyntheticSpec(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
