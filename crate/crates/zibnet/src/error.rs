//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite objective value encountered at x = {0}")]
    NonFiniteObjective(f64),

    #[error("margin has only {0} nonzero observations; at least 3 are required")]
    TooFewNonzero(usize),

    #[error("margins are mutually exclusive: only {0} co-nonzero observation(s)")]
    MutuallyExclusive(usize),

    #[error("design matrix is rank deficient")]
    RankDeficientDesign,

    #[error("unsupported link function: {0}")]
    UnsupportedLink(String),

    #[error("profile log-likelihood has nonpositive curvature at the optimum; test undefined ({0})")]
    NonpositiveCurvature(f64),

    #[error("sampler guards exhausted after {0} redraw attempts")]
    GuardExhausted(u32),

    #[error("too few observations for jackknife: n = {n}, parameters = {params}")]
    TooFewForJackknife { n: usize, params: usize },

    #[error("parse error in {path} at row {row}, column {col}: {msg}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error("duplicate identifier: {0}")]
    DuplicateId(String),

    #[error("no overlapping sample ids between abundance and covariate tables")]
    NoOverlap,

    #[error("no taxa remain after filtering")]
    EmptyAfterFilter,

    #[error("covariate column not found: {0}")]
    MissingColumn(String),

    #[error("empty taxon set")]
    EmptyTaxa,

    #[error("requested {k} clusters but the graph has {n} nodes")]
    TooManyClusters { k: usize, n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        source: csv::Error,
    },
}
