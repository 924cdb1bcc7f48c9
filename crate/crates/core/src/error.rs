use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("jet order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),

    #[error("jet order {0} outside supported range 0..={max}", max = crate::jet::MAX_ORDER)]
    InvalidOrder(usize),

    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("jet order exhausted: {what} needs derivative depth {needed}, available order is {available}")]
    OrderExhausted {
        what: String,
        needed: usize,
        available: usize,
    },

    #[error("invalid tensor slot(s) {slots:?} for valence {valence}")]
    InvalidSlot { slots: Vec<usize>, valence: usize },

    #[error("valence mismatch: {0} vs {1}")]
    ValenceMismatch(usize, usize),

    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("metric has no potential function")]
    MissingPotential,

    #[error("critical point of the potential: |grad f|^2 = {0:e}")]
    CriticalPoint(f64),

    #[error("{what} requires dimension >= {min}, got {dim}")]
    UnsupportedDimension {
        what: &'static str,
        dim: usize,
        min: usize,
    },

    #[error("spec line {line}: {msg}")]
    SpecFormat { line: usize, msg: String },

    #[error("unknown catalog entry \"{0}\"")]
    UnknownCatalog(String),

    #[error("invalid parameter {name}: {msg}")]
    InvalidParameter { name: String, msg: String },

    #[error("point {point:?} lies outside the chart domain")]
    PointOutsideDomain { point: Vec<f64> },

    #[error("unknown tensor \"{0}\"")]
    UnknownTensor(String),
}
