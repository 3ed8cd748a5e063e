use thiserror::Error;

use crate::bound::BoundResult;
use crate::model::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("observation {observation} has zero likelihood under action {action} at the given belief")]
    ImpossibleObservation { action: usize, observation: usize },

    #[error("exact backup would produce {requested} vectors, cap is {cap}")]
    SizeBudgetExceeded { requested: usize, cap: usize },

    #[error("finite difference step |{lambda_curr} - {lambda_prev}| is below 1e-12")]
    DegenerateStep { lambda_curr: f64, lambda_prev: f64 },

    #[error("multiplier search hit the iteration cap; best bound {:.6} at lambda {:.6}", .best.bound_value, .best.lambda_star)]
    NoConvergence { best: Box<BoundResult> },

    #[error("Q-gap does not change sign on [{lo}, {hi}]: gap(lo) = {gap_lo}, gap(hi) = {gap_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        gap_lo: f64,
        gap_hi: f64,
    },

    #[error("joint action costs {cost} but the budget is {budget}")]
    InfeasibleAction { cost: usize, budget: usize },

    #[error("brute-force tree needs {nodes} nodes (cap {cap}, horizon {horizon})")]
    TooLarge {
        nodes: f64,
        cap: f64,
        horizon: usize,
    },

    #[error("invalid model: {} violation(s)", .0.len())]
    InvalidModel(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
