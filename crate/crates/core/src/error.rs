//! Error type shared by every module of the crate.

use thiserror::Error;

/// Stage of `recover_phi_algebra` at which matching failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStage {
    /// No planar family coefficient pattern fits the system.
    Pattern,
    /// A pattern fits but the extracted fields are not gradients.
    Conservativeness,
}

impl std::fmt::Display for MatchStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatchStage::Pattern => write!(f, "pattern"),
            MatchStage::Conservativeness => write!(f, "conservativeness"),
        }
    }
}

/// Errors raised by algebra construction, calculus routines and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structure constants are not commutative at (i={i}, j={j}, k={k})")]
    NotCommutative { i: usize, j: usize, k: usize },

    #[error("structure constants are not associative at (i={i}, j={j}, k={k}), deviation {deviation:e}")]
    AssociativityViolation {
        i: usize,
        j: usize,
        k: usize,
        deviation: f64,
    },

    #[error("declared unit fails u*e_{index} = e_{index} (deviation {deviation:e})")]
    NoUnit { index: usize, deviation: f64 },

    #[error("element is singular (sigma_min/sigma_max = {ratio:e})")]
    SingularElement { ratio: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("no regular direction found for dphi at the given point")]
    NotFound,

    #[error("Newton inversion of phi did not converge within {iterations} iterations")]
    PhiNotInvertible { iterations: usize },

    #[error("system does not match any planar family (failed at {stage} stage)")]
    NoMatch { stage: MatchStage },

    #[error("systems are not equivalent: {0}")]
    NotEquivalent(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("compatibility condition violated: {0}")]
    ConditionViolated(String),

    #[error("coefficient determinant vanishes and the linear system is inconsistent (residual {residual:e})")]
    DeltaZeroInconsistent { residual: f64 },

    #[error("leading coefficient b1 vanishes")]
    B1Zero,

    #[error("Newton iteration diverged after {iterations} iterations")]
    NewtonDivergence { iterations: usize },

    #[error("iteration did not converge; last differences {history:?}")]
    NoConvergence { history: Vec<f64> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
