//! Error types shared across the crate.

use thiserror::Error;

use crate::vec2::Vec2;

#[derive(Debug, Error)]
pub enum Error {
    /// A velocity field failed a structural check at construction.
    #[error("invalid flow field: {0}")]
    InvalidFlow(String),

    /// Configuration value out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation received an argument outside its contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A solver ran out of pseudo-time or iterations before meeting its
    /// tolerance. Carries the best estimate so batch drivers can record it.
    #[error("solver did not converge: {message} (best estimate {best_estimate}, defect {defect})")]
    NonConvergence {
        message: String,
        best_estimate: f64,
        defect: f64,
    },

    /// Weak-flow expansion requested at a direction resonant with a flow mode.
    #[error("resonant direction: p = ({}, {}) is orthogonal to active mode k = ({}, {})", p.x, p.y, k[0], k[1])]
    ResonantDirection { p: Vec2, k: [i32; 2] },

    /// Bracketing for a 1-d search failed.
    #[error("bracket search failed: {0}")]
    BracketFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
