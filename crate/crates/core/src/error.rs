use alloc::boxed::Box;
use alloc::string::String;

use crate::solver::Trajectory;

/// Errors raised by the numerical operations of this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("root finding failed: {0}")]
    Convergence(String),
    #[error("no finite-difference stencil available at row {row}, column {col}")]
    Mask { row: usize, col: usize },
    #[error("jet order {requested} exceeds derivative capacity {capacity}")]
    Order { requested: usize, capacity: usize },
    #[error("unstable configuration: {0}")]
    Stability(String),
    #[error("non-finite value encountered at t = {time}")]
    NonFinite {
        time: f64,
        /// Frames recorded up to the last finite step.
        partial: Box<Trajectory>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("point (t = {t}, r = {r}) lies outside the stored trajectory")]
    Range { t: f64, r: f64 },
    #[error("insufficient coverage: {0}")]
    Coverage(String),
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = core::result::Result<T, Error>;
