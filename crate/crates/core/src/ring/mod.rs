//! Group rings `ℚG`, `ℝG` (floats) and interval-`G`, and matrices over them.

mod coeff;
mod element;
mod matrix;
mod sos;

use thiserror::Error;

use crate::groups::GroupError;

pub use coeff::{format_f64, rational_from_f64, rational_from_i64, Coefficient, Interval, Rational};
pub use element::RingElement;
pub use matrix::RingMatrix;
pub use sos::{order_unit_sos, sos_sum, verify_sos, SosTerm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("operands live over different group models")]
    ModelMismatch,
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("matrix is not *-invariant")]
    NotStarInvariant,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("malformed matrix file: {0}")]
    Json(String),
}
