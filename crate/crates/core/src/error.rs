use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::ExprError;

/// Errors raised by the solver, mesh generators and problem analysis.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("expression error at x = {x}: {source}")]
    ExprAt { x: f64, source: ExprError },
    #[error("expression error in cell {cell}: {source}")]
    ExprInCell { cell: usize, source: ExprError },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("mesh construction failed: {0}")]
    Mesh(String),
    #[error("ambiguous layer classification at x = {x}: {reason}")]
    Ambiguous { x: f64, reason: String },
    #[error("singular pivot at dof {dof}")]
    SingularPivot { dof: usize },
    #[error("Newton iteration failed after {} steps: {reason}", trace.len())]
    Newton {
        reason: String,
        trace: Vec<crate::fem::NewtonStep>,
    },
    #[error("transformation check failed: {0}")]
    Transform(String),
    #[error("point {x} outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
