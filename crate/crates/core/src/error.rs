use alloc::string::String;
use alloc::vec::Vec;

use crate::dual::{Regime, TracePoint};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} did not converge after {iterations} iterations (best value {best:e})")]
    ConvergenceFailure {
        what: &'static str,
        iterations: usize,
        best: f64,
    },

    #[error("inner solve at lambda = {lambda:e} is inaccurate: optimality residual {residual:e} exceeds {bound:e}")]
    InaccurateSolve { lambda: f64, residual: f64, bound: f64 },

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("check unsupported for matrix-free operators; densify the operator first ({0})")]
    UnsupportedCheck(&'static str),

    #[error("regime precondition failed: {regime} ({detail})")]
    RegimePrecondition { regime: Regime, detail: String },

    #[error("no sign change of the dual derivative found below lambda_max = {lambda_max:e}")]
    BracketNotFound { lambda_max: f64, trace: Vec<TracePoint> },

    #[error("dual maximization did not converge within {max_iter} iterations")]
    NonConvergence {
        max_iter: usize,
        trace: Vec<TracePoint>,
    },
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
