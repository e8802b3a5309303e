//! Tikhonov regularization with the parameter chosen by dual ascent on the
//! discrepancy constraint `||A f - g||^2 = τ^2`.
//!
//! For a quadratic regularizer `J(f) = ||L f||^2` the Lagrangian
//! `L(f, λ) = J(f) + λ (||A f - g||^2 - τ^2)` is minimized exactly; its
//! optimal value `D(λ)` is concave with `D'(λ) = ||A f_λ - g||^2 - τ^2`, so
//! maximizing `D` finds the multiplier whose Tikhonov solution (with
//! `α = 1/λ`) meets the discrepancy level exactly.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

mod cg;
pub mod dual;
pub mod error;
pub mod lagrange;
pub mod linops;
pub mod problems;
pub mod regularizers;
pub mod vector;

pub use dual::{
    diagnose_regime, eval_dual, maximize_dual, sweep_dual, verify_morozov_solution,
    DualEvaluation, MaximizeOptions, Method, Regime, RegimeDiagnosis, SelectionResult, StepRule,
    SweepPoint, TracePoint,
};
pub use error::{Error, Result};
pub use lagrange::{LagrangeSolution, Lagrangian, SolveMethod, SolveOptions, ToleranceSetup};
pub use linops::{LinearOperator, VectorSpaceDims};
pub use problems::InverseProblem;
pub use regularizers::{AssumptionReport, Regularizer, RegularizerKind};
