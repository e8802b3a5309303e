//! The dual function `D(λ) = inf_f L(f, λ)` of the discrepancy constraint.
//!
//! `D` is concave on `[0, ∞)` with `D(0) = 0`, right derivative
//! `D'(0) = ||g||^2 - ε`, and `D'(λ) = ||A f_λ - g||^2 - ε` for λ > 0. Its
//! maximizer λ̄ gives the Tikhonov parameter `α = 1/λ̄` whose solution sits
//! exactly on the discrepancy level `||A f - g|| = τ`.

mod maximize;
mod regime;
mod verify;

use alloc::vec::Vec;

pub use maximize::{maximize_dual, MaximizeOptions, Method, SelectionResult, StepRule};
pub use regime::{diagnose_regime, Regime, RegimeDiagnosis};
pub use verify::{verify_morozov_solution, VerificationReport, VerifyOptions, Violation};

use crate::error::{Error, Result};
use crate::lagrange::{LagrangeSolution, Lagrangian, SolveOptions};
use crate::vector::norm_sq;

/// `(λ, D(λ), D'(λ))` with the inner solution when λ > 0.
#[derive(Debug, Clone)]
pub struct DualEvaluation {
    pub lambda: f64,
    pub d_value: f64,
    pub d_prime: f64,
    pub solution: Option<LagrangeSolution>,
}

impl DualEvaluation {
    pub fn trace_point(&self) -> TracePoint {
        TracePoint {
            lambda: self.lambda,
            d_value: self.d_value,
            d_prime: self.d_prime,
        }
    }

    /// `||A f_λ - g||^2`, which at λ = 0 is `||g||^2` (f_0 = 0).
    pub fn discrepancy_sq(&self, lag: &Lagrangian) -> f64 {
        match &self.solution {
            Some(s) => s.discrepancy_sq,
            None => self.d_prime + lag.epsilon(),
        }
    }

    pub fn j_value(&self) -> f64 {
        self.solution.as_ref().map_or(0.0, |s| s.j_value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub lambda: f64,
    pub d_value: f64,
    pub d_prime: f64,
}

pub fn eval_dual(lag: &Lagrangian, lambda: f64, opts: &SolveOptions) -> Result<DualEvaluation> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        // inf J = 0 for quadratic J, no inner solve
        return Ok(DualEvaluation {
            lambda,
            d_value: 0.0,
            d_prime: norm_sq(lag.data()) - lag.epsilon(),
            solution: None,
        });
    }
    let solution = lag.solve_lagrange(lambda, opts)?;
    let d_prime = solution.discrepancy_sq - lag.epsilon();
    Ok(DualEvaluation {
        lambda,
        d_value: solution.j_value + lambda * d_prime,
        d_prime,
        solution: Some(solution),
    })
}

/// One grid point of a sweep; inner failures are kept in place.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub lambda: f64,
    pub result: Result<DualEvaluation>,
}

pub fn check_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("lambda grid is empty".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput("lambda grid must be positive and finite".into()));
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("lambda grid must be strictly ascending".into()));
    }
    Ok(())
}

pub fn sweep_dual(lag: &Lagrangian, lambdas: &[f64], opts: &SolveOptions) -> Result<Vec<SweepPoint>> {
    check_grid(lambdas)?;
    Ok(lambdas
        .iter()
        .map(|&lambda| SweepPoint {
            lambda,
            result: eval_dual(lag, lambda, opts),
        })
        .collect())
}

/// `points` values of λ spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) || points < 2 {
        return Err(Error::InvalidInput(alloc::format!(
            "log grid needs 0 < lo < hi and at least 2 points, got [{lo}, {hi}] x {points}"
        )));
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    let step = (b - a) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| libm::exp(a + step * i as f64)).collect();
    grid[0] = lo;
    grid[points - 1] = hi;
    Ok(grid)
}
