use morozov_core::dual::{check_grid, eval_dual, SweepPoint};
use morozov_core::{Lagrangian, SolveOptions};
use rayon::prelude::*;

/// Parallel counterpart of [`morozov_core::sweep_dual`]; points come back in grid order.
pub fn sweep_parallel(
    lag: &Lagrangian,
    lambdas: &[f64],
    opts: &SolveOptions,
) -> morozov_core::Result<Vec<SweepPoint>> {
    check_grid(lambdas)?;
    Ok(lambdas
        .par_iter()
        .map(|&lambda| SweepPoint {
            lambda,
            result: eval_dual(lag, lambda, opts),
        })
        .collect())
}
