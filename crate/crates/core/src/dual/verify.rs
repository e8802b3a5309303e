use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::SelectionResult;
use crate::error::{Error, Result};
use crate::lagrange::{Lagrangian, OPTIMALITY_RTOL};
use crate::vector::{norm, norm_sq};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub rtol: f64,
    pub probes: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            rtol: 1e-8,
            probes: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// `|‖A f - g‖² - τ²| > rtol τ²`
    Discrepancy { relative_error: f64 },
    /// Stationarity of `L(·, λ̄)` fails at f_star.
    Optimality { residual: f64, bound: f64 },
    /// A perturbation lowered `L(·, λ̄)`.
    Minimality { probe: usize, decrease: f64 },
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub discrepancy_relative_error: f64,
    pub optimality_residual: f64,
    pub optimality_bound: f64,
    pub probes_checked: usize,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-checks a selection against the problem: active discrepancy,
/// stationarity at `(f_star, λ̄)` and `L(f_star, λ̄) <= L(f_star + δ, λ̄)` for
/// random δ.
pub fn verify_morozov_solution(
    res: &SelectionResult,
    lag: &Lagrangian,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    if !res.converged {
        return Err(Error::InvalidInput("cannot verify an unconverged selection".into()));
    }
    let lambda = res.lambda_star;
    let f = &res.f_star;
    let eps = lag.epsilon();
    let mut violations = Vec::new();

    let disc_sq = lag.operator().residual_norm_sq(f, lag.data())?;
    let discrepancy_relative_error = (disc_sq - eps).abs() / eps;
    if !(discrepancy_relative_error <= opts.rtol) {
        violations.push(Violation::Discrepancy {
            relative_error: discrepancy_relative_error,
        });
    }

    let optimality_residual = lag.optimality_residual(f, lambda)?;
    let atg = lag.operator().apply_adjoint(lag.data())?;
    let optimality_bound = OPTIMALITY_RTOL * (1.0 + 2.0 * lambda * norm(&atg));
    if !(optimality_residual <= optimality_bound) {
        violations.push(Violation::Optimality {
            residual: optimality_residual,
            bound: optimality_bound,
        });
    }

    let base = lag.lagrangian_value(f, lambda)?;
    let radius = 1e-3 * (1.0 + norm(f));
    let slack = 1e-12 * (1.0 + base.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut trial = f.clone();
    for probe in 0..opts.probes {
        let mut delta: Vec<f64> = (0..f.len()).map(|_| rng.sample(StandardNormal)).collect();
        let s = radius / libm::sqrt(norm_sq(&delta)).max(f64::MIN_POSITIVE);
        delta.iter_mut().for_each(|d| *d *= s);
        for ((t, fi), di) in trial.iter_mut().zip(f).zip(&delta) {
            *t = fi + di;
        }
        let value = lag.lagrangian_value(&trial, lambda)?;
        if value < base - slack {
            violations.push(Violation::Minimality {
                probe,
                decrease: base - value,
            });
            break;
        }
    }

    Ok(VerificationReport {
        discrepancy_relative_error,
        optimality_residual,
        optimality_bound,
        probes_checked: opts.probes,
        violations,
    })
}
