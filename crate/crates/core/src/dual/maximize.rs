use alloc::string::ToString;
use alloc::vec::Vec;

use super::{diagnose_regime, eval_dual, DualEvaluation, Regime, TracePoint};
use crate::error::{Error, Result};
use crate::lagrange::{Lagrangian, SolveOptions, LAMBDA_MAX};
use crate::regularizers::DEFAULT_RANK_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bisection,
    Secant,
    GradientAscent,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bisection => "bisection",
            Method::Secant => "secant",
            Method::GradientAscent => "gradient_ascent",
        }
    }
}

/// Step size ρ_n of the dual ascent `λ_n = λ_{n-1} + ρ_n D'(λ_{n-1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// `ρ_n = c / n`
    Diminishing(f64),
}

impl StepRule {
    fn step(&self, n: usize) -> f64 {
        match *self {
            StepRule::Constant(c) => c,
            StepRule::Diminishing(c) => c / n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizeOptions {
    pub method: Method,
    /// Convergence is declared once `|D'(λ)| <= rtol * ε`.
    pub rtol: f64,
    /// Cap on dual evaluations, bracket search included.
    pub max_iter: usize,
    /// Starting point of the bracket search (ignored by gradient ascent, which starts at 0).
    pub lambda_init: f64,
    pub step_rule: StepRule,
    pub lambda_max: f64,
    pub inner: SolveOptions,
    /// Run even when the regime diagnosis is not interior.
    pub override_regime: bool,
    pub rank_tol: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            method: Method::Bisection,
            rtol: 1e-8,
            max_iter: 200,
            lambda_init: 1.0,
            step_rule: StepRule::Diminishing(2.0),
            lambda_max: LAMBDA_MAX,
            inner: SolveOptions::default(),
            override_regime: false,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub lambda_star: f64,
    /// Always `1.0 / lambda_star`.
    pub alpha: f64,
    pub f_star: Vec<f64>,
    /// `||A f_star - g||`
    pub discrepancy: f64,
    /// The τ the selection targeted, `sqrt(ε)`.
    pub tau: f64,
    /// `None` only when the diagnosis itself failed under `override_regime`.
    pub regime: Option<Regime>,
    pub iterations: Vec<TracePoint>,
    pub method: Method,
    pub converged: bool,
    /// False when the kernel check could not run (matrix-free operators).
    pub uniqueness_certified: bool,
}

/// Maximizes the dual function and returns `λ̄` with the Tikhonov parameter `α = 1/λ̄`.
///
/// Refuses non-interior regimes unless `override_regime` is set, and refuses
/// dense problems whose regularizer is not strictly convex along `ker A`.
pub fn maximize_dual(lag: &Lagrangian, opts: &MaximizeOptions) -> Result<SelectionResult> {
    if !(opts.rtol > 0.0) {
        return Err(Error::InvalidInput("rtol must be positive".into()));
    }
    if !(opts.lambda_init > 0.0 && opts.lambda_init <= opts.lambda_max) {
        return Err(Error::InvalidInput(
            "lambda_init must lie in (0, lambda_max]".into(),
        ));
    }
    let diagnosis = diagnose_regime(lag.operator(), lag.data(), lag.tau());
    let regime = match diagnosis {
        Ok(d) if d.regime != Regime::Interior && !opts.override_regime => {
            return Err(Error::RegimePrecondition {
                regime: d.regime,
                detail: alloc::format!(
                    "{} (dist = {:e}, ||g|| = {:e}, tau = {:e})",
                    d.failed_inequality().unwrap_or(""),
                    d.dist_to_range,
                    d.data_norm,
                    d.tau
                ),
            })
        }
        Ok(d) => Some(d.regime),
        Err(_) if opts.override_regime => None,
        Err(e) => return Err(e),
    };

    let uniqueness_certified = match lag.check_assumptions(opts.rank_tol) {
        Ok(report) if report.holds() => true,
        Ok(report) => {
            return Err(Error::AssumptionViolation(alloc::format!(
                "J is not strictly convex along ker A (dim(ker A ∩ ker L) = {}); \
                 the dual maximizer cannot be certified to give a unique solution",
                report.kernel_intersection_dim
            )))
        }
        Err(Error::UnsupportedCheck(_)) => false,
        Err(e) => return Err(e),
    };

    let mut search = Search {
        lag,
        opts,
        trace: Vec::new(),
    };
    let best = match opts.method {
        Method::Bisection => search.bracketed(false)?,
        Method::Secant => search.bracketed(true)?,
        Method::GradientAscent => search.gradient_ascent()?,
    };
    let solution = best
        .solution
        .expect("converged dual evaluations are taken at lambda > 0");
    Ok(SelectionResult {
        lambda_star: best.lambda,
        alpha: 1.0 / best.lambda,
        discrepancy: libm::sqrt(solution.discrepancy_sq),
        f_star: solution.f_lambda,
        tau: lag.tau(),
        regime,
        iterations: search.trace,
        method: opts.method,
        converged: true,
        uniqueness_certified,
    })
}

struct Search<'a> {
    lag: &'a Lagrangian,
    opts: &'a MaximizeOptions,
    trace: Vec<TracePoint>,
}

impl Search<'_> {
    fn eval(&mut self, lambda: f64) -> Result<DualEvaluation> {
        if self.trace.len() >= self.opts.max_iter {
            return Err(self.non_convergence());
        }
        let e = eval_dual(self.lag, lambda, &self.opts.inner)?;
        self.trace.push(e.trace_point());
        Ok(e)
    }

    fn non_convergence(&self) -> Error {
        Error::NonConvergence {
            max_iter: self.opts.max_iter,
            trace: self.trace.clone(),
        }
    }

    fn done(&self, e: &DualEvaluation) -> bool {
        e.lambda > 0.0 && e.d_prime.abs() <= self.opts.rtol * self.lag.epsilon()
    }

    /// Finds `lo < hi` with `D'(lo) > 0 > D'(hi)`, returning early on a root.
    fn bracket(&mut self) -> Result<core::result::Result<(DualEvaluation, DualEvaluation), DualEvaluation>> {
        let first = self.eval(self.opts.lambda_init)?;
        if self.done(&first) {
            return Ok(Err(first));
        }
        if first.d_prime > 0.0 {
            let mut lo = first;
            loop {
                let next = 2.0 * lo.lambda;
                if next > self.opts.lambda_max {
                    return Err(Error::BracketNotFound {
                        lambda_max: self.opts.lambda_max,
                        trace: self.trace.clone(),
                    });
                }
                let hi = self.eval(next)?;
                if self.done(&hi) {
                    return Ok(Err(hi));
                }
                if hi.d_prime < 0.0 {
                    return Ok(Ok((lo, hi)));
                }
                lo = hi;
            }
        } else {
            let mut hi = first;
            loop {
                let next = 0.5 * hi.lambda;
                // D'(0) = ||g||^2 - ε closes the bracket if halving underflows
                let lo = if next < f64::MIN_POSITIVE {
                    eval_dual(self.lag, 0.0, &self.opts.inner)?
                } else {
                    self.eval(next)?
                };
                if self.done(&lo) {
                    return Ok(Err(lo));
                }
                if lo.d_prime > 0.0 {
                    return Ok(Ok((lo, hi)));
                }
                if lo.lambda == 0.0 {
                    return Err(Error::RegimePrecondition {
                        regime: Regime::NoiseDominates,
                        detail: "D'(0) <= 0: tau >= ||g||".to_string(),
                    });
                }
                hi = lo;
            }
        }
    }

    /// Bisection on the nonincreasing D', optionally accelerated by secant
    /// steps that fall back to bisection when they leave the bracket.
    fn bracketed(&mut self, secant: bool) -> Result<DualEvaluation> {
        let (mut lo, mut hi) = match self.bracket()? {
            Ok(pair) => pair,
            Err(root) => return Ok(root),
        };
        let (mut prev, mut last) = (lo.trace_point(), hi.trace_point());
        loop {
            let mid = 0.5 * (lo.lambda + hi.lambda);
            let mut next = mid;
            if secant {
                let denom = last.d_prime - prev.d_prime;
                let cand = last.lambda - last.d_prime * (last.lambda - prev.lambda) / denom;
                if cand.is_finite() && cand > lo.lambda && cand < hi.lambda {
                    next = cand;
                }
            }
            if !(next > lo.lambda && next < hi.lambda) {
                // bracket exhausted in floating point
                return Err(self.non_convergence());
            }
            let e = self.eval(next)?;
            if self.done(&e) {
                return Ok(e);
            }
            prev = last;
            last = e.trace_point();
            if e.d_prime > 0.0 {
                lo = e;
            } else {
                hi = e;
            }
        }
    }

    /// Dual ascent from λ_0 = 0, projected onto `[0, lambda_max]`.
    fn gradient_ascent(&mut self) -> Result<DualEvaluation> {
        let mut lambda = 0.0;
        for n in 1.. {
            let e = self.eval(lambda)?;
            if self.done(&e) {
                return Ok(e);
            }
            let step = self.opts.step_rule.step(n);
            lambda = (lambda + step * e.d_prime).clamp(0.0, self.opts.lambda_max);
        }
        unreachable!()
    }
}
