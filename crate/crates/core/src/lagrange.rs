//! The Lagrangian `L(f, λ) = J(f) + λ (||A f - g||^2 - ε)` and its exact
//! minimization for quadratic J.
//!
//! For λ > 0 the minimizer solves the SPD system
//! `(L*L + λ A*A) f = λ A* g`, which is the Tikhonov problem with α = 1/λ
//! kept in a form that stays well posed as λ ↓ 0.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::cg::conjugate_gradient;
use crate::error::{check_len, Error, Result};
use crate::linops::LinearOperator;
use crate::regularizers::{AssumptionReport, Regularizer};
use crate::vector::{norm, norm_sq, scale};

/// Largest multiplier accepted by the inner solver.
pub const LAMBDA_MAX: f64 = 1e12;
/// Default relative residual for the iterative inner solve.
pub const DEFAULT_INNER_TOL: f64 = 1e-10;
/// Accepted solutions satisfy `optimality_residual <= OPTIMALITY_RTOL * (1 + ||2 λ A* g||)`.
pub const OPTIMALITY_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Cholesky factorization of the assembled system.
    Direct,
    /// Conjugate gradients on the same system, optionally Jacobi-preconditioned.
    ConjugateGradient { jacobi: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub method: SolveMethod,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: SolveMethod::Direct,
            tol: DEFAULT_INNER_TOL,
        }
    }
}

impl SolveOptions {
    pub fn iterative() -> Self {
        SolveOptions {
            method: SolveMethod::ConjugateGradient { jacobi: false },
            tol: DEFAULT_INNER_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverStats {
    pub method: SolveMethod,
    /// CG iterations; 0 for the direct path.
    pub iterations: usize,
    /// Final `||b - M f|| / ||b||` of the scaled optimality system.
    pub relative_residual: f64,
}

/// Unique minimizer of `L(·, λ)` with its diagnostics.
#[derive(Debug, Clone)]
pub struct LagrangeSolution {
    pub lambda: f64,
    pub f_lambda: Vec<f64>,
    /// `||A f_λ - g||^2`
    pub discrepancy_sq: f64,
    /// `J(f_λ)`
    pub j_value: f64,
    /// `||∇J(f_λ) + 2λ (A*A f_λ - A* g)||`
    pub optimality_residual: f64,
    pub stats: SolverStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceSetup {
    /// `||g||^2 >= ε`: the equality- and inequality-constrained problems coincide.
    Ok,
    Degenerate,
}

struct DenseCache {
    ata: DMatrix<f64>,
    ltl: DMatrix<f64>,
    atg: DVector<f64>,
}

/// Problem data `(A, g, J)` together with the squared tolerance `ε = τ^2`.
pub struct Lagrangian {
    a: LinearOperator,
    g: Vec<f64>,
    reg: Regularizer,
    epsilon: f64,
    atg: Vec<f64>,
    dense: Option<DenseCache>,
}

impl core::fmt::Debug for Lagrangian {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Lagrangian")
            .field("a", &self.a)
            .field("reg", &self.reg)
            .field("epsilon", &self.epsilon)
            .finish_non_exhaustive()
    }
}

impl Lagrangian {
    pub fn new(a: LinearOperator, g: Vec<f64>, reg: Regularizer, epsilon: f64) -> Result<Self> {
        check_len("data vector g", a.dim_g(), g.len())?;
        check_len("regularizer domain", a.dim_f(), reg.dim())?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("data vector has non-finite entries".into()));
        }
        let atg = a.apply_adjoint(&g)?;
        let dense = match (a.to_dense(), reg.seminorm_operator().to_dense()) {
            (Some(am), Some(lm)) => Some(DenseCache {
                ata: am.tr_mul(&am),
                ltl: lm.tr_mul(&lm),
                atg: DVector::from_column_slice(&atg),
            }),
            _ => None,
        };
        Ok(Lagrangian {
            a,
            g,
            reg,
            epsilon,
            atg,
            dense,
        })
    }

    /// Same as [`Lagrangian::new`] with `ε = tau^2`.
    pub fn with_tau(a: LinearOperator, g: Vec<f64>, reg: Regularizer, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidInput(alloc::format!("tau must be positive, got {tau}")));
        }
        Self::new(a, g, reg, tau * tau)
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.a
    }

    pub fn data(&self) -> &[f64] {
        &self.g
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.reg
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau(&self) -> f64 {
        libm::sqrt(self.epsilon)
    }

    pub fn check_assumptions(&self, tol: f64) -> Result<AssumptionReport> {
        self.reg.check_assumptions(&self.a, tol)
    }

    /// `J(f) + λ (||A f - g||^2 - ε)`
    pub fn lagrangian_value(&self, f: &[f64], lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "lambda must be nonnegative, got {lambda}"
            )));
        }
        let j = self.reg.evaluate(f)?;
        let r = self.a.residual_norm_sq(f, &self.g)?;
        Ok(j + lambda * (r - self.epsilon))
    }

    pub fn validate_tolerance_setup(&self) -> ToleranceSetup {
        if norm_sq(&self.g) >= self.epsilon {
            ToleranceSetup::Ok
        } else {
            ToleranceSetup::Degenerate
        }
    }

    /// Minimizes `L(·, λ)` for `0 < λ <= LAMBDA_MAX`.
    pub fn solve_lagrange(&self, lambda: f64, opts: &SolveOptions) -> Result<LagrangeSolution> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if lambda > LAMBDA_MAX {
            return Err(Error::InvalidInput(alloc::format!(
                "lambda {lambda:e} exceeds the conditioning guard {LAMBDA_MAX:e}"
            )));
        }
        let (f, stats) = match opts.method {
            SolveMethod::Direct => self.solve_direct(lambda)?,
            SolveMethod::ConjugateGradient { jacobi } => self.solve_cg(lambda, jacobi, opts.tol)?,
        };

        let discrepancy_sq = self.a.residual_norm_sq(&f, &self.g)?;
        let j_value = self.reg.evaluate(&f)?;
        let optimality_residual = self.optimality_residual(&f, lambda)?;
        let bound = OPTIMALITY_RTOL * (1.0 + 2.0 * lambda * norm(&self.atg));
        if !(optimality_residual <= bound) {
            return Err(Error::InaccurateSolve {
                lambda,
                residual: optimality_residual,
                bound,
            });
        }
        Ok(LagrangeSolution {
            lambda,
            f_lambda: f,
            discrepancy_sq,
            j_value,
            optimality_residual,
            stats,
        })
    }

    /// Norm of `∇J(f) + 2λ (A*A f - A* g)`.
    pub fn optimality_residual(&self, f: &[f64], lambda: f64) -> Result<f64> {
        let mut grad = self.reg.gradient(f)?;
        let ata_f = self.a.gram_apply(f)?;
        for ((gi, ai), bi) in grad.iter_mut().zip(&ata_f).zip(&self.atg) {
            *gi += 2.0 * lambda * (ai - bi);
        }
        Ok(norm(&grad))
    }

    fn singular_system() -> Error {
        Error::AssumptionViolation(
            "L*L + λA*A is singular: ker A ∩ ker L is nontrivial".into(),
        )
    }

    fn solve_direct(&self, lambda: f64) -> Result<(Vec<f64>, SolverStats)> {
        let owned;
        let cache = match &self.dense {
            Some(c) => c,
            None => {
                let am = self.a.materialize();
                let lm = self.reg.seminorm_operator().materialize();
                owned = DenseCache {
                    ata: am.tr_mul(&am),
                    ltl: lm.tr_mul(&lm),
                    atg: DVector::from_column_slice(&self.atg),
                };
                &owned
            }
        };
        let system = &cache.ltl + &cache.ata * lambda;
        let rhs = &cache.atg * lambda;
        let chol = system
            .clone()
            .cholesky()
            .ok_or_else(Self::singular_system)?;
        let mut f = chol.solve(&rhs);
        // one step of iterative refinement
        let r = &rhs - &system * &f;
        f += chol.solve(&r);
        let res = (&rhs - &system * &f).norm();
        let rhs_norm = rhs.norm();
        let relative_residual = if rhs_norm > 0.0 { res / rhs_norm } else { res };
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Self::singular_system());
        }
        Ok((
            f.as_slice().to_vec(),
            SolverStats {
                method: SolveMethod::Direct,
                iterations: 0,
                relative_residual,
            },
        ))
    }

    fn solve_cg(&self, lambda: f64, jacobi: bool, tol: f64) -> Result<(Vec<f64>, SolverStats)> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("inner tolerance must be positive".into()));
        }
        let n = self.a.dim_f();
        let l = self.reg.seminorm_operator();
        let rhs = scale(lambda, &self.atg);
        let inv_diag = if jacobi {
            let d = self.system_diagonal(lambda);
            if d.iter().any(|&v| !(v > 0.0)) {
                return Err(Self::singular_system());
            }
            Some(d.iter().map(|v| 1.0 / v).collect::<Vec<_>>())
        } else {
            None
        };
        let mut ta = vec![0.0; self.a.dim_g()];
        let mut tl = vec![0.0; l.dim_g()];
        let mut tmp = vec![0.0; n];
        let apply = |x: &[f64], out: &mut [f64]| {
            l.apply_into(x, &mut tl);
            l.apply_adjoint_into(&tl, out);
            self.a.apply_into(x, &mut ta);
            self.a.apply_adjoint_into(&ta, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += lambda * t;
            }
        };
        let max_iter = 10 * n;
        let out = conjugate_gradient(apply, &rhs, inv_diag.as_deref(), tol, max_iter);
        if !out.converged {
            return Err(Error::ConvergenceFailure {
                what: "conjugate gradient inner solve",
                iterations: out.iterations,
                best: out.relative_residual,
            });
        }
        Ok((
            out.x,
            SolverStats {
                method: SolveMethod::ConjugateGradient { jacobi },
                iterations: out.iterations,
                relative_residual: out.relative_residual,
            },
        ))
    }

    /// `diag(L*L + λ A*A)`, probing matrix-free operators with unit vectors.
    fn system_diagonal(&self, lambda: f64) -> Vec<f64> {
        if let Some(c) = &self.dense {
            return (0..c.ata.nrows())
                .map(|i| c.ltl[(i, i)] + lambda * c.ata[(i, i)])
                .collect();
        }
        let n = self.a.dim_f();
        let l = self.reg.seminorm_operator();
        let mut e = vec![0.0; n];
        let mut ae = vec![0.0; self.a.dim_g()];
        let mut le = vec![0.0; l.dim_g()];
        (0..n)
            .map(|j| {
                e[j] = 1.0;
                self.a.apply_into(&e, &mut ae);
                l.apply_into(&e, &mut le);
                e[j] = 0.0;
                norm_sq(&le) + lambda * norm_sq(&ae)
            })
            .collect()
    }
}
