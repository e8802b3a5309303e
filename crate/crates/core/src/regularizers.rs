//! Quadratic regularizers `J(f) = ||L f||^2` and the kernel checks that make
//! the penalized problem well posed for a given forward operator.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::linops::LinearOperator;
use crate::vector::norm_sq;

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    Identity,
    FirstDifference,
    Custom,
}

#[derive(Debug, Clone)]
pub struct Regularizer {
    seminorm: LinearOperator,
    kind: RegularizerKind,
}

/// Outcome of checking a regularizer against a forward operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionReport {
    /// Set to `strictly_convex_along_kernel || ker L = {0}`; coercivity of a
    /// seminorm is only meaningful here in this problem-restricted sense.
    pub coercive_on_problem: bool,
    pub strictly_convex_along_kernel: bool,
    /// `dim(ker A ∩ ker L)`
    pub kernel_intersection_dim: usize,
    /// Always true for quadratic J: its minimum 0 is attained on ker L.
    pub attains_min_on_kernel: bool,
}

impl AssumptionReport {
    pub fn holds(&self) -> bool {
        self.strictly_convex_along_kernel && self.attains_min_on_kernel
    }
}

impl Regularizer {
    /// Classical Tikhonov, `J(f) = ||f||^2`.
    pub fn identity(n: usize) -> Result<Self> {
        Ok(Regularizer {
            seminorm: LinearOperator::identity(n)?,
            kind: RegularizerKind::Identity,
        })
    }

    /// `J(f) = sum_i (f[i+1] - f[i])^2`, with L of shape `(n-1) x n`.
    pub fn first_difference(n: usize) -> Result<Self> {
        Ok(Regularizer {
            seminorm: first_difference_operator(n)?,
            kind: RegularizerKind::FirstDifference,
        })
    }

    pub fn custom(seminorm: LinearOperator) -> Self {
        Regularizer {
            seminorm,
            kind: RegularizerKind::Custom,
        }
    }

    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    pub fn seminorm_operator(&self) -> &LinearOperator {
        &self.seminorm
    }

    /// Dimension of the space F the regularizer acts on.
    pub fn dim(&self) -> usize {
        self.seminorm.dim_f()
    }

    pub fn evaluate(&self, f: &[f64]) -> Result<f64> {
        Ok(norm_sq(&self.seminorm.apply(f)?))
    }

    /// `2 L*(L f)`
    pub fn gradient(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.seminorm.gram_apply(f)?;
        g.iter_mut().for_each(|v| *v *= 2.0);
        Ok(g)
    }

    /// Checks strict convexity of J along `ker A` by computing
    /// `dim(ker A ∩ ker L)`.
    ///
    /// A kernel basis of A is taken from the right singular vectors whose
    /// singular values fall below `tol * sigma_max(A)`; L restricted to that
    /// basis is then rank-tested with threshold `tol * sigma_max(L)`.
    pub fn check_assumptions(&self, a: &LinearOperator, tol: f64) -> Result<AssumptionReport> {
        check_len("regularizer domain", a.dim_f(), self.dim())?;
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("rank tolerance must be positive".into()));
        }
        let a_dense = a
            .to_dense()
            .ok_or(Error::UnsupportedCheck("forward operator"))?;
        let l_dense = self
            .seminorm
            .to_dense()
            .ok_or(Error::UnsupportedCheck("regularizer"))?;

        let ker_a = null_space(&a_dense, tol);
        let ker_l_trivial = null_space(&l_dense, tol).ncols() == 0;

        let intersection = if ker_a.ncols() == 0 {
            0
        } else {
            let restricted = &l_dense * &ker_a;
            let l_norm = singular_values(&l_dense).max();
            let cutoff = tol * l_norm;
            let rank = singular_values(&restricted)
                .iter()
                .filter(|&&s| s > cutoff)
                .count();
            ker_a.ncols() - rank
        };
        let strictly_convex = intersection == 0;
        Ok(AssumptionReport {
            coercive_on_problem: strictly_convex || ker_l_trivial,
            strictly_convex_along_kernel: strictly_convex,
            kernel_intersection_dim: intersection,
            attains_min_on_kernel: true,
        })
    }
}

fn first_difference_operator(n: usize) -> Result<LinearOperator> {
    if n < 2 {
        return Err(Error::InvalidInput(alloc::format!(
            "first difference needs at least 2 unknowns, got {n}"
        )));
    }
    let mut m = DMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        m[(i, i)] = -1.0;
        m[(i, i + 1)] = 1.0;
    }
    LinearOperator::dense(m)
}

/// Pads `m` with zero rows so the SVD yields a full set of right singular vectors.
fn padded(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows >= cols {
        m.clone()
    } else {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    }
}

fn singular_values(m: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    padded(m).svd(false, false).singular_values
}

/// Orthonormal basis (as columns) of the numerical null space of `m`.
fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let svd = padded(m).svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let cutoff = tol * sigma_max;
    let cols: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| sigma_max == 0.0 || s <= cutoff)
        .map(|(k, _)| k)
        .collect();
    let mut basis = DMatrix::zeros(n, cols.len());
    for (j, &k) in cols.iter().enumerate() {
        basis.column_mut(j).copy_from(&v_t.row(k).transpose());
    }
    basis
}
