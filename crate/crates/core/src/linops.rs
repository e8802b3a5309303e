//! Linear operators between finite-dimensional real Euclidean spaces.
//!
//! An operator maps F = R^dim_f into G = R^dim_g and always knows its adjoint
//! with respect to the standard inner products. Operators are either backed by
//! a dense matrix (identity is special-cased) or by a pair of callbacks for the
//! forward and adjoint actions.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::vector::{axpy, dot, norm, norm_sq};

/// Action `out = op(x)` of a matrix-free operator. `out` is zeroed on entry.
pub type Action = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VectorSpaceDims {
    pub dim_f: usize,
    pub dim_g: usize,
}

impl VectorSpaceDims {
    pub fn new(dim_f: usize, dim_g: usize) -> Result<Self> {
        if dim_f == 0 || dim_g == 0 {
            return Err(Error::InvalidInput(alloc::format!(
                "operator dimensions must be positive, got {dim_g}x{dim_f}"
            )));
        }
        Ok(VectorSpaceDims { dim_f, dim_g })
    }
}

#[derive(Clone)]
enum Repr {
    Identity,
    Dense(DMatrix<f64>),
    MatrixFree { forward: Action, adjoint: Action },
}

/// The forward map F -> G together with its adjoint G -> F.
#[derive(Clone)]
pub struct LinearOperator {
    dims: VectorSpaceDims,
    repr: Repr,
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.repr {
            Repr::Identity => "identity",
            Repr::Dense(_) => "dense",
            Repr::MatrixFree { .. } => "matrix-free",
        };
        f.debug_struct("LinearOperator")
            .field("dims", &self.dims)
            .field("kind", &kind)
            .finish()
    }
}

impl LinearOperator {
    pub fn identity(n: usize) -> Result<Self> {
        Ok(LinearOperator {
            dims: VectorSpaceDims::new(n, n)?,
            repr: Repr::Identity,
        })
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        let dims = VectorSpaceDims::new(matrix.ncols(), matrix.nrows())?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(LinearOperator {
            dims,
            repr: Repr::Dense(matrix),
        })
    }

    /// Dense operator from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        check_len("row-major matrix data", rows * cols, data.len())?;
        Self::dense(DMatrix::from_row_slice(rows, cols, data))
    }

    /// Matrix-free operator. The caller is responsible for `adjoint` really
    /// being the adjoint of `forward`; [`LinearOperator::adjoint_mismatch`]
    /// can be used to probe it.
    pub fn matrix_free(dims: VectorSpaceDims, forward: Action, adjoint: Action) -> Self {
        LinearOperator {
            dims,
            repr: Repr::MatrixFree { forward, adjoint },
        }
    }

    pub fn dims(&self) -> VectorSpaceDims {
        self.dims
    }

    pub fn dim_f(&self) -> usize {
        self.dims.dim_f
    }

    pub fn dim_g(&self) -> usize {
        self.dims.dim_g
    }

    /// True when a dense matrix is available without probing.
    pub fn is_dense(&self) -> bool {
        !matches!(self.repr, Repr::MatrixFree { .. })
    }

    /// Dense matrix of the operator, or `None` for matrix-free operators.
    pub fn to_dense(&self) -> Option<DMatrix<f64>> {
        match &self.repr {
            Repr::Identity => Some(DMatrix::identity(self.dims.dim_g, self.dims.dim_f)),
            Repr::Dense(m) => Some(m.clone()),
            Repr::MatrixFree { .. } => None,
        }
    }

    /// Dense matrix of the operator, probing matrix-free operators column by column.
    pub fn materialize(&self) -> DMatrix<f64> {
        if let Some(m) = self.to_dense() {
            return m;
        }
        let (m, n) = (self.dims.dim_g, self.dims.dim_f);
        let mut out = DMatrix::zeros(m, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            out.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        out
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len("apply input", self.dims.dim_f, f.len())?;
        let mut out = vec![0.0; self.dims.dim_g];
        self.apply_into(f, &mut out);
        Ok(out)
    }

    pub fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("apply_adjoint input", self.dims.dim_g, y.len())?;
        let mut out = vec![0.0; self.dims.dim_f];
        self.apply_adjoint_into(y, &mut out);
        Ok(out)
    }

    /// `A* A f`
    pub fn gram_apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let af = self.apply(f)?;
        let mut out = vec![0.0; self.dims.dim_f];
        self.apply_adjoint_into(&af, &mut out);
        Ok(out)
    }

    /// `||A f - g||^2`
    pub fn residual_norm_sq(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        check_len("residual data", self.dims.dim_g, g.len())?;
        let af = self.apply(f)?;
        Ok(af.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    /// `dist(g, range A) = min_f ||A f - g||`.
    ///
    /// Dense operators go through a thin SVD and project onto the numerical
    /// range (singular values above `max(m, n) * eps * sigma_max`). Matrix-free
    /// operators run CGLS on the normal equations until
    /// `||A*(g - A f)|| <= tol * ||A* g||`, capped at `10 * dim_f` iterations.
    pub fn distance_to_range(&self, g: &[f64], tol: f64) -> Result<f64> {
        check_len("distance_to_range data", self.dims.dim_g, g.len())?;
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        match &self.repr {
            // every identity is surjective
            Repr::Identity => Ok(0.0),
            Repr::Dense(m) => Ok(dense_distance_to_range(m, g)),
            Repr::MatrixFree { .. } => self.cgls_distance(g, tol),
        }
    }

    fn cgls_distance(&self, g: &[f64], tol: f64) -> Result<f64> {
        let (m, n) = (self.dims.dim_g, self.dims.dim_f);
        let max_iter = 10 * n;
        let mut f = vec![0.0; n];
        let mut r = g.to_vec();
        let mut s = vec![0.0; n];
        self.apply_adjoint_into(&r, &mut s);
        let target = tol * norm(&s);
        if target == 0.0 {
            return Ok(norm(g));
        }
        let mut p = s.clone();
        let mut q = vec![0.0; m];
        let mut gamma = norm_sq(&s);
        for _ in 0..max_iter {
            self.apply_into(&p, &mut q);
            let qq = norm_sq(&q);
            if qq == 0.0 {
                break;
            }
            let alpha = gamma / qq;
            axpy(alpha, &p, &mut f);
            axpy(-alpha, &q, &mut r);
            self.apply_adjoint_into(&r, &mut s);
            let gamma_next = norm_sq(&s);
            if libm::sqrt(gamma_next) <= target {
                return Ok(libm::sqrt(self.residual_norm_sq(&f, g)?));
            }
            let beta = gamma_next / gamma;
            gamma = gamma_next;
            for (pi, si) in p.iter_mut().zip(&s) {
                *pi = si + beta * *pi;
            }
        }
        Err(Error::ConvergenceFailure {
            what: "CGLS distance_to_range",
            iterations: max_iter,
            best: libm::sqrt(self.residual_norm_sq(&f, g)?),
        })
    }

    /// The adjoint operator G -> F.
    pub fn adjoint(&self) -> LinearOperator {
        let dims = VectorSpaceDims {
            dim_f: self.dims.dim_g,
            dim_g: self.dims.dim_f,
        };
        let repr = match &self.repr {
            Repr::Identity => Repr::Identity,
            Repr::Dense(m) => Repr::Dense(m.transpose()),
            Repr::MatrixFree { forward, adjoint } => Repr::MatrixFree {
                forward: adjoint.clone(),
                adjoint: forward.clone(),
            },
        };
        LinearOperator { dims, repr }
    }

    /// `self ∘ inner`, i.e. `f -> self(inner(f))`.
    pub fn compose(&self, inner: &LinearOperator) -> Result<LinearOperator> {
        check_len("composition inner range", self.dims.dim_f, inner.dims.dim_g)?;
        let dims = VectorSpaceDims {
            dim_f: inner.dims.dim_f,
            dim_g: self.dims.dim_g,
        };
        match (&self.repr, &inner.repr) {
            (Repr::Identity, _) => Ok(inner.clone()),
            (_, Repr::Identity) => Ok(self.clone()),
            (Repr::Dense(a), Repr::Dense(b)) => Ok(LinearOperator {
                dims,
                repr: Repr::Dense(a * b),
            }),
            _ => {
                let (outer_f, inner_f) = (self.clone(), inner.clone());
                let (outer_a, inner_a) = (self.clone(), inner.clone());
                let mid = self.dims.dim_f;
                let forward: Action = Arc::new(move |x, out| {
                    let mut t = vec![0.0; mid];
                    inner_f.apply_into(x, &mut t);
                    outer_f.apply_into(&t, out);
                });
                let adjoint: Action = Arc::new(move |y, out| {
                    let mut t = vec![0.0; mid];
                    outer_a.apply_adjoint_into(y, &mut t);
                    inner_a.apply_adjoint_into(&t, out);
                });
                Ok(LinearOperator::matrix_free(dims, forward, adjoint))
            }
        }
    }

    /// Relative adjoint mismatch `|<Af, y> - <f, A*y>| / (||Af|| ||y|| + ||f|| ||A*y||)`.
    pub fn adjoint_mismatch(&self, f: &[f64], y: &[f64]) -> Result<f64> {
        let af = self.apply(f)?;
        let aty = self.apply_adjoint(y)?;
        let lhs = dot(&af, y);
        let rhs = dot(f, &aty);
        let scale = norm(&af) * norm(y) + norm(f) * norm(&aty);
        Ok(if scale == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        })
    }

    pub(crate) fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Identity => out.copy_from_slice(f),
            Repr::Dense(m) => mat_vec(m, f, out),
            Repr::MatrixFree { forward, .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                forward(f, out)
            }
        }
    }

    pub(crate) fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Identity => out.copy_from_slice(y),
            Repr::Dense(m) => mat_t_vec(m, y, out),
            Repr::MatrixFree { adjoint, .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                adjoint(y, out)
            }
        }
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            axpy(xj, m.column(j).as_slice(), out);
        }
    }
}

fn mat_t_vec(m: &DMatrix<f64>, y: &[f64], out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = dot(m.column(j).as_slice(), y);
    }
}

/// Numerical-rank cutoff used for least-squares projections.
pub(crate) fn rank_cutoff(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    sigma_max * f64::EPSILON * rows.max(cols) as f64
}

fn dense_distance_to_range(m: &DMatrix<f64>, g: &[f64]) -> f64 {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let cutoff = rank_cutoff(sigma_max, m.nrows(), m.ncols());
    let mut r = DVector::from_column_slice(g);
    if sigma_max > 0.0 {
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > cutoff {
                let uk = u.column(k);
                let c = uk.dot(&r);
                r.axpy(-c, &uk, 1.0);
            }
        }
    }
    r.norm()
}
