//! Preconditioned conjugate gradients for symmetric positive definite systems.

use alloc::vec;
use alloc::vec::Vec;

use crate::vector::{axpy, dot, norm};

pub(crate) struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves `M x = b` from `x = 0` until `||b - M x|| <= tol * ||b||`.
///
/// `inv_diag`, when given, is the Jacobi preconditioner `1 / diag(M)`.
pub(crate) fn conjugate_gradient<F>(
    mut apply: F,
    b: &[f64],
    inv_diag: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> CgOutcome
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return CgOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((zi, ri), di)| *zi = ri * di),
        None => z.copy_from_slice(r),
    };

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;

    for it in 1..=max_iter {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            // breakdown: M is not positive definite along p
            return CgOutcome {
                x,
                iterations: it,
                relative_residual: rel,
                converged: false,
            };
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        rel = norm(&r) / b_norm;
        if rel <= tol {
            // confirm against the true residual, recursive residuals drift
            apply(&x, &mut q);
            let true_rel = b
                .iter()
                .zip(&q)
                .map(|(bi, qi)| (bi - qi) * (bi - qi))
                .sum::<f64>();
            let true_rel = libm::sqrt(true_rel) / b_norm;
            if true_rel <= tol {
                return CgOutcome {
                    x,
                    iterations: it,
                    relative_residual: true_rel,
                    converged: true,
                };
            }
            // restart from the true residual
            for (ri, (bi, qi)) in r.iter_mut().zip(b.iter().zip(&q)) {
                *ri = bi - qi;
            }
            precondition(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            rel = true_rel;
            continue;
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    CgOutcome {
        x,
        iterations: max_iter,
        relative_residual: rel,
        converged: false,
    }
}
