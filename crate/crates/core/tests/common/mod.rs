#![allow(dead_code)]

use morozov_core::LinearOperator;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn dense(m: DMatrix<f64>) -> LinearOperator {
    LinearOperator::dense(m).unwrap()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    d / norm(y).max(f64::MIN_POSITIVE)
}

/// Orthonormal basis of range(m) by modified Gram-Schmidt with re-orthogonalization.
pub fn range_basis(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let scale = m.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    for col in m.column_iter() {
        let mut v = col.clone_owned();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v -= q * c;
            }
        }
        let n = v.norm();
        if n > tol * scale {
            basis.push(v / n);
        }
    }
    basis
}

/// Distance from g to range(m) via an explicit orthonormal basis.
pub fn projection_distance(m: &DMatrix<f64>, g: &[f64]) -> f64 {
    let mut r = DVector::from_column_slice(g);
    for q in range_basis(m, 1e-10) {
        let c = q.dot(&r);
        r -= q * c;
    }
    r.norm()
}

/// Tikhonov minimizer of ||A f - g||^2 + α ||L f||^2 by LU on the normal equations.
pub fn tikhonov_oracle(a: &DMatrix<f64>, l: &DMatrix<f64>, g: &[f64], alpha: f64) -> Vec<f64> {
    let lhs = a.transpose() * a + l.transpose() * l * alpha;
    let rhs = a.transpose() * DVector::from_column_slice(g);
    lhs.lu().solve(&rhs).unwrap().as_slice().to_vec()
}

/// Dual function of ||·||^2-regularized problems through the SVD of A:
/// `f_λ = Σ λσβ/(1+λσ²) v`, evaluated independently of the solver path.
pub struct SvdDual {
    sigma: Vec<f64>,
    beta: Vec<f64>,
    out_of_range_sq: f64,
    eps: f64,
}

impl SvdDual {
    pub fn new(a: &DMatrix<f64>, g: &[f64], eps: f64) -> Self {
        let svd = a.clone().svd(true, false);
        let u = svd.u.unwrap();
        let gv = DVector::from_column_slice(g);
        let beta: Vec<f64> = (0..svd.singular_values.len())
            .map(|k| u.column(k).dot(&gv))
            .collect();
        let in_range: f64 = beta.iter().map(|b| b * b).sum();
        SvdDual {
            sigma: svd.singular_values.as_slice().to_vec(),
            beta,
            out_of_range_sq: (gv.norm_squared() - in_range).max(0.0),
            eps,
        }
    }

    /// (D(λ), D'(λ))
    pub fn eval(&self, lambda: f64) -> (f64, f64) {
        let mut j = 0.0;
        let mut res = self.out_of_range_sq;
        for (&s, &b) in self.sigma.iter().zip(&self.beta) {
            let phi = lambda * s * b / (1.0 + lambda * s * s);
            j += phi * phi;
            let r = b / (1.0 + lambda * s * s);
            res += r * r;
        }
        let dp = res - self.eps;
        (j + lambda * dp, dp)
    }
}

/// Deviation of each interior sample above the chord through its neighbours;
/// positive values mean a concavity defect.
pub fn chord_defects(lambdas: &[f64], d: &[f64]) -> Vec<f64> {
    (1..lambdas.len() - 1)
        .map(|i| {
            let w = (lambdas[i + 1] - lambdas[i]) / (lambdas[i + 1] - lambdas[i - 1]);
            let chord = w * d[i - 1] + (1.0 - w) * d[i + 1];
            chord - d[i]
        })
        .collect()
}
