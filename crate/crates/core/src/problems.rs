//! Synthetic test problems with exactly known noise.
//!
//! Randomness comes from `ChaCha8Rng` seeded with the caller's `u64`; Gaussian
//! samples use `rand_distr::StandardNormal`. Reproducibility is guaranteed for
//! a fixed dependency set only, so fixtures that must outlive it should be
//! written to disk.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dual::{diagnose_regime, Regime};
use crate::error::{check_len, Error, Result};
use crate::lagrange::Lagrangian;
use crate::linops::LinearOperator;
use crate::regularizers::Regularizer;
use crate::vector::norm;

/// `g = g0 + δg` with `g0 = A f0` and `||δg||` known exactly.
#[derive(Debug, Clone)]
pub struct InverseProblem {
    pub a: LinearOperator,
    pub g: Vec<f64>,
    pub g0: Vec<f64>,
    pub f0: Vec<f64>,
    pub delta_g_norm: f64,
    /// Noise estimate handed to the solver. Zero for clean data.
    pub tau: f64,
    pub noise_level: f64,
    pub regularizer: Regularizer,
    pub seed: u64,
}

impl InverseProblem {
    /// Lagrangian with `ε = tau_eff^2`.
    pub fn lagrangian(&self, tau_eff: f64) -> Result<Lagrangian> {
        Lagrangian::with_tau(
            self.a.clone(),
            self.g.clone(),
            self.regularizer.clone(),
            tau_eff,
        )
    }

    pub fn with_regularizer(mut self, regularizer: Regularizer) -> Result<Self> {
        check_len("regularizer domain", self.a.dim_f(), regularizer.dim())?;
        self.regularizer = regularizer;
        Ok(self)
    }
}

/// Dense `n x n` convolution with a Gaussian kernel of standard deviation
/// `kernel_width` (in samples), normalized so the full kernel has unit mass.
/// Rows near the boundary lose the truncated tails and sum to less than one.
pub fn make_deconvolution(n: usize, kernel_width: f64) -> Result<LinearOperator> {
    if n < 4 {
        return Err(Error::InvalidInput(alloc::format!("deconvolution needs n >= 4, got {n}")));
    }
    if !(kernel_width > 0.0 && kernel_width.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "kernel width must be positive, got {kernel_width}"
        )));
    }
    let weight = |d: usize| {
        let x = d as f64 / kernel_width;
        libm::exp(-0.5 * x * x)
    };
    let mass: f64 = weight(0) + 2.0 * (1..n).map(weight).sum::<f64>();
    let kernel: Vec<f64> = (0..n).map(|d| weight(d) / mass).collect();
    let m = DMatrix::from_fn(n, n, |i, j| kernel[i.abs_diff(j)]);
    LinearOperator::dense(m)
}

/// Hilbert matrix `H_ij = 1 / (i + j - 1)` (1-based), `2 <= n <= 14`.
pub fn make_hilbert(n: usize) -> Result<LinearOperator> {
    if !(2..=14).contains(&n) {
        return Err(Error::InvalidInput(alloc::format!(
            "Hilbert matrix size must be in 2..=14, got {n}"
        )));
    }
    LinearOperator::dense(DMatrix::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64))
}

/// Smooth nonnegative profile: a sum of three Gaussian bumps on `[0, 1]`.
pub fn smooth_profile(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.15..0.85),
                rng.random_range(0.04..0.12),
                rng.random_range(0.5..2.0),
            )
        })
        .collect();
    (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) / n as f64;
            bumps
                .iter()
                .map(|&(c, w, h)| {
                    let z = (x - c) / w;
                    h * libm::exp(-0.5 * z * z)
                })
                .sum()
        })
        .collect()
}

/// Builds `g = A f0 + δg` with Gaussian δg rescaled to
/// `||δg|| = noise_level * ||A f0||` and `tau = tau_accuracy * ||δg||`.
pub fn synthesize(
    a: &LinearOperator,
    f0: &[f64],
    noise_level: f64,
    tau_accuracy: f64,
    seed: u64,
) -> Result<InverseProblem> {
    if !(noise_level >= 0.0 && noise_level.is_finite()) {
        return Err(Error::InvalidInput("noise level must be nonnegative".into()));
    }
    if !(tau_accuracy > 0.0 && tau_accuracy.is_finite()) {
        return Err(Error::InvalidInput("tau accuracy must be positive".into()));
    }
    let g0 = a.apply(f0)?;
    let g0_norm = norm(&g0);
    if noise_level > 0.0 && g0_norm == 0.0 {
        return Err(Error::InvalidInput(
            "clean data A f0 is zero; relative noise is undefined".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<f64> = (0..g0.len()).map(|_| rng.sample(StandardNormal)).collect();
    let target = noise_level * g0_norm;
    let s = target / norm(&noise);
    noise.iter_mut().for_each(|v| *v *= s);
    let delta_g_norm = norm(&noise);
    let g = g0.iter().zip(&noise).map(|(a, b)| a + b).collect();
    Ok(InverseProblem {
        regularizer: Regularizer::identity(a.dim_f())?,
        a: a.clone(),
        g,
        g0,
        f0: f0.to_vec(),
        delta_g_norm,
        tau: tau_accuracy * delta_g_norm,
        noise_level,
        seed,
    })
}

/// Small problem certified to lie in the requested regime.
///
/// Panics if the constructed instance fails its own regime diagnosis, which
/// would be a bug in the construction.
pub fn regime_fixture(target: Regime, seed: u64) -> InverseProblem {
    let n = 24;
    let f0 = smooth_profile(n, seed);
    let mut problem = match target {
        Regime::Interior | Regime::NoiseDominates => {
            let a = make_deconvolution(n, 1.5).expect("valid size");
            synthesize(&a, &f0, 0.05, 1.0, seed).expect("nonzero data")
        }
        Regime::TooOptimistic => {
            // range A = first n - 6 coordinates, so dist(g, range A) = ||g[n-6..]||
            let mut m = make_deconvolution(n, 1.5).expect("valid size").materialize();
            for i in n - 6..n {
                m.row_mut(i).fill(0.0);
            }
            let a = LinearOperator::dense(m).expect("finite matrix");
            let mut p = synthesize(&a, &f0, 0.05, 1.0, seed).expect("nonzero data");
            let dist = norm(&p.g[n - 6..]);
            p.tau = 0.5 * dist;
            p
        }
    };
    if target == Regime::NoiseDominates {
        problem.tau = 2.0 * norm(&problem.g);
    }
    let diagnosis = diagnose_regime(&problem.a, &problem.g, problem.tau)
        .expect("fixture diagnosis runs on dense operators");
    assert_eq!(
        diagnosis.regime, target,
        "internal error: regime fixture construction drifted ({diagnosis:?})"
    );
    problem
}

/// Unregularized least-squares solution with minimum norm (dense SVD).
pub fn naive_solution(a: &LinearOperator, g: &[f64]) -> Result<Vec<f64>> {
    check_len("data vector g", a.dim_g(), g.len())?;
    let m = a.materialize();
    let (rows, cols) = m.shape();
    let svd = m.svd(true, true);
    let cutoff = crate::linops::rank_cutoff(svd.singular_values.max(), rows, cols);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut f = vec![0.0; cols];
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let c = u.column(k).iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / s;
            for (fi, vi) in f.iter_mut().zip(v_t.row(k).iter()) {
                *fi += c * vi;
            }
        }
    }
    Ok(f)
}
