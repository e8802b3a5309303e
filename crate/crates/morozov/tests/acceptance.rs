//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::Command;
use std::time::Instant;

use morozov::fixture::save_fixture;
use morozov_core::dual::{
    diagnose_regime, eval_dual, log_grid, maximize_dual, sweep_dual, MaximizeOptions, Method,
    Regime, StepRule,
};
use morozov_core::linops::VectorSpaceDims;
use morozov_core::problems::{
    make_deconvolution, make_hilbert, regime_fixture, smooth_profile, synthesize,
};
use morozov_core::regularizers::Regularizer;
use morozov_core::{Lagrangian, LinearOperator, SolveOptions};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm(&d) / norm(y).max(f64::MIN_POSITIVE)
}

/// Distance from g to range(m) through an independently built orthonormal basis.
fn projection_distance(m: &DMatrix<f64>, g: &[f64]) -> f64 {
    let scale = m.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for col in m.column_iter() {
        let mut v = col.clone_owned();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v -= q * c;
            }
        }
        let n = v.norm();
        if n > 1e-10 * scale {
            basis.push(v / n);
        }
    }
    let mut r = DVector::from_column_slice(g);
    for q in &basis {
        let c = q.dot(&r);
        r -= q * c;
    }
    r.norm()
}

/// Tikhonov minimizer of ||A f - g||^2 + alpha ||L f||^2 by LU on the normal equations.
fn tikhonov_lu(a: &DMatrix<f64>, l: &DMatrix<f64>, g: &[f64], alpha: f64) -> Vec<f64> {
    let lhs = a.transpose() * a + l.transpose() * l * alpha;
    let rhs = a.transpose() * DVector::from_column_slice(g);
    lhs.lu().solve(&rhs).expect("nonsingular normal equations").as_slice().to_vec()
}

/// Dual function for J = ||f||^2 from the SVD of A, independent of the solver.
struct SvdDual {
    sigma: Vec<f64>,
    beta: Vec<f64>,
    out_of_range_sq: f64,
    eps: f64,
}

impl SvdDual {
    fn new(a: &DMatrix<f64>, g: &[f64], eps: f64) -> Self {
        let svd = a.clone().svd(true, false);
        let u = svd.u.unwrap();
        let gv = DVector::from_column_slice(g);
        let beta: Vec<f64> = (0..svd.singular_values.len()).map(|k| u.column(k).dot(&gv)).collect();
        let in_range: f64 = beta.iter().map(|b| b * b).sum();
        SvdDual {
            sigma: svd.singular_values.as_slice().to_vec(),
            beta,
            out_of_range_sq: (gv.norm_squared() - in_range).max(0.0),
            eps,
        }
    }

    fn value(&self, lambda: f64) -> f64 {
        let mut j = 0.0;
        let mut res = self.out_of_range_sq;
        for (&s, &b) in self.sigma.iter().zip(&self.beta) {
            let phi = lambda * s * b / (1.0 + lambda * s * s);
            j += phi * phi;
            let r = b / (1.0 + lambda * s * s);
            res += r * r;
        }
        j + lambda * (res - self.eps)
    }
}

struct Fixture {
    label: String,
    lag: Lagrangian,
    a: DMatrix<f64>,
    l: DMatrix<f64>,
}

fn fixture(label: String, a: LinearOperator, g: Vec<f64>, reg: Regularizer, tau: f64) -> Fixture {
    let am = a.materialize();
    let lm = reg.seminorm_operator().materialize();
    Fixture {
        label,
        lag: Lagrangian::with_tau(a, g, reg, tau).expect("valid fixture"),
        a: am,
        l: lm,
    }
}

/// Random dense problem with tau placed strictly inside (dist(g, range A), ||g||).
fn random_dense(rng: &mut ChaCha8Rng, identity_reg: bool) -> Fixture {
    let n = rng.random_range(4..=64);
    let m = n + rng.random_range(0..=8);
    let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let f0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let noise = rng.random_range(0.01..0.3);
    let mut g = (&a * DVector::from_column_slice(&f0)).as_slice().to_vec();
    for gi in g.iter_mut() {
        *gi += noise * rng.random_range(-1.0..1.0);
    }
    let dist = projection_distance(&a, &g);
    let gn = norm(&g);
    let tau = dist + rng.random_range(0.05..0.6) * (gn - dist);
    let reg = if identity_reg {
        Regularizer::identity(n).unwrap()
    } else {
        Regularizer::first_difference(n).unwrap()
    };
    fixture(format!("dense {m}x{n}"), LinearOperator::dense(a).unwrap(), g, reg, tau)
}

/// Synthetic deconvolution or Hilbert problem with the Morozov safety factor applied.
fn synthetic(rng: &mut ChaCha8Rng, identity_reg: bool) -> Fixture {
    let seed = rng.random::<u64>();
    let (label, a) = if rng.random_bool(0.75) {
        let n = rng.random_range(16..=64);
        let w = rng.random_range(0.8..3.0);
        (format!("deconvolution n={n} w={w:.2}"), make_deconvolution(n, w).unwrap())
    } else {
        let n = rng.random_range(4..=12);
        (format!("hilbert n={n}"), make_hilbert(n).unwrap())
    };
    let n = a.dim_f();
    let f0 = smooth_profile(n, seed);
    let p = synthesize(&a, &f0, rng.random_range(0.01..0.08), 1.0, seed).unwrap();
    let reg = if identity_reg {
        Regularizer::identity(n).unwrap()
    } else {
        Regularizer::first_difference(n).unwrap()
    };
    fixture(label, p.a, p.g, reg, 1.02 * p.tau)
}

/// `count` fixtures certified interior by the regime diagnosis.
fn interior_fixtures(seed: u64, count: usize, identity_only: bool) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let identity_reg = identity_only || rng.random_bool(0.5);
        let fx = if rng.random_bool(0.5) {
            random_dense(&mut rng, identity_reg)
        } else {
            synthetic(&mut rng, identity_reg)
        };
        let d = diagnose_regime(fx.lag.operator(), fx.lag.data(), fx.lag.tau()).unwrap();
        if d.regime == Regime::Interior {
            out.push(fx);
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for fx in interior_fixtures(1, 20, false) {
        let res = maximize_dual(&fx.lag, &MaximizeOptions::default())
            .map_err(|e| format!("{}: {e}", fx.label))?;
        if !res.converged {
            return Err(format!("{}: not converged", fx.label));
        }
        let eps = fx.lag.epsilon();
        let disc_sq = fx.lag.operator().residual_norm_sq(&res.f_star, fx.lag.data()).unwrap();
        let err = (disc_sq - eps).abs() / eps;
        if err > 1e-8 {
            return Err(format!("{}: relative discrepancy error {err:e}", fx.label));
        }
        worst = worst.max(err);
    }
    Ok(format!("20 fixtures, worst |disc^2 - tau^2| / tau^2 = {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    let opts = SolveOptions::default();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for fx in interior_fixtures(2, 5, false) {
        let eps = fx.lag.epsilon();
        for l in log_grid(1e-4, 1e6, 50).unwrap() {
            let h = 1e-6 * l;
            let dp = eval_dual(&fx.lag, l, &opts).unwrap().d_prime;
            let up = eval_dual(&fx.lag, l + h, &opts).unwrap().d_value;
            let dn = eval_dual(&fx.lag, l - h, &opts).unwrap().d_value;
            let fd = (up - dn) / (2.0 * h);
            let err = (fd - dp).abs() / dp.abs().max(eps);
            if err > 1e-5 {
                return Err(format!("{} at lambda {l:e}: fd {fd:e} vs {dp:e}", fx.label));
            }
            worst = worst.max(err);
            checked += 1;
        }
    }
    Ok(format!("{checked} grid points, worst relative error {worst:.2e}"))
}

/// Largest concavity defect relative to max(1, |D|): the nonuniform second
/// difference expressed as the excess of the neighbour chord over D.
fn worst_concavity_defect(lambdas: &[f64], d: &[f64]) -> f64 {
    (1..lambdas.len() - 1)
        .map(|i| {
            let w = (lambdas[i + 1] - lambdas[i]) / (lambdas[i + 1] - lambdas[i - 1]);
            let chord = w * d[i - 1] + (1.0 - w) * d[i + 1];
            (chord - d[i]) / d[i].abs().max(1.0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn sampled_dual(lag: &Lagrangian, grid: &[f64]) -> Result<Vec<f64>, String> {
    sweep_dual(lag, grid, &SolveOptions::default())
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| p.result.map(|e| e.d_value).map_err(|e| format!("lambda {}: {e}", p.lambda)))
        .collect()
}

fn criterion_3() -> Outcome {
    let mut fixtures = interior_fixtures(3, 6, false);
    for target in [Regime::Interior, Regime::NoiseDominates, Regime::TooOptimistic] {
        let p = regime_fixture(target, 3);
        let tau = p.tau;
        fixtures.push(fixture(format!("{target}"), p.a, p.g, p.regularizer, tau));
    }
    let log = log_grid(1e-6, 1e9, 200).unwrap();
    let lin: Vec<f64> = (1..=200).map(|i| 0.05 * i as f64).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut sweeps = 0;
    for fx in &fixtures {
        for grid in [&log, &lin] {
            let d = sampled_dual(&fx.lag, grid).map_err(|e| format!("{}: {e}", fx.label))?;
            let defect = worst_concavity_defect(grid, &d);
            if defect > 1e-9 {
                return Err(format!("{}: concavity defect {defect:e}", fx.label));
            }
            // uniform grid: plain second differences
            if grid[1] - grid[0] == grid[2] - grid[1] {
                for i in 1..d.len() - 1 {
                    let sd = d[i + 1] - 2.0 * d[i] + d[i - 1];
                    if sd > 1e-9 * d[i].abs().max(1.0) {
                        return Err(format!("{}: second difference {sd:e} at {i}", fx.label));
                    }
                }
            }
            worst = worst.max(defect);
            sweeps += 1;
        }
    }
    Ok(format!("{sweeps} sweeps, worst scaled defect {worst:.2e}"))
}

fn scalar_lagrangian() -> Lagrangian {
    Lagrangian::new(
        LinearOperator::from_row_major(1, 1, &[1.0]).unwrap(),
        vec![2.0],
        Regularizer::identity(1).unwrap(),
        1.0,
    )
    .unwrap()
}

fn criterion_4() -> Outcome {
    let lag = scalar_lagrangian();
    for method in [Method::Bisection, Method::Secant] {
        let r = maximize_dual(&lag, &MaximizeOptions { method, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let errs = [r.lambda_star - 1.0, r.alpha - 1.0, r.f_star[0] - 1.0];
        if errs.iter().any(|e| e.abs() > 1e-8) {
            return Err(format!(
                "{}: lambda {} alpha {} f {}",
                method.as_str(),
                r.lambda_star,
                r.alpha,
                r.f_star[0]
            ));
        }
    }
    Ok("bisection and secant give lambda = alpha = f = 1 within 1e-8".into())
}

fn criterion_5() -> Outcome {
    let grid = log_grid(1e-6, 1e9, 10_000).unwrap();
    let cell = (1e9f64 / 1e-6).ln() / 9_999.0;
    let mut worst = 0.0f64;
    for fx in interior_fixtures(5, 5, true) {
        let res = maximize_dual(&fx.lag, &MaximizeOptions::default())
            .map_err(|e| format!("{}: {e}", fx.label))?;
        let oracle = SvdDual::new(&fx.a, fx.lag.data(), fx.lag.epsilon());
        let best = grid
            .iter()
            .map(|&l| (l, oracle.value(l)))
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        let cells = (res.lambda_star.ln() - best.ln()).abs() / cell;
        if cells > 1.0 {
            return Err(format!(
                "{}: lambda {} vs grid argmax {best} ({cells:.2} cells)",
                fx.label, res.lambda_star
            ));
        }
        worst = worst.max(cells);
    }
    Ok(format!("5 fixtures, worst offset {worst:.3} grid cells"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fixtures = interior_fixtures(6, 10, false);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let fx = &fixtures[k % fixtures.len()];
        let lambda = 10f64.powf(rng.random_range(-3.0..4.0));
        let f = fx.lag.solve_lagrange(lambda, &SolveOptions::default())
            .map_err(|e| format!("{}: {e}", fx.label))?
            .f_lambda;
        let oracle = tikhonov_lu(&fx.a, &fx.l, fx.lag.data(), 1.0 / lambda);
        let err = rel_diff(&f, &oracle);
        if err > 1e-8 {
            return Err(format!("{} at lambda {lambda:e}: relative difference {err:e}", fx.label));
        }
        worst = worst.max(err);
    }
    Ok(format!("20 (problem, lambda) pairs, worst relative difference {worst:.2e}"))
}

fn cli_solve_exit(problem: &morozov_core::InverseProblem) -> Result<i32, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    save_fixture(dir.path(), problem).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_morozov"))
        .args(["solve", "--problem"])
        .arg(dir.path())
        .env("MOROZOV_LOG", "off")
        .output()
        .map_err(|e| e.to_string())?;
    out.status.code().ok_or_else(|| "solve terminated by signal".into())
}

fn criterion_7() -> Outcome {
    let grid = log_grid(1e-6, 1e9, 100).unwrap();
    for target in [Regime::Interior, Regime::NoiseDominates, Regime::TooOptimistic] {
        for seed in 0..3 {
            let p = regime_fixture(target, seed);
            let lag = p.lagrangian(p.tau).unwrap();
            let dp: Vec<f64> = sweep_dual(&lag, &grid, &SolveOptions::default())
                .unwrap()
                .into_iter()
                .map(|s| s.result.map(|e| e.d_prime).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            let ok = match target {
                Regime::Interior => dp[0] > 0.0 && dp[dp.len() - 1] < 0.0,
                Regime::NoiseDominates => dp.iter().all(|&v| v < 0.0),
                Regime::TooOptimistic => dp.iter().all(|&v| v > 0.0),
            };
            if !ok {
                return Err(format!("{target} seed {seed}: wrong sign pattern of D'"));
            }
            let code = cli_solve_exit(&p)?;
            let expected = if target == Regime::Interior { 0 } else { 2 };
            if code != expected {
                return Err(format!("{target} seed {seed}: solve exited {code}, expected {expected}"));
            }
        }
    }
    Ok("sign patterns match; solve exits 0 / 2 / 2".into())
}

fn criterion_8() -> Outcome {
    let opts = MaximizeOptions::default();
    let mut worst = 0.0f64;
    for fx in interior_fixtures(8, 8, false) {
        let res = maximize_dual(&fx.lag, &opts).map_err(|e| format!("{}: {e}", fx.label))?;
        for factor in [1.0 - opts.rtol, 1.0 + opts.rtol, 1.0 - 0.5 * opts.rtol, 1.0 + 0.5 * opts.rtol] {
            let f = fx.lag
                .solve_lagrange(res.lambda_star * factor, &SolveOptions::default())
                .map_err(|e| format!("{}: {e}", fx.label))?
                .f_lambda;
            let change = rel_diff(&f, &res.f_star);
            if change > 1e-6 {
                return Err(format!("{}: f_star changed by {change:e}", fx.label));
            }
            worst = worst.max(change);
        }
    }
    Ok(format!("8 fixtures, worst relative change {worst:.2e}"))
}

fn shipped_operators() -> Vec<(String, LinearOperator)> {
    let mut ops = vec![
        ("identity".to_string(), LinearOperator::identity(17).unwrap()),
        ("deconvolution".into(), make_deconvolution(40, 2.0).unwrap()),
        ("hilbert".into(), make_hilbert(10).unwrap()),
        (
            "first_difference".into(),
            Regularizer::first_difference(25).unwrap().seminorm_operator().clone(),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = DMatrix::from_fn(13, 9, |_, _| rng.random_range(-1.0..1.0));
    ops.push(("dense".into(), LinearOperator::dense(m).unwrap()));
    let n = 30;
    let cumsum = LinearOperator::matrix_free(
        VectorSpaceDims::new(n, n).unwrap(),
        std::sync::Arc::new(|f: &[f64], out: &mut [f64]| {
            let mut s = 0.0;
            for (o, v) in out.iter_mut().zip(f) {
                s += v;
                *o = s;
            }
        }),
        std::sync::Arc::new(|y: &[f64], out: &mut [f64]| {
            let mut s = 0.0;
            for (o, v) in out.iter_mut().zip(y).rev() {
                s += v;
                *o = s;
            }
        }),
    );
    ops.push(("matrix_free".into(), cumsum));
    let deconv = make_deconvolution(40, 2.0).unwrap();
    ops.push(("adjoint(deconvolution)".into(), deconv.adjoint()));
    let l = Regularizer::first_difference(40).unwrap().seminorm_operator().clone();
    ops.push(("compose(first_difference, deconvolution)".into(), l.compose(&deconv).unwrap()));
    ops
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let ops = shipped_operators();
    let mut worst = 0.0f64;
    for (name, op) in &ops {
        for _ in 0..100 {
            let f: Vec<f64> = (0..op.dim_f()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..op.dim_g()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mismatch = op.adjoint_mismatch(&f, &y).map_err(|e| e.to_string())?;
            if mismatch > 1e-12 {
                return Err(format!("{name}: adjoint mismatch {mismatch:e}"));
            }
            worst = worst.max(mismatch);
        }
    }
    let n = 20;
    let d = Regularizer::first_difference(n).unwrap();
    let report = d
        .check_assumptions(d.seminorm_operator(), 1e-10)
        .map_err(|e| e.to_string())?;
    if report.holds() || report.kernel_intersection_dim != 1 {
        return Err(format!("first-difference pair not flagged: {report:?}"));
    }
    let control = d
        .check_assumptions(&make_deconvolution(n, 1.5).unwrap(), 1e-10)
        .map_err(|e| e.to_string())?;
    if !control.holds() {
        return Err(format!("deconvolution with first difference wrongly flagged: {control:?}"));
    }
    Ok(format!(
        "{} operators x 100 probes, worst mismatch {worst:.2e}; first-difference pair flagged",
        ops.len()
    ))
}

fn criterion_10() -> Outcome {
    let opts = MaximizeOptions {
        method: Method::GradientAscent,
        rtol: 1e-4,
        max_iter: 10_000,
        step_rule: StepRule::Diminishing(2.0),
        ..Default::default()
    };
    let r = maximize_dual(&scalar_lagrangian(), &opts).map_err(|e| e.to_string())?;
    let err = (r.lambda_star - 1.0).abs();
    if err > 1e-3 || r.iterations.len() > 10_000 {
        return Err(format!("lambda {} after {} iterations", r.lambda_star, r.iterations.len()));
    }
    Ok(format!("lambda = {} after {} iterations (|error| {err:.1e})", r.lambda_star, r.iterations.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("discrepancy equation at the dual maximizer", criterion_1),
        ("derivative of the dual function", criterion_2),
        ("concavity of sampled dual", criterion_3),
        ("scalar closed form", criterion_4),
        ("brute-force grid argmax", criterion_5),
        ("Tikhonov equivalence with alpha = 1/lambda", criterion_6),
        ("regime sweeps and solve exit codes", criterion_7),
        ("primal stability across the tolerance band", criterion_8),
        ("adjoint probes and assumption gate", criterion_9),
        ("gradient ascent with diminishing steps", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check)
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
