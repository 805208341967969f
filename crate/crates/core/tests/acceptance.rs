//! Acceptance checks. Runs without the libtest harness and prints one
//! `PASS`/`FAIL` line per criterion; exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mse_combine::risk::{
    minimax_summary, pretest_null_variance, shrink_mean, sweep, uniform_grid, AsymptoticParams,
    Functional, RiskCurve,
};
use mse_combine::sim::{run_monte_carlo, DgpSpec, IvDgp, MseTable};
use mse_combine::{optimal_weight, pretest_weight, EstimatorInput, ExpectationEngine, Integrator};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn gh150() -> Integrator {
    ExpectationEngine::gauss_hermite(150).build().unwrap()
}

fn delta_curve(integ: &Integrator) -> RiskCurve {
    sweep(Functional::Delta, &uniform_grid(0.0, 10.0, 0.01), integ).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn c1_delta_extrema() -> Outcome {
    let (curve, took) = timed(|| delta_curve(&gh150()));
    let (min, max) = (curve.min(), curve.max());
    let pass = (min + 0.53).abs() <= 0.02 && (max - 0.25).abs() <= 0.02 && took < Duration::from_secs(5);
    outcome(
        pass,
        format!("min {min:.5} at g={}, max {max:.5} at g={}, {took:.2?}", curve.argmin(), curve.argmax()),
    )
}

fn c2_halton_extrema() -> Outcome {
    let quad = delta_curve(&gh150());
    let (curve, took) = timed(|| {
        let integ = ExpectationEngine::halton(1_000_000).build().unwrap();
        delta_curve(&integ)
    });
    let dmin = (curve.min() - quad.min()).abs();
    let dmax = (curve.max() - quad.max()).abs();
    let pass = dmin <= 0.02 && dmax <= 0.02 && took < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "halton min {:.5} (diff {dmin:.1e}), max {:.5} (diff {dmax:.1e}), {took:.2?}",
            curve.min(),
            curve.max()
        ),
    )
}

fn c3_combined_dominates() -> Outcome {
    let v = minimax_summary(&delta_curve(&gh150())).unwrap();
    let margin = v.max_gain - v.max_loss;
    outcome(
        v.dominates && margin >= 0.2,
        format!("max_gain {:.5}, max_loss {:.5}, margin {margin:.5}", v.max_gain, v.max_loss),
    )
}

fn c4_null_variance() -> Outcome {
    let integ = gh150();
    let params = AsymptoticParams::equal_rates(1.0, 0.5).unwrap();
    let d = params.variance_gap();
    let lambdas = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 32.0];
    let v: Vec<f64> = lambdas
        .iter()
        .map(|&l| pretest_null_variance(l, &params, &integ).unwrap())
        .collect();
    let min_step = v.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    let far = pretest_null_variance(1e6, &params, &integ).unwrap();
    let pass = min_step > 1e-4 * d && (far - params.sigma2_e).abs() <= 1e-3 * d;
    outcome(
        pass,
        format!(
            "V = {:?}, smallest step {min_step:.2e}, V(1e6) - sigma2_e = {:.1e}",
            v.iter().map(|x| (x * 1e5).round() / 1e5).collect::<Vec<_>>(),
            far - params.sigma2_e
        ),
    )
}

fn c5_pretest_loses() -> Outcome {
    let integ = gh150();
    let grid = uniform_grid(0.0, 10.0, 0.05);
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [0.25, 1.0, 3.84, 8.0] {
        let curve = sweep(Functional::PretestGap { lambda }, &grid, &integ).unwrap();
        // Δ_λ - Δ_0: the maximum is the pre-test's worst loss, minus the minimum its best gain.
        let loss = curve.max();
        let gain = -curve.min();
        pass &= loss > gain;
        parts.push(format!("lambda {lambda}: {loss:.4} > {gain:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn c6_mixed_rates() -> Outcome {
    let integ = gh150();
    let grid = uniform_grid(0.0, 10.0, 0.1);
    let mut pass = true;
    let mut parts = Vec::new();
    for mu_sd in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let curve = sweep(Functional::LambdaCurve { mu_sd }, &grid, &integ).unwrap();
        let (lo, hi) = (curve.min(), curve.max());
        pass &= lo.abs() > hi;
        parts.push(format!("mu_sd {mu_sd}: |{lo:.4}| > {hi:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn c7_shrink_mean_signs() -> Outcome {
    let integ = gh150();
    let mut pass = true;
    for x in [-3.0, -1.0, -0.1, 0.1, 1.0, 3.0f64] {
        let m = shrink_mean(x, &integ).unwrap().value;
        pass &= m.signum() == x.signum() && m != 0.0;
    }
    let at_zero = shrink_mean(0.0, &integ).unwrap().value;
    pass &= at_zero.abs() < 1e-10;
    outcome(pass, format!("signs checked at 6 points, E[s(Z)] = {at_zero:.1e}"))
}

/// Minimizer of a convex `f` by a coarse scan over `[lo, hi]` followed by a
/// fine scan around the coarse winner.
fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let scan = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        (0..=n)
            .map(|i| a + i as f64 * h)
            .min_by(|x, y| f(*x).total_cmp(&f(*y)))
            .unwrap()
    };
    let coarse = scan(lo, hi, 11_000);
    let h = (hi - lo) / 11_000.0;
    scan(coarse - 2.0 * h, coarse + 2.0 * h, 40_000)
}

/// Estimated MSE of `p * beta_e + (1 - p) * beta_c`, with the squared
/// difference shrunk by `lambda` times its variance.
fn objective(x: &EstimatorInput, p: f64, lambda: f64) -> f64 {
    let dv = x.var_c + x.var_e - 2.0 * x.cov_ce;
    let b2 = ((x.beta_e - x.beta_c).powi(2) - lambda * dv).max(0.0);
    p * p * b2 + p * p * x.var_e + (1.0 - p).powi(2) * x.var_c + 2.0 * p * (1.0 - p) * x.cov_ce
}

fn random_input(rng: &mut ChaCha8Rng) -> EstimatorInput {
    let var_e: f64 = rng.random_range(0.01..1.0);
    let var_c = var_e + rng.random_range(0.01..2.0);
    let cov = if rng.random_bool(0.5) {
        var_e
    } else {
        var_e + rng.random_range(0.0..0.5) * ((var_c * var_e).sqrt() - var_e)
    };
    let beta_c = rng.random_range(-2.0..2.0);
    let beta_e = beta_c + rng.random_range(-3.0..3.0);
    EstimatorInput::new(beta_c, beta_e, var_c, var_e, Some(cov)).unwrap()
}

fn c8_weights_vs_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = random_input(&mut rng);
        let lambda = rng.random_range(0.0..10.0);
        let p = optimal_weight(&x).unwrap();
        let p_grid = grid_argmin(|p| objective(&x, p, 0.0), -1.0, 10.0);
        let q = pretest_weight(&x, lambda).unwrap();
        let q_grid = grid_argmin(|p| objective(&x, p, lambda), -1.0, 10.0);
        worst = worst.max((p - p_grid).abs()).max((q - q_grid).abs());
    }
    outcome(worst <= 1e-5, format!("largest |closed form - grid| = {worst:.2e} over 1000 inputs"))
}

fn iv_table(endo: f64) -> (MseTable, Duration) {
    let spec = DgpSpec::Iv(IvDgp::new(2000, 1.0, endo, 1.0, 1.0));
    timed(|| run_monte_carlo(&spec, &[], 2000, 12_345).unwrap())
}

fn mse(t: &MseTable, name: &str) -> (f64, f64) {
    let r = t.row(name).unwrap();
    (r.mse, r.mc_se)
}

fn c9_null_ordering() -> Outcome {
    let (t, took) = iv_table(0.0);
    let (e, se_e) = mse(&t, "beta_e");
    let (m, se_m) = mse(&t, "beta_mse");
    let (c, se_c) = mse(&t, "beta_c");
    let low = (m - e) / se_e.max(se_m);
    let high = (c - m) / se_c.max(se_m);
    let pass = low > 2.0 && high > 2.0 && took < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "n*mse: E {:.4} < MSE {:.4} < C {:.4}; gaps {low:.1} and {high:.1} mc_se; {took:.2?}",
            2000.0 * e,
            2000.0 * m,
            2000.0 * c
        ),
    )
}

fn c10_fixed_alternative() -> Outcome {
    let (t, _) = iv_table(0.5);
    let ratio = mse(&t, "beta_mse").0 / mse(&t, "beta_c").0;
    outcome((0.9..=1.1).contains(&ratio), format!("mse ratio {ratio:.4}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("delta extrema under gauss_hermite(150)", c1_delta_extrema),
        ("delta extrema under halton_mc(1e6)", c2_halton_extrema),
        ("combined estimator minimax dominance", c3_combined_dominates),
        ("pre-test null variance decreasing to sigma2_e", c4_null_variance),
        ("pre-test loses the minimax comparison", c5_pretest_loses),
        ("mixed-rate dominance for mu_sd <= 0.4", c6_mixed_rates),
        ("shrinkage mean sign property", c7_shrink_mean_signs),
        ("closed-form weights vs grid minimization", c8_weights_vs_grid),
        ("finite-sample null ordering", c9_null_ordering),
        ("finite-sample fixed-alternative equivalence", c10_fixed_alternative),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}: {name} ({})", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
