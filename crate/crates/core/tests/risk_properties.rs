use proptest::prelude::*;

use mse_combine::risk::{
    delta, delta_pretest, lambda_curve, minimax_summary, pretest_null_variance, shrink,
    shrink_mean, sweep, uniform_grid, AsymptoticParams, Functional,
};
use mse_combine::{ExpectationEngine, Integrator};

fn gh() -> Integrator {
    ExpectationEngine::gauss_hermite(150).build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delta_is_even(g in -12.0..12.0f64) {
        let integ = gh();
        let a = delta(g, &integ).unwrap().value;
        let b = delta(-g, &integ).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn pretest_delta_is_even(g in -12.0..12.0f64, lambda in 0.0..10.0f64) {
        let integ = gh();
        let a = delta_pretest(g, lambda, &integ).unwrap().value;
        let b = delta_pretest(-g, lambda, &integ).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn lambda_curve_is_jointly_odd_symmetric(g in -12.0..12.0f64, mu_sd in -1.0..1.0f64) {
        let integ = gh();
        let a = lambda_curve(g, mu_sd, &integ).unwrap().value;
        let b = lambda_curve(-g, -mu_sd, &integ).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn combined_null_variance_is_bracketed(s2e in 0.01..5.0f64, gap in 1e-3..5.0f64) {
        let p = AsymptoticParams::equal_rates(s2e + gap, s2e).unwrap();
        let v = pretest_null_variance(0.0, &p, &gh()).unwrap();
        prop_assert!(v > p.sigma2_e && v < p.sigma2_c, "{v} not in ({}, {})", p.sigma2_e, p.sigma2_c);
    }

    #[test]
    fn null_variance_decreases_in_lambda(
        s2e in 0.01..5.0f64,
        gap in 1e-2..5.0f64,
        lambda in 0.0..20.0f64,
        step in 0.05..5.0f64,
    ) {
        let integ = gh();
        let p = AsymptoticParams::equal_rates(s2e + gap, s2e).unwrap();
        let lo = pretest_null_variance(lambda, &p, &integ).unwrap();
        let hi = pretest_null_variance(lambda + step, &p, &integ).unwrap();
        prop_assert!(hi < lo, "V({}) = {hi} >= V({lambda}) = {lo}", lambda + step);
        prop_assert!(hi > p.sigma2_e);
    }

    #[test]
    fn shrinkage_mean_has_the_sign_of_its_center(x in -6.0..6.0f64) {
        prop_assume!(x.abs() > 1e-3);
        let m = shrink_mean(x, &gh()).unwrap().value;
        prop_assert_eq!(m.signum(), x.signum());
        prop_assert!(m != 0.0);
    }
}

#[test]
fn shrinkage_mean_signs_at_fixed_points() {
    let integ = gh();
    for x in [-3.0, -1.0, -0.1, 0.1, 1.0, 3.0f64] {
        let m = shrink_mean(x, &integ).unwrap().value;
        assert_eq!(m.signum(), x.signum(), "x={x}: {m}");
    }
    assert!(shrink_mean(0.0, &integ).unwrap().value.abs() < 1e-10);
    // The mean really is E[shrink(x + Z)]: a plain Riemann sum against φ.
    let x = 0.7;
    let h = 1e-4;
    let riemann: f64 = (-120_000..=120_000)
        .map(|k| {
            let z = k as f64 * h;
            shrink(x + z) * (-z * z / 2.0).exp() * h / (2.0 * std::f64::consts::PI).sqrt()
        })
        .sum();
    assert!((shrink_mean(x, &integ).unwrap().value - riemann).abs() < 1e-8);
}

#[test]
fn pretest_loses_for_every_tabulated_lambda() {
    let integ = gh();
    let grid = uniform_grid(0.0, 10.0, 0.01);
    for lambda in [0.25, 0.5, 1.0, 2.0, 3.84, 8.0] {
        let curve = sweep(Functional::PretestGap { lambda }, &grid, &integ).unwrap();
        let (loss, gain) = (curve.max(), -curve.min());
        assert!(loss > gain, "lambda {lambda}: loss {loss} <= gain {gain}");
    }
}

#[test]
fn mixed_rate_dominance_in_validated_region() {
    let integ = gh();
    let grid = uniform_grid(0.0, 10.0, 0.1);
    for mu_sd in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let curve = sweep(Functional::LambdaCurve { mu_sd }, &grid, &integ).unwrap();
        assert!(curve.min().abs() > curve.max(), "mu_sd {mu_sd}");
        assert!(minimax_summary(&curve).unwrap().dominates);
    }
}

/// For large `g`, `s(x) ≈ 1/x` and Stein's identity gives
/// `E[(N - g) s(N)] = E[s'(N)] ≈ -1/g²`, so `g² Δ(g) → 3`. The curve is
/// positive and decreasing past the grid end, which cannot hold an extremum.
#[test]
fn delta_tail_decays_like_three_over_g_squared() {
    let integ = gh();
    for g in [10.0, 20.0, 40.0] {
        let d = delta(g, &integ).unwrap().value;
        assert!((g * g * d - 3.0).abs() < 0.3 * 10.0 / g, "g={g}: g²Δ = {}", g * g * d);
    }
    let tail: Vec<f64> = uniform_grid(10.0, 40.0, 0.5)
        .iter()
        .map(|&g| delta(g, &integ).unwrap().value)
        .collect();
    assert!(tail.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    assert!(tail[0] < 0.25);
}

/// Verdicts must not depend on the integration method. The Halton engine
/// with 10⁷ draws is expensive, so this runs on a coarse grid.
#[test]
fn verdicts_agree_across_engines() {
    let quad = gh();
    let halton = ExpectationEngine::halton(10_000_000).build().unwrap();
    let grid = uniform_grid(0.0, 10.0, 0.5);
    let functionals = [
        Functional::Delta,
        Functional::PretestGap { lambda: 1.0 },
        Functional::PretestGap { lambda: 3.84 },
        Functional::LambdaCurve { mu_sd: 0.2 },
        Functional::LambdaCurve { mu_sd: 0.4 },
    ];
    for f in functionals {
        let a = minimax_summary(&sweep(f, &grid, &quad).unwrap()).unwrap();
        let b = minimax_summary(&sweep(f, &grid, &halton).unwrap()).unwrap();
        assert_eq!(a.dominates, b.dominates, "{f:?}");
        assert!((a.max_gain - b.max_gain).abs() < 5e-3, "{f:?}: {a:?} {b:?}");
        assert!((a.max_loss - b.max_loss).abs() < 5e-3, "{f:?}: {a:?} {b:?}");
    }
}
