//! Local-asymptotic risk of the combined estimator.
//!
//! Under drifting alternatives the normalized error of the combined estimator
//! converges to a law whose excess MSE over the consistent estimator is a
//! scaled expectation over `N_g ~ Normal(g, 1)`:
//!
//! ```text
//! Δ(g)        = E[s(N_g)²] - 2 cov(s(N_g), N_g),          s(z) = z / (z² + 1)
//! Δ_λ(g)      = E[ψ_λ(N_g)²] - 2 cov(ψ_λ(N_g), N_g),      ψ_λ(z) = z / (max(0, z² - λ) + 1)
//! Λ(g, μ_sd)  = Δ(g) + 2 μ_sd E[s(N_g)]
//! ```
//!
//! Equal rates: `E(U_h²) - σ²_C = (σ²_C - σ²_E) Δ(h / sqrt(σ²_C - σ²_E))`.
//! Mixed rates: `E(U_h²) - (μ² + σ²_C) = σ²_C Λ((h - μ) / σ_C, μ / σ_C)`.
//!
//! Covariances are expanded with `E[N_g] = g` so each functional is a single
//! expectation `E[φ(N_g)]` evaluated by one [`Integrator`] call.
//!
//! Curves use the sign convention *positive = the combined (or pre-test)
//! estimator is worse than the baseline*.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expect::{Estimate, ExpectError, Integrator};

/// Largest `|μ / σ_C|` for which the mixed-rate dominance claim is asserted.
pub const VALIDATED_MU_SD: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("invalid asymptotic parameters: {0}")]
    Params(String),
    #[error("lambda must be a finite non-negative number, got {0}")]
    InvalidLambda(f64),
    #[error("risk curve is empty")]
    EmptyCurve,
    #[error("grid must be finite and sorted ascending")]
    UnsortedGrid,
    #[error(transparent)]
    Expect(#[from] ExpectError),
}

/// `z / (z² + 1)`.
pub fn shrink(z: f64) -> f64 {
    z / (z * z + 1.0)
}

/// `z / (max(0, z² - λ) + 1)`; the identity on `z² <= λ`.
pub fn shrink_pretest(z: f64, lambda: f64) -> f64 {
    z / ((z * z - lambda).max(0.0) + 1.0)
}

/// Asymptotic variances and bias of the two estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParams {
    pub sigma2_c: f64,
    pub sigma2_e: f64,
    /// First-order bias of the consistent estimator (mixed rates only).
    pub mu: f64,
    /// Asymptotic covariance of the two estimators (mixed rates only).
    pub rho: f64,
}

impl AsymptoticParams {
    /// Equal-rates setting: `mu = 0` and covariance `sigma2_e`.
    pub fn equal_rates(sigma2_c: f64, sigma2_e: f64) -> Result<Self, RiskError> {
        let p = Self {
            sigma2_c,
            sigma2_e,
            mu: 0.0,
            rho: sigma2_e,
        };
        p.check_equal_rates()?;
        Ok(p)
    }

    pub fn mixed_rates(sigma2_c: f64, sigma2_e: f64, mu: f64, rho: f64) -> Result<Self, RiskError> {
        let p = Self {
            sigma2_c,
            sigma2_e,
            mu,
            rho,
        };
        if ![sigma2_c, sigma2_e, mu, rho].iter().all(|v| v.is_finite()) {
            return Err(RiskError::Params("all parameters must be finite".into()));
        }
        if sigma2_c <= 0.0 || sigma2_e < 0.0 {
            return Err(RiskError::Params(format!(
                "need sigma2_c > 0 and sigma2_e >= 0, got ({sigma2_c}, {sigma2_e})"
            )));
        }
        Ok(p)
    }

    fn check_equal_rates(&self) -> Result<(), RiskError> {
        if !(self.sigma2_c.is_finite() && self.sigma2_e.is_finite()) {
            return Err(RiskError::Params("variances must be finite".into()));
        }
        if !(self.sigma2_e >= 0.0 && self.sigma2_c > self.sigma2_e) {
            return Err(RiskError::Params(format!(
                "need sigma2_c > sigma2_e >= 0, got sigma2_c = {}, sigma2_e = {}",
                self.sigma2_c, self.sigma2_e
            )));
        }
        Ok(())
    }

    /// `σ²_C - σ²_E`.
    pub fn variance_gap(&self) -> f64 {
        self.sigma2_c - self.sigma2_e
    }

    /// Standardized local parameter `g = h / sqrt(σ²_C - σ²_E)` (equal rates).
    pub fn local_g(&self, h: f64) -> f64 {
        h / self.variance_gap().sqrt()
    }

    /// `μ / σ_C` (mixed rates).
    pub fn mu_sd(&self) -> f64 {
        self.mu / self.sigma2_c.sqrt()
    }
}

/// Points where the pre-test integrands are not differentiable; none at `λ = 0`.
fn kinks(lambda: f64) -> Vec<f64> {
    if lambda == 0.0 {
        return Vec::new();
    }
    let r = lambda.sqrt();
    vec![-r, r]
}

fn check_lambda(lambda: f64) -> Result<(), RiskError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(RiskError::InvalidLambda(lambda))
    }
}

/// `Δ(g)`: normalized excess MSE of the combined estimator over the
/// consistent one at local parameter `g`. Even in `g`.
pub fn delta(g: f64, integ: &Integrator) -> Result<Estimate, RiskError> {
    Ok(integ.expect(
        |x| {
            let s = shrink(x);
            s * s - 2.0 * (x - g) * s
        },
        g,
    )?)
}

/// `Δ_λ(g)`; equals [`delta`] at `λ = 0`.
pub fn delta_pretest(g: f64, lambda: f64, integ: &Integrator) -> Result<Estimate, RiskError> {
    check_lambda(lambda)?;
    Ok(integ.expect_piecewise(
        |x| {
            let s = shrink_pretest(x, lambda);
            s * s - 2.0 * (x - g) * s
        },
        g,
        &kinks(lambda),
    )?)
}

/// `Δ_λ(g) - Δ_0(g)`, the normalized excess MSE of the pre-test estimator
/// over the combined one, evaluated as a single expectation.
pub fn pretest_gap(g: f64, lambda: f64, integ: &Integrator) -> Result<Estimate, RiskError> {
    check_lambda(lambda)?;
    Ok(integ.expect_piecewise(
        |x| {
            let a = shrink_pretest(x, lambda);
            let b = shrink(x);
            (a - b) * (a + b) - 2.0 * (x - g) * (a - b)
        },
        g,
        &kinks(lambda),
    )?)
}

/// `E[s(N_g)]`; carries the sign of `g`.
pub fn shrink_mean(g: f64, integ: &Integrator) -> Result<Estimate, RiskError> {
    Ok(integ.expect(shrink, g)?)
}

/// `Λ(g, μ_sd) = Δ(g) + 2 μ_sd E[s(N_g)]`.
pub fn lambda_curve(g: f64, mu_sd: f64, integ: &Integrator) -> Result<Estimate, RiskError> {
    Ok(integ.expect(
        |x| {
            let s = shrink(x);
            s * s - 2.0 * (x - g) * s + 2.0 * mu_sd * s
        },
        g,
    )?)
}

/// Variance of the limit law of the pre-test estimator under the null:
/// `σ²_E + (σ²_C - σ²_E) E[Z² (1 / (max(0, Z² - λ) + 1) - 1)²]`.
///
/// Strictly decreasing in `λ` with limit `σ²_E`; at `λ = 0` it lies strictly
/// between `σ²_E` and `σ²_C`.
pub fn pretest_null_variance(
    lambda: f64,
    params: &AsymptoticParams,
    integ: &Integrator,
) -> Result<f64, RiskError> {
    check_lambda(lambda)?;
    params.check_equal_rates()?;
    let e = integ.expect_piecewise(
        |z| {
            let t = z * (1.0 / ((z * z - lambda).max(0.0) + 1.0) - 1.0);
            t * t
        },
        0.0,
        &kinks(lambda),
    )?;
    Ok(params.sigma2_e + params.variance_gap() * e.value)
}

/// `E(U_h²) - σ²_C = (σ²_C - σ²_E) Δ(h / sqrt(σ²_C - σ²_E))`.
pub fn risk_gap_equal_rates(
    h: f64,
    params: &AsymptoticParams,
    integ: &Integrator,
) -> Result<f64, RiskError> {
    params.check_equal_rates()?;
    Ok(params.variance_gap() * delta(params.local_g(h), integ)?.value)
}

/// `E(U_h²) - (μ² + σ²_C) = σ²_C Λ((h - μ) / σ_C, μ / σ_C)`.
pub fn risk_gap_mixed_rates(
    h: f64,
    params: &AsymptoticParams,
    integ: &Integrator,
) -> Result<f64, RiskError> {
    let p = AsymptoticParams::mixed_rates(params.sigma2_c, params.sigma2_e, params.mu, params.rho)?;
    let sd = p.sigma2_c.sqrt();
    Ok(p.sigma2_c * lambda_curve((h - p.mu) / sd, p.mu_sd(), integ)?.value)
}

/// Whether `μ_sd` lies in the range where mixed-rate dominance is asserted.
pub fn mu_sd_validated(mu_sd: f64) -> bool {
    mu_sd.abs() <= VALIDATED_MU_SD
}

/// The functional evaluated by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Delta,
    DeltaPretest { lambda: f64 },
    /// `Δ_λ - Δ_0`.
    PretestGap { lambda: f64 },
    LambdaCurve { mu_sd: f64 },
}

impl Functional {
    pub fn eval(&self, g: f64, integ: &Integrator) -> Result<Estimate, RiskError> {
        match *self {
            Functional::Delta => delta(g, integ),
            Functional::DeltaPretest { lambda } => delta_pretest(g, lambda, integ),
            Functional::PretestGap { lambda } => pretest_gap(g, lambda, integ),
            Functional::LambdaCurve { mu_sd } => lambda_curve(g, mu_sd, integ),
        }
    }
}

/// Functional values on a grid, with the worst-case gain and loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub functional: Functional,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `max(0, -min value)`: the largest risk reduction on the grid.
    pub max_gain: f64,
    /// `max(0, max value)`: the largest risk increase on the grid.
    pub max_loss: f64,
}

impl RiskCurve {
    pub fn new(functional: Functional, grid: Vec<f64>, values: Vec<f64>) -> Result<Self, RiskError> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(RiskError::EmptyCurve);
        }
        let (lo, hi) = extrema(&values);
        Ok(Self {
            functional,
            grid,
            values,
            max_gain: (-lo).max(0.0),
            max_loss: hi.max(0.0),
        })
    }

    pub fn min(&self) -> f64 {
        extrema(&self.values).0
    }

    pub fn max(&self) -> f64 {
        extrema(&self.values).1
    }

    /// Grid point of the minimum value (first one on ties).
    pub fn argmin(&self) -> f64 {
        let i = (0..self.values.len())
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        self.grid[i]
    }

    /// Grid point of the maximum value (first one on ties).
    pub fn argmax(&self) -> f64 {
        let i = (0..self.values.len())
            .rev()
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        self.grid[i]
    }
}

fn extrema(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Minimax-regret comparison read off a risk-difference curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaxVerdict {
    pub max_gain: f64,
    pub max_loss: f64,
    /// `max_loss < max_gain`: the worst loss is smaller than the best gain.
    pub dominates: bool,
}

pub fn minimax_summary(curve: &RiskCurve) -> Result<MinimaxVerdict, RiskError> {
    if curve.values.is_empty() {
        return Err(RiskError::EmptyCurve);
    }
    let (lo, hi) = extrema(&curve.values);
    let max_gain = (-lo).max(0.0);
    let max_loss = hi.max(0.0);
    Ok(MinimaxVerdict {
        max_gain,
        max_loss,
        dominates: max_loss < max_gain,
    })
}

/// Evaluates `functional` at every grid point (in parallel, assembled in
/// grid order).
pub fn sweep(functional: Functional, grid: &[f64], integ: &Integrator) -> Result<RiskCurve, RiskError> {
    if grid.is_empty() {
        return Err(RiskError::EmptyCurve);
    }
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(RiskError::UnsortedGrid);
    }
    let values = grid
        .par_iter()
        .map(|&g| functional.eval(g, integ).map(|e| e.value))
        .collect::<Result<Vec<_>, _>>()?;
    RiskCurve::new(functional, grid.to_vec(), values)
}

/// `start, start + step, ..., stop` with the point count rounded to the
/// nearest integer, so `uniform_grid(0.0, 10.0, 0.01)` has 1001 points.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || !(stop >= start) {
        return vec![start];
    }
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| if i == n { stop } else { start + i as f64 * step }).collect()
}
