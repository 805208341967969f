//! Empirical-MSE weights for combining a consistent estimator with an
//! efficient one.
//!
//! Given the consistent estimate `beta_c`, the efficient estimate `beta_e`,
//! their estimated variances and covariance, the combination
//! `p * beta_e + (1 - p) * beta_c` has estimated MSE
//!
//! ```text
//! m(p) = p² (beta_e - beta_c)² + p² V_e + (1 - p)² V_c + 2 p (1 - p) cov
//! ```
//!
//! which is a convex quadratic in `p` with minimizer
//! `p = (V_c - cov) / ((beta_e - beta_c)² + V(beta_e - beta_c))`.
//!
//! The pre-test family replaces the squared difference by
//! `max(0, (beta_e - beta_c)² - lambda * V(beta_e - beta_c))`, which collapses
//! to the efficient estimate whenever the Hausman statistic is at most
//! `lambda` (and `cov = V_e`).
//!
//! Weights are never clamped to `[0, 1]`; inputs outside the usual ordering
//! `V_c >= cov >= V_e` are reported through [`CombinedEstimate::ordering_violation`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expect::inv_norm_cdf;

/// Negative `V(beta_e - beta_c)` within this distance of zero is snapped to zero.
pub const DIFF_VARIANCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CombineError {
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} must be non-negative, got {value}")]
    NegativeVariance { field: &'static str, value: f64 },
    #[error("variance of the estimator difference is negative ({0}); variance inputs are inconsistent")]
    NegativeDiffVariance(f64),
    #[error("degenerate denominator: estimators are identical with zero difference variance")]
    DegenerateDenominator,
    #[error("estimated MSE is not convex in the weight (curvature {0}); variance inputs are inconsistent")]
    NonConvex(f64),
    #[error("lambda must be a finite non-negative number, got {0}")]
    InvalidLambda(f64),
    #[error("difference variance is zero while the estimates differ; Hausman statistic is undefined")]
    ZeroDiffVariance,
    #[error("test level must lie in [0, 1), got {0}")]
    LevelOutOfRange(f64),
}

/// The observed quintuple feeding every combination formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorInput {
    /// Consistent estimate.
    pub beta_c: f64,
    /// Efficient (possibly inconsistent) estimate.
    pub beta_e: f64,
    /// Estimated variance of `beta_c`.
    pub var_c: f64,
    /// Estimated variance of `beta_e`.
    pub var_e: f64,
    /// Estimated covariance of the two estimates.
    pub cov_ce: f64,
}

impl EstimatorInput {
    /// Validates and builds an input. A missing covariance defaults to `var_e`,
    /// the covariance implied when the efficient estimator is asymptotically
    /// efficient under the null.
    pub fn new(
        beta_c: f64,
        beta_e: f64,
        var_c: f64,
        var_e: f64,
        cov_ce: Option<f64>,
    ) -> Result<Self, CombineError> {
        let input = Self {
            beta_c,
            beta_e,
            var_c,
            var_e,
            cov_ce: cov_ce.unwrap_or(var_e),
        };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<(), CombineError> {
        for (field, value) in [
            ("beta-c", self.beta_c),
            ("beta-e", self.beta_e),
            ("var-c", self.var_c),
            ("var-e", self.var_e),
            ("cov", self.cov_ce),
        ] {
            if !value.is_finite() {
                return Err(CombineError::NonFinite { field, value });
            }
        }
        for (field, value) in [("var-c", self.var_c), ("var-e", self.var_e)] {
            if value < 0.0 {
                return Err(CombineError::NegativeVariance { field, value });
            }
        }
        Ok(())
    }

    /// Squared difference of the two estimates.
    pub fn bias_sq(&self) -> f64 {
        let d = self.beta_e - self.beta_c;
        d * d
    }

    /// Estimated MSE of `p * beta_e + (1 - p) * beta_c`.
    pub fn objective(&self, p: f64) -> f64 {
        self.objective_with_bias(p, self.bias_sq())
    }

    /// Objective of the pre-test family: the squared difference is shrunk by
    /// `lambda` times the difference variance, floored at zero.
    pub fn pretest_objective(&self, p: f64, lambda: f64) -> Result<f64, CombineError> {
        check_lambda(lambda)?;
        let shrunk = (self.bias_sq() - lambda * diff_variance(self)?).max(0.0);
        Ok(self.objective_with_bias(p, shrunk))
    }

    fn objective_with_bias(&self, p: f64, bias_sq: f64) -> f64 {
        let q = 1.0 - p;
        p * p * bias_sq + p * p * self.var_e + q * q * self.var_c + 2.0 * p * q * self.cov_ce
    }

    /// `true` when `var_c >= cov_ce >= var_e`, the ordering under which both
    /// weights stay in `[0, 1]`.
    pub fn covariance_ordered(&self) -> bool {
        self.var_c >= self.cov_ce && self.cov_ce >= self.var_e
    }
}

/// Combined point estimate together with its weight on `beta_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedEstimate {
    pub beta: f64,
    /// Weight applied to the efficient estimate.
    pub weight: f64,
    /// Minimized estimated MSE.
    pub est_mse: f64,
    /// Estimates coincide with zero difference variance; `beta_e` was returned.
    pub degenerate: bool,
    /// Inputs violate `var_c >= cov_ce >= var_e`.
    pub ordering_violation: bool,
}

/// `V(beta_e - beta_c) = var_e + var_c - 2 cov`, required non-negative.
pub fn diff_variance(input: &EstimatorInput) -> Result<f64, CombineError> {
    let v = signed_diff_variance(input);
    if v < 0.0 {
        Err(CombineError::NegativeDiffVariance(v))
    } else {
        Ok(v)
    }
}

/// Difference variance with round-off snapped to zero but genuine negative
/// values kept. Evaluated as `(var_c - cov) + (var_e - cov)` so that with
/// `cov = var_e` the result is bit-identical to the weight numerator.
fn signed_diff_variance(input: &EstimatorInput) -> f64 {
    let v = (input.var_c - input.cov_ce) + (input.var_e - input.cov_ce);
    if v < 0.0 && v >= -DIFF_VARIANCE_TOLERANCE {
        0.0
    } else {
        v
    }
}

/// Closed-form minimizer of [`EstimatorInput::objective`] over the real line.
///
/// Only the curvature `(beta_e - beta_c)² + V(beta_e - beta_c)` has to be
/// positive; a negative difference variance is tolerated when the squared
/// difference outweighs it.
pub fn optimal_weight(input: &EstimatorInput) -> Result<f64, CombineError> {
    let denom = input.bias_sq() + signed_diff_variance(input);
    weight_from_denominator(input, denom)
}

/// Pre-test weight. Equals [`optimal_weight`] at `lambda = 0` and is
/// nondecreasing in `lambda` when `var_c >= cov_ce`. For `lambda > 0` the
/// difference variance must be non-negative.
pub fn pretest_weight(input: &EstimatorInput, lambda: f64) -> Result<f64, CombineError> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return optimal_weight(input);
    }
    let dv = diff_variance(input)?;
    let shrunk = (input.bias_sq() - lambda * dv).max(0.0);
    weight_from_denominator(input, shrunk + dv)
}

fn weight_from_denominator(input: &EstimatorInput, denom: f64) -> Result<f64, CombineError> {
    if denom == 0.0 {
        return Err(CombineError::DegenerateDenominator);
    }
    if denom < 0.0 {
        return Err(CombineError::NonConvex(denom));
    }
    Ok((input.var_c - input.cov_ce) / denom)
}

/// Empirical-MSE-minimizing combination.
pub fn combine(input: &EstimatorInput) -> Result<CombinedEstimate, CombineError> {
    finish(input, optimal_weight(input), |p| input.objective(p))
}

/// Pre-test combination with critical value `lambda`. `est_mse` is the
/// minimized pre-test objective.
pub fn combine_pretest(input: &EstimatorInput, lambda: f64) -> Result<CombinedEstimate, CombineError> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return combine(input);
    }
    let dv = diff_variance(input)?;
    let shrunk = (input.bias_sq() - lambda * dv).max(0.0);
    finish(input, pretest_weight(input, lambda), |p| {
        input.objective_with_bias(p, shrunk)
    })
}

fn finish(
    input: &EstimatorInput,
    weight: Result<f64, CombineError>,
    objective: impl Fn(f64) -> f64,
) -> Result<CombinedEstimate, CombineError> {
    input.validate()?;
    let (weight, degenerate) = match weight {
        Ok(p) => (p, false),
        // Both points coincide and carry no sampling noise in their difference.
        Err(CombineError::DegenerateDenominator) => (1.0, true),
        Err(e) => return Err(e),
    };
    Ok(CombinedEstimate {
        beta: weight * input.beta_e + (1.0 - weight) * input.beta_c,
        weight,
        est_mse: objective(weight).max(0.0),
        degenerate,
        ordering_violation: !input.covariance_ordered(),
    })
}

/// Hausman statistic `(beta_e - beta_c)² / V(beta_e - beta_c)`.
pub fn hausman_statistic(input: &EstimatorInput) -> Result<f64, CombineError> {
    let dv = diff_variance(input)?;
    let num = input.bias_sq();
    if num == 0.0 {
        return Ok(0.0);
    }
    if dv == 0.0 {
        return Err(CombineError::ZeroDiffVariance);
    }
    Ok(num / dv)
}

/// Level of the pre-test associated with `lambda`: the chi-square(1) CDF,
/// `F1(lambda) = erf(sqrt(lambda / 2))`.
pub fn pretest_level(lambda: f64) -> Result<f64, CombineError> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(CombineError::InvalidLambda(lambda));
    }
    if lambda.is_infinite() {
        return Ok(1.0);
    }
    Ok(libm::erf((0.5 * lambda).sqrt()))
}

/// Inverse of [`pretest_level`]: the chi-square(1) quantile.
pub fn level_to_lambda(alpha: f64) -> Result<f64, CombineError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(CombineError::LevelOutOfRange(alpha));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    // Work with the upper tail so levels close to 1 keep their precision.
    let z = inv_norm_cdf(0.5 * (1.0 - alpha)).map_err(|_| CombineError::LevelOutOfRange(alpha))?;
    Ok(z * z)
}

fn check_lambda(lambda: f64) -> Result<(), CombineError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(CombineError::InvalidLambda(lambda))
    }
}
