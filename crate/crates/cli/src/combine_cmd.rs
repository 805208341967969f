use serde::{Deserialize, Serialize};

use mse_combine::{
    combine_pretest, hausman_statistic, level_to_lambda, pretest_level, CombineError,
    EstimatorInput,
};

use crate::config::CombineArgs;
use crate::error::{usage, CliError, ExitCodeExt};
use crate::output::{csv_string, emit, fmt_sig12, json_string, Format};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombineReport {
    pub input: EstimatorInput,
    pub lambda: f64,
    /// Pre-test level `F₁(lambda)`.
    pub alpha: f64,
    pub beta: f64,
    pub weight: f64,
    pub est_mse: f64,
    /// `None` when the estimates differ but their difference has zero variance.
    pub hausman: Option<f64>,
    pub degenerate: bool,
    pub ordering_violation: bool,
}

fn required(value: Option<f64>, name: &str) -> Result<f64, CliError> {
    value.ok_or_else(|| usage(format!("{name} required")))
}

pub fn report(args: &CombineArgs) -> Result<CombineReport, CliError> {
    let input = EstimatorInput::new(
        required(args.beta_c, "beta-c")?,
        required(args.beta_e, "beta-e")?,
        required(args.var_c, "var-c")?,
        required(args.var_e, "var-e")?,
        args.cov,
    )
    .or_usage()?;
    let lambda = match (args.lambda, args.level) {
        (Some(l), _) => l,
        (None, Some(a)) => level_to_lambda(a).or_usage()?,
        (None, None) => 0.0,
    };
    let alpha = pretest_level(lambda).or_usage()?;
    let est = combine_pretest(&input, lambda).or_usage()?;
    let hausman = match hausman_statistic(&input) {
        Ok(h) => Some(h),
        Err(CombineError::ZeroDiffVariance) => None,
        Err(e) => return Err(e).or_usage(),
    };
    Ok(CombineReport {
        input,
        lambda,
        alpha,
        beta: est.beta,
        weight: est.weight,
        est_mse: est.est_mse,
        hausman,
        degenerate: est.degenerate,
        ordering_violation: est.ordering_violation,
    })
}

pub fn run(args: CombineArgs) -> Result<(), CliError> {
    let r = report(&args)?;
    let text = match args.format.unwrap_or_default() {
        Format::Json => json_string(&r)?,
        Format::Csv => csv_string(
            &[
                "beta",
                "weight",
                "est_mse",
                "hausman",
                "lambda",
                "alpha",
                "degenerate",
                "ordering_violation",
            ],
            &[vec![
                fmt_sig12(r.beta),
                fmt_sig12(r.weight),
                fmt_sig12(r.est_mse),
                fmt_sig12(r.hausman.unwrap_or(f64::INFINITY)),
                fmt_sig12(r.lambda),
                fmt_sig12(r.alpha),
                r.degenerate.to_string(),
                r.ordering_violation.to_string(),
            ]],
        )?,
    };
    emit(args.output.as_deref(), &text)
}
