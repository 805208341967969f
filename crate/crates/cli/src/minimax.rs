use serde::{Deserialize, Serialize};

use mse_combine::risk::{minimax_summary, mu_sd_validated, sweep, Functional, VALIDATED_MU_SD};
use mse_combine::ExpectationEngine;

use crate::config::{GridSpec, MinimaxArgs};
use crate::error::{usage, CliError, ExitCodeExt};
use crate::output::{emit, json_string};

/// Which dominance comparison to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Claim {
    /// Combined vs consistent estimator, equal rates.
    Combined,
    /// Pre-test vs combined estimator.
    Pretest { lambda: f64 },
    /// Combined vs consistent estimator, mixed rates.
    MixedRates { mu_sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub claim: String,
    pub max_gain: f64,
    pub max_loss: f64,
    pub dominates: bool,
    pub engine: ExpectationEngine,
    pub grid: GridSpec,
    pub in_validated_region: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn split_param(s: &str) -> Result<(&str, Option<f64>), CliError> {
    match s.split_once('(') {
        None => Ok((s, None)),
        Some((head, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| usage(format!("malformed claim '{s}'")))?;
            let v = inner
                .trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("malformed claim parameter in '{s}'")))?;
            Ok((head, Some(v)))
        }
    }
}

pub fn parse_claim(s: &str, lambda: Option<f64>, mu_sd: Option<f64>) -> Result<Claim, CliError> {
    let (head, inline) = split_param(s.trim())?;
    match head.to_ascii_lowercase().as_str() {
        "thm1.3" => Ok(Claim::Combined),
        "prop1.3" => {
            let lambda = inline
                .or(lambda)
                .ok_or_else(|| usage("lambda required for prop1.3"))?;
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(usage(format!("lambda must be finite and non-negative, got {lambda}")));
            }
            Ok(Claim::Pretest { lambda })
        }
        "thm2.3" => {
            let mu_sd = inline
                .or(mu_sd)
                .ok_or_else(|| usage("mu-sd required for thm2.3"))?;
            if !mu_sd.is_finite() {
                return Err(usage(format!("mu-sd must be finite, got {mu_sd}")));
            }
            Ok(Claim::MixedRates { mu_sd })
        }
        _ => Err(usage(format!(
            "unknown claim '{s}' (expected thm1.3, prop1.3 or thm2.3)"
        ))),
    }
}

impl Claim {
    pub fn label(&self) -> String {
        match self {
            Claim::Combined => "thm1.3".into(),
            Claim::Pretest { lambda } => format!("prop1.3({lambda})"),
            Claim::MixedRates { mu_sd } => format!("thm2.3({mu_sd})"),
        }
    }

    fn functional(&self) -> Functional {
        match *self {
            Claim::Combined => Functional::Delta,
            Claim::Pretest { lambda } => Functional::PretestGap { lambda },
            Claim::MixedRates { mu_sd } => Functional::LambdaCurve { mu_sd },
        }
    }

    fn default_step(&self) -> f64 {
        match self {
            Claim::Combined => 0.01,
            Claim::Pretest { .. } => 0.05,
            Claim::MixedRates { .. } => 0.1,
        }
    }
}

pub fn report(args: &MinimaxArgs) -> Result<MinimaxReport, CliError> {
    let name = args.claim.as_deref().ok_or_else(|| usage("claim required"))?;
    let claim = parse_claim(name, args.lambda, args.mu_sd)?;
    let engine = args.engine.engine()?;
    let (grid, spec) = args.grid.build(claim.default_step())?;
    let integ = engine.build().or_usage()?;
    let curve = sweep(claim.functional(), &grid, &integ).or_usage()?;
    let verdict = minimax_summary(&curve).or_usage()?;
    let (in_validated_region, note) = match claim {
        Claim::MixedRates { mu_sd } if !mu_sd_validated(mu_sd) => (
            false,
            Some(format!(
                "mu_sd = {mu_sd} is outside the validated region |mu_sd| <= {VALIDATED_MU_SD}; \
                 the verdict is reported but dominance is not established there"
            )),
        ),
        _ => (true, None),
    };
    Ok(MinimaxReport {
        claim: claim.label(),
        max_gain: verdict.max_gain,
        max_loss: verdict.max_loss,
        dominates: verdict.dominates,
        engine,
        grid: spec,
        in_validated_region,
        note,
    })
}

pub fn run(args: MinimaxArgs) -> Result<(), CliError> {
    let r = report(&args)?;
    emit(args.output.as_deref(), &json_string(&r)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_parsing() {
        assert_eq!(parse_claim("thm1.3", None, None).unwrap(), Claim::Combined);
        assert_eq!(
            parse_claim("prop1.3(3.84)", None, None).unwrap(),
            Claim::Pretest { lambda: 3.84 }
        );
        assert_eq!(
            parse_claim("prop1.3", Some(1.0), None).unwrap(),
            Claim::Pretest { lambda: 1.0 }
        );
        assert_eq!(
            parse_claim("THM2.3", None, Some(0.2)).unwrap(),
            Claim::MixedRates { mu_sd: 0.2 }
        );
        assert!(parse_claim("prop1.3", None, None).is_err());
        assert!(parse_claim("prop1.3(x)", None, None).is_err());
        assert!(parse_claim("thm9", None, None).is_err());
        assert_eq!(Claim::Pretest { lambda: 1.0 }.label(), "prop1.3(1)");
    }

    #[test]
    fn report_round_trips() {
        let r = report(&MinimaxArgs {
            claim: Some("thm2.3(0.6)".into()),
            ..Default::default()
        })
        .unwrap();
        assert!(!r.in_validated_region);
        assert!(r.note.is_some());
        let back: MinimaxReport = serde_json::from_str(&json_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
