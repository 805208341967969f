use serde::{Deserialize, Serialize};

use mse_combine::risk::{sweep, Functional, RiskCurve};
use mse_combine::ExpectationEngine;

use crate::config::{CurveArgs, GridSpec};
use crate::error::{usage, CliError, ExitCodeExt};
use crate::output::{csv_string, emit, fmt_sig12, json_string, Format};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub engine: ExpectationEngine,
    pub grid: GridSpec,
    pub curve: RiskCurve,
}

fn param(value: Option<f64>, name: &str, functional: &str) -> Result<f64, CliError> {
    value.ok_or_else(|| usage(format!("{name} required for the {functional} functional")))
}

pub fn parse_functional(name: &str, lambda: Option<f64>, mu_sd: Option<f64>) -> Result<Functional, CliError> {
    let key = name.to_ascii_lowercase().replace('_', "-");
    Ok(match key.as_str() {
        "delta" => Functional::Delta,
        "delta-pretest" => Functional::DeltaPretest {
            lambda: param(lambda, "lambda", name)?,
        },
        "pretest-gap" => Functional::PretestGap {
            lambda: param(lambda, "lambda", name)?,
        },
        "lambda" => Functional::LambdaCurve {
            mu_sd: param(mu_sd, "mu-sd", name)?,
        },
        _ => {
            return Err(usage(format!(
                "unknown functional '{name}' (expected delta, delta-pretest, pretest-gap or lambda)"
            )))
        }
    })
}

pub fn report(args: &CurveArgs) -> Result<CurveReport, CliError> {
    let name = args.functional.as_deref().unwrap_or("delta");
    let functional = parse_functional(name, args.lambda, args.mu_sd)?;
    let engine = args.engine.engine()?;
    let (grid, spec) = args.grid.build(0.01)?;
    let integ = engine.build().or_usage()?;
    let curve = sweep(functional, &grid, &integ).or_usage()?;
    Ok(CurveReport {
        engine,
        grid: spec,
        curve,
    })
}

pub fn to_csv(curve: &RiskCurve) -> Result<String, CliError> {
    let extra = match curve.functional {
        Functional::Delta => None,
        Functional::DeltaPretest { lambda } | Functional::PretestGap { lambda } => {
            Some(("lambda", lambda))
        }
        Functional::LambdaCurve { mu_sd } => Some(("mu_sd", mu_sd)),
    };
    let mut header = vec!["g", "value"];
    header.extend(extra.map(|e| e.0));
    let rows: Vec<Vec<String>> = curve
        .grid
        .iter()
        .zip(&curve.values)
        .map(|(g, v)| {
            let mut row = vec![fmt_sig12(*g), fmt_sig12(*v)];
            row.extend(extra.map(|e| fmt_sig12(e.1)));
            row
        })
        .collect();
    csv_string(&header, &rows)
}

pub fn run(args: CurveArgs) -> Result<(), CliError> {
    let r = report(&args)?;
    let text = match args.format.unwrap_or_default() {
        Format::Csv => to_csv(&r.curve)?,
        Format::Json => json_string(&r)?,
    };
    emit(args.output.as_deref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GridArgs;

    fn curve_args(functional: &str) -> CurveArgs {
        CurveArgs {
            functional: Some(functional.into()),
            grid: GridArgs {
                grid: Some(vec![0.0, 0.5, 2.0]),
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn functional_names() {
        assert_eq!(parse_functional("delta", None, None).unwrap(), Functional::Delta);
        assert_eq!(
            parse_functional("delta_pretest", Some(1.0), None).unwrap(),
            Functional::DeltaPretest { lambda: 1.0 }
        );
        assert!(parse_functional("delta-pretest", None, None).is_err());
        assert!(parse_functional("gamma", None, None).is_err());
    }

    #[test]
    fn json_round_trip() {
        let r = report(&CurveArgs {
            mu_sd: Some(0.3),
            ..curve_args("lambda")
        })
        .unwrap();
        let back: CurveReport = serde_json::from_str(&json_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_has_parameter_column() {
        let r = report(&CurveArgs {
            lambda: Some(1.0),
            ..curve_args("delta-pretest")
        })
        .unwrap();
        let csv = to_csv(&r.curve).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("g,value,lambda"));
        assert_eq!(lines.count(), 3);
    }
}
