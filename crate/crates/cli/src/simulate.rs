use mse_combine::sim::{run_monte_carlo, MseTable, SimError};

use crate::config::SimulateArgs;
use crate::error::{usage, CliError, ExitCodeExt, QUALITY};
use crate::output::{csv_string, emit, fmt_sig12, json_string, Format};

pub const DEFAULT_REPLICATIONS: usize = 1000;

pub fn table(args: &SimulateArgs) -> Result<MseTable, CliError> {
    let spec = args.dgp.spec()?;
    let replications = args.replications.unwrap_or(DEFAULT_REPLICATIONS);
    let lambdas = args.lambdas.clone().unwrap_or_default();
    match run_monte_carlo(&spec, &lambdas, replications, args.seed.unwrap_or(0)) {
        Ok(t) => Ok(t),
        Err(e @ SimError::TooManyFailures { .. }) => Err(CliError {
            code: QUALITY,
            source: e.into(),
        }),
        Err(SimError::TooFewReplications(r)) => {
            Err(usage(format!("replications must be at least 2, got {r}")))
        }
        Err(e) => Err(e).or_usage(),
    }
}

pub fn to_csv(table: &MseTable) -> Result<String, CliError> {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.estimator.clone(),
                fmt_sig12(r.bias),
                fmt_sig12(r.variance),
                fmt_sig12(r.mse),
                fmt_sig12(r.mc_se),
            ]
        })
        .collect();
    csv_string(&["estimator", "bias", "variance", "mse", "mc_se"], &rows)
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let t = table(&args)?;
    let json = json_string(&t)?;
    let text = match args.format.unwrap_or_default() {
        Format::Csv => to_csv(&t)?,
        Format::Json => json.clone(),
    };
    emit(args.output.as_deref(), &text)?;
    if let Some(path) = &args.json {
        emit(Some(path), &json)?;
    }
    Ok(())
}
