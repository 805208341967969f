//! Command-line arguments and the optional TOML config file.
//!
//! Every option may appear either as a flag or in the file; flags win. The
//! file has one table per command plus shared `[engine]`, `[grid]` and
//! `[dgp]` tables:
//!
//! ```toml
//! [engine]
//! method = "halton"
//! nodes = 1000000
//!
//! [risk_curve]
//! functional = "delta"
//! output = "delta.csv"
//!
//! [dgp]
//! kind = "iv"
//! n = 2000
//! endo = 0.0
//!
//! [simulate]
//! replications = 2000
//! seed = 1
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};

use mse_combine::risk::uniform_grid;
use mse_combine::sim::{CefShape, DgpSpec, IvDgp, StratifiedDgp, TwoRateDgp};
use mse_combine::{ExpectationEngine, Method};

use crate::error::{usage, CliError, ExitCodeExt};
use crate::output::Format;

/// Fills every `None` field of `$a` from `$b`.
macro_rules! fill {
    ($a:ident, $b:ident; $($f:ident),+ $(,)?) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )+
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineArgs {
    /// Expectation engine: gauss-hermite, halton or pseudo.
    #[arg(long)]
    pub method: Option<String>,
    /// Quadrature nodes or Monte Carlo draws.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Seed of the pseudo-random engine.
    #[arg(long = "engine-seed")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub halton_base: Option<u32>,
    #[arg(long)]
    pub halton_skip: Option<u64>,
}

pub const DEFAULT_DRAWS: usize = 1_000_000;

impl EngineArgs {
    pub fn merged(mut self, file: Self) -> Self {
        fill!(self, file; method, nodes, seed, halton_base, halton_skip);
        self
    }

    pub fn engine(&self) -> Result<ExpectationEngine, CliError> {
        let method: Method = match &self.method {
            Some(m) => m.parse().or_usage()?,
            None => Method::GaussHermite,
        };
        let mut engine = match method {
            Method::GaussHermite => ExpectationEngine::gauss_hermite(
                self.nodes.unwrap_or(mse_combine::expect::DEFAULT_HERMITE_NODES),
            ),
            Method::HaltonMc => ExpectationEngine::halton(self.nodes.unwrap_or(DEFAULT_DRAWS)),
            Method::PseudoMc => {
                ExpectationEngine::pseudo(self.nodes.unwrap_or(DEFAULT_DRAWS), self.seed.unwrap_or(0))
            }
        };
        if let Some(b) = self.halton_base {
            engine = engine.with_halton_base(b);
        }
        if let Some(s) = self.halton_skip {
            engine = engine.with_halton_skip(s);
        }
        engine.validate().or_usage()?;
        Ok(engine)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub grid_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_stop: Option<f64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Explicit comma-separated grid; overrides start/stop/step.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid: Option<Vec<f64>>,
}

/// The grid actually used, echoed in JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: Option<f64>,
    pub points: usize,
}

impl GridArgs {
    pub fn merged(mut self, file: Self) -> Self {
        fill!(self, file; grid_start, grid_stop, grid_step, grid);
        self
    }

    pub fn build(&self, default_step: f64) -> Result<(Vec<f64>, GridSpec), CliError> {
        if let Some(points) = &self.grid {
            if points.is_empty() {
                return Err(usage("grid must not be empty"));
            }
            if points.iter().any(|g| !g.is_finite()) || points.windows(2).any(|w| w[0] > w[1]) {
                return Err(usage("grid must be finite and ascending"));
            }
            let spec = GridSpec {
                start: points[0],
                stop: points[points.len() - 1],
                step: None,
                points: points.len(),
            };
            return Ok((points.clone(), spec));
        }
        let start = self.grid_start.unwrap_or(0.0);
        let stop = self.grid_stop.unwrap_or(10.0);
        let step = self.grid_step.unwrap_or(default_step);
        if !(start.is_finite() && stop.is_finite() && stop >= start) {
            return Err(usage(format!("invalid grid bounds [{start}, {stop}]")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(usage(format!("grid-step must be positive, got {step}")));
        }
        let grid = uniform_grid(start, stop, step);
        let spec = GridSpec {
            start,
            stop,
            step: Some(step),
            points: grid.len(),
        };
        Ok((grid, spec))
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombineArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub beta_c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta_e: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub var_c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub var_e: Option<f64>,
    /// Covariance of the two estimates; defaults to var-e.
    #[arg(long, allow_negative_numbers = true)]
    pub cov: Option<f64>,
    /// Pre-test critical value.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "level")]
    pub lambda: Option<f64>,
    /// Pre-test level in [0, 1); converted to the chi-square(1) quantile.
    #[arg(long, allow_negative_numbers = true)]
    pub level: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl CombineArgs {
    pub fn merged(mut self, file: Self) -> Self {
        fill!(self, file; beta_c, beta_e, var_c, var_e, cov, lambda, level, format, output);
        self
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveArgs {
    /// delta, delta-pretest, pretest-gap or lambda.
    #[arg(long)]
    pub functional: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_sd: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub engine: EngineArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub grid: GridArgs,
}

impl CurveArgs {
    pub fn merged(mut self, file: Self) -> Self {
        fill!(self, file; functional, lambda, mu_sd, format, output);
        self
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimaxArgs {
    /// thm1.3, prop1.3 or thm2.3 (optionally with the parameter, e.g. prop1.3(1)).
    #[arg(long)]
    pub claim: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_sd: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub engine: EngineArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub grid: GridArgs,
}

impl MinimaxArgs {
    pub fn merged(mut self, file: Self) -> Self {
        fill!(self, file; claim, lambda, mu_sd, output);
        self
    }
}

/// Flat DGP description; `kind` selects which fields apply.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpArgs {
    /// iv, stratified or two-rate.
    #[arg(long = "dgp")]
    pub kind: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub endo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub instr_strength: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub noise_sd: Option<f64>,
    /// Per-stratum effects, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub effects: Option<Vec<f64>>,
    /// Per-stratum treatment probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub baselines: Option<Vec<f64>>,
    /// Cubic term of the conditional mean; 0 means linear.
    #[arg(long, allow_negative_numbers = true)]
    pub curvature: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub slope: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub bandwidth_const: Option<f64>,
    #[arg(long)]
    pub bandwidth_exponent: Option<f64>,
}

impl DgpArgs {
    pub fn merged(mut self, file: Self) -> Self {
        fill!(self, file; kind, n, beta0, endo, instr_strength, noise_sd, effects, probs,
            baselines, curvature, slope, cutoff, bandwidth_const, bandwidth_exponent);
        self
    }

    pub fn spec(&self) -> Result<DgpSpec, CliError> {
        let kind = self.kind.as_deref().ok_or_else(|| usage("dgp required"))?;
        let n = self.n.ok_or_else(|| usage("n required"))?;
        let beta0 = self.beta0.unwrap_or(1.0);
        let noise_sd = self.noise_sd.unwrap_or(1.0);
        let spec = match kind.to_ascii_lowercase().replace('_', "-").as_str() {
            "iv" => DgpSpec::Iv(IvDgp::new(
                n,
                beta0,
                self.endo.unwrap_or(0.0),
                self.instr_strength.unwrap_or(1.0),
                noise_sd,
            )),
            "stratified" => {
                let effects = self.effects.clone().ok_or_else(|| usage("effects required"))?;
                let probs = self.probs.clone().ok_or_else(|| usage("probs required"))?;
                DgpSpec::Stratified(StratifiedDgp {
                    n,
                    effects,
                    probs,
                    baselines: self.baselines.clone().unwrap_or_default(),
                    noise_sd,
                })
            }
            "two-rate" => DgpSpec::TwoRate(TwoRateDgp {
                n,
                beta0,
                cef_shape: match self.curvature.unwrap_or(0.0) {
                    c if c == 0.0 => CefShape::Linear,
                    curvature => CefShape::Curved { curvature },
                },
                slope: self.slope.unwrap_or(0.0),
                cutoff: self.cutoff.unwrap_or(0.0),
                bandwidth_const: self.bandwidth_const.unwrap_or(1.0),
                bandwidth_exponent: self.bandwidth_exponent.unwrap_or(0.2),
                noise_sd,
            }),
            other => {
                return Err(usage(format!(
                    "unknown dgp '{other}' (expected iv, stratified or two-rate)"
                )))
            }
        };
        spec.validate().or_usage()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, short = 'R')]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pre-test critical values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Table output; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the JSON table (with metadata) here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub dgp: DgpArgs,
}

impl SimulateArgs {
    pub fn merged(mut self, file: Self) -> Self {
        fill!(self, file; replications, seed, lambdas, format, output, json);
        self
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub engine: EngineArgs,
    #[serde(default)]
    pub grid: GridArgs,
    #[serde(default)]
    pub dgp: DgpArgs,
    #[serde(default)]
    pub combine: CombineArgs,
    #[serde(default)]
    pub risk_curve: CurveArgs,
    #[serde(default)]
    pub minimax: MinimaxArgs,
    #[serde(default)]
    pub simulate: SimulateArgs,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .or_io()?;
        toml::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))
            .or_usage()
    }
}
