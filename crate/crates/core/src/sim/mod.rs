//! Monte Carlo harness for the finite-sample MSE of the consistent,
//! efficient, combined and pre-test estimators.
//!
//! Replication `r` draws its data from `ChaCha8Rng::seed_from_u64(replication_seed(seed, r))`,
//! so results do not depend on how replications are scheduled across threads.

mod dgp;
mod estimators;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combine::{combine, combine_pretest, CombineError};
use crate::expect::Integrator;
use crate::risk::{delta, lambda_curve, Functional, RiskCurve, RiskError};

pub use dgp::{
    generate, CefShape, Dataset, DgpKind, DgpSpec, IvDgp, StratifiedDgp, TwoRateDgp,
    MIN_SAMPLE_SIZE,
};
pub use estimators::estimate_pair;

/// Largest tolerated fraction of failed replications.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid DGP: {0}")]
    InvalidDgp(String),
    #[error("rank deficiency: {0}")]
    RankDeficient(&'static str),
    #[error("empty cell: {0}")]
    EmptyCell(String),
    #[error("dataset is {found:?} but estimators for {expected:?} were requested")]
    KindMismatch { expected: DgpKind, found: DgpKind },
    #[error("at least 2 replications are required, got {0}")]
    TooFewReplications(usize),
    #[error("lambda must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("{failures} of {replications} replications failed (first: {first})")]
    TooManyFailures {
        failures: usize,
        replications: usize,
        first: String,
    },
    #[error("local-alternative grid is empty")]
    EmptyGrid,
    #[error("design has no variance gap between the estimators")]
    NoVarianceGap,
    #[error(transparent)]
    Combine(#[from] CombineError),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index`: `splitmix64(seed ^ splitmix64(index))`.
pub fn replication_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorLabel {
    Consistent,
    Efficient,
    Combined,
    Pretest { lambda: f64 },
}

impl fmt::Display for EstimatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorLabel::Consistent => f.write_str("beta_c"),
            EstimatorLabel::Efficient => f.write_str("beta_e"),
            EstimatorLabel::Combined => f.write_str("beta_mse"),
            EstimatorLabel::Pretest { lambda } => write!(f, "beta_mse_lambda_{lambda}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub estimator: String,
    pub bias: f64,
    /// Replication variance with divisor `R`, so `mse = bias² + variance`.
    pub variance: f64,
    pub mse: f64,
    /// Standard error of `mse`: sample sd of the squared errors over `sqrt(R)`.
    pub mc_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseMetadata {
    pub dgp: DgpSpec,
    pub replications: usize,
    pub seed: u64,
    pub failures: usize,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseTable {
    pub rows: Vec<MseRow>,
    pub metadata: MseMetadata,
}

impl MseTable {
    pub fn row(&self, estimator: &str) -> Option<&MseRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }
}

/// Errors of every estimator in each successful replication.
struct Replications {
    labels: Vec<EstimatorLabel>,
    /// `errors[r][j]`: estimate `j` minus the truth in replication `r`.
    errors: Vec<Vec<f64>>,
    failures: usize,
}

fn labels_for(lambdas: &[f64]) -> Vec<EstimatorLabel> {
    let mut labels = vec![
        EstimatorLabel::Consistent,
        EstimatorLabel::Efficient,
        EstimatorLabel::Combined,
    ];
    labels.extend(lambdas.iter().map(|&lambda| EstimatorLabel::Pretest { lambda }));
    labels
}

fn one_replication(spec: &DgpSpec, lambdas: &[f64], seed: u64) -> Result<Vec<f64>, SimError> {
    let data = generate(spec, seed)?;
    let input = estimate_pair(&data, spec.kind())?;
    let truth = spec.true_beta();
    let mut out = Vec::with_capacity(3 + lambdas.len());
    out.push(input.beta_c - truth);
    out.push(input.beta_e - truth);
    out.push(combine(&input)?.beta - truth);
    for &l in lambdas {
        out.push(combine_pretest(&input, l)?.beta - truth);
    }
    Ok(out)
}

fn replicate(
    spec: &DgpSpec,
    lambdas: &[f64],
    replications: usize,
    seed: u64,
) -> Result<Replications, SimError> {
    spec.validate()?;
    if replications < 2 {
        return Err(SimError::TooFewReplications(replications));
    }
    if let Some(&l) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(SimError::InvalidLambda(l));
    }
    let results: Vec<Result<Vec<f64>, SimError>> = (0..replications)
        .into_par_iter()
        .map(|r| one_replication(spec, lambdas, replication_seed(seed, r as u64)))
        .collect();
    let mut errors = Vec::with_capacity(replications);
    let mut failures = 0;
    let mut first = None;
    for res in results {
        match res {
            Ok(e) => errors.push(e),
            Err(err) => {
                failures += 1;
                first.get_or_insert(err);
            }
        }
    }
    if let Some(err) = first {
        if failures as f64 > MAX_FAILURE_RATE * replications as f64 || errors.len() < 2 {
            return Err(SimError::TooManyFailures {
                failures,
                replications,
                first: err.to_string(),
            });
        }
    }
    Ok(Replications {
        labels: labels_for(lambdas),
        errors,
        failures,
    })
}

fn column(reps: &Replications, j: usize) -> impl Iterator<Item = f64> + Clone + '_ {
    reps.errors.iter().map(move |e| e[j])
}

/// Mean and sample standard deviation, accumulated in replication order.
fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let m = values.clone().sum::<f64>() / n;
    let ss: f64 = values.map(|v| (v - m).powi(2)).sum();
    (m, (ss / (n - 1.0)).sqrt())
}

fn row_stats(label: EstimatorLabel, errs: impl Iterator<Item = f64> + Clone) -> MseRow {
    let n = errs.clone().count() as f64;
    let bias = errs.clone().sum::<f64>() / n;
    let variance = errs.clone().map(|e| (e - bias).powi(2)).sum::<f64>() / n;
    let (mse, sd_sq) = mean_sd(errs.map(|e| e * e));
    MseRow {
        estimator: label.to_string(),
        bias,
        variance,
        mse,
        mc_se: sd_sq / n.sqrt(),
    }
}

/// Finite-sample bias, variance and MSE of each estimator over `replications`
/// draws. Failed replications are dropped and counted; more than 1% aborts.
pub fn run_monte_carlo(
    spec: &DgpSpec,
    lambdas: &[f64],
    replications: usize,
    seed: u64,
) -> Result<MseTable, SimError> {
    let reps = replicate(spec, lambdas, replications, seed)?;
    let rows = reps
        .labels
        .iter()
        .enumerate()
        .map(|(j, &label)| row_stats(label, column(&reps, j)))
        .collect();
    Ok(MseTable {
        rows,
        metadata: MseMetadata {
            dgp: spec.clone(),
            replications,
            seed,
            failures: reps.failures,
            lambdas: lambdas.to_vec(),
        },
    })
}

/// One local alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPoint {
    /// `rate * (beta_E - beta_0)`.
    pub h: f64,
    /// Standardized local parameter fed to the asymptotic curve.
    pub g: f64,
    /// Normalized excess MSE of the combined estimator over the consistent one.
    pub empirical: f64,
    /// Standard error of `empirical` from the paired squared-error differences.
    pub empirical_se: f64,
    pub predicted: f64,
    /// `μ / σ_C` measured from the replications (zero for equal rates).
    pub mu_sd: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSweep {
    pub dgp: DgpSpec,
    pub replications: usize,
    pub seed: u64,
    pub points: Vec<LocalPoint>,
    /// Empirical normalized excess MSE against `g`.
    pub empirical: RiskCurve,
    /// Asymptotic prediction against `g`.
    pub predicted: RiskCurve,
}

/// Runs the Monte Carlo at `beta_E - beta_0 = h / rate` for each `h`.
///
/// Equal rates: normalizes by `n / (σ²_C - σ²_E)` using the design's limit
/// variances and predicts `Δ(h / sqrt(σ²_C - σ²_E))`.
/// Discontinuity design: measures `μ` and `σ²_C` of the scaled local
/// estimator from the replications, normalizes by `rate² / σ²_C` and
/// predicts `Λ((h - μ) / σ_C, μ / σ_C)`.
pub fn local_alternative_sweep(
    template: &DgpSpec,
    h_grid: &[f64],
    n: usize,
    replications: usize,
    seed: u64,
    integ: &Integrator,
) -> Result<LocalSweep, SimError> {
    if h_grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    let base = template.with_n(n);
    base.validate()?;
    let rate = base.rate();
    let mut points = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let spec = base.with_efficient_bias(h / rate)?;
        let reps = replicate(&spec, &[], replications, seed)?;
        let r = reps.errors.len() as f64;
        let (sigma2_c, mu, scale) = match spec.asymptotic_variances() {
            Some((c, e)) => {
                if c - e <= 0.0 {
                    return Err(SimError::NoVarianceGap);
                }
                (c - e, 0.0, rate * rate / (c - e))
            }
            None => {
                let (m, sd) = mean_sd(column(&reps, 0));
                let var = sd * sd * (r - 1.0) / r;
                let s2 = rate * rate * var;
                (s2, rate * m, rate * rate / s2)
            }
        };
        let diffs = reps.errors.iter().map(|e| e[2] * e[2] - e[0] * e[0]);
        let (m, sd) = mean_sd(diffs);
        let (g, mu_sd, predicted) = if spec.equal_rates() {
            let g = h / sigma2_c.sqrt();
            (g, 0.0, delta(g, integ)?.value)
        } else {
            let sd_c = sigma2_c.sqrt();
            let g = (h - mu) / sd_c;
            let mu_sd = mu / sd_c;
            (g, mu_sd, lambda_curve(g, mu_sd, integ)?.value)
        };
        points.push(LocalPoint {
            h,
            g,
            empirical: scale * m,
            empirical_se: scale * sd / r.sqrt(),
            predicted,
            mu_sd,
            failures: reps.failures,
        });
    }
    let functional = if base.equal_rates() {
        Functional::Delta
    } else {
        let avg = points.iter().map(|p| p.mu_sd).sum::<f64>() / points.len() as f64;
        Functional::LambdaCurve { mu_sd: avg }
    };
    let grid: Vec<f64> = points.iter().map(|p| p.g).collect();
    let empirical = RiskCurve::new(
        functional,
        grid.clone(),
        points.iter().map(|p| p.empirical).collect(),
    )?;
    let predicted = RiskCurve::new(functional, grid, points.iter().map(|p| p.predicted).collect())?;
    Ok(LocalSweep {
        dgp: base,
        replications,
        seed,
        points,
        empirical,
        predicted,
    })
}
