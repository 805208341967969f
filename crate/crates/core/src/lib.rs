//! Combining a consistent estimator with an efficient but possibly
//! inconsistent one by minimizing their estimated MSE.
//!
//! - [`combine`]: closed-form weights, the combined and pre-test estimators,
//!   the Hausman statistic and the chi-square(1) level mapping.
//! - [`expect`]: `E[f(N)]` for `N ~ Normal(g, 1)` by Gauss–Hermite quadrature,
//!   Halton quasi–Monte Carlo or seeded pseudo–Monte Carlo.
//! - [`risk`]: local-asymptotic risk functionals and minimax-regret verdicts.
//! - [`sim`]: finite-sample Monte Carlo harness over synthetic designs.

pub mod combine;
pub mod expect;
pub mod risk;
pub mod sim;

pub use combine::{
    combine, combine_pretest, diff_variance, hausman_statistic, level_to_lambda, optimal_weight,
    pretest_level, pretest_weight, CombineError, CombinedEstimate, EstimatorInput,
};
pub use expect::{expect_normal, Estimate, ExpectError, ExpectationEngine, Integrator, Method};
pub use sim::{
    estimate_pair, generate, local_alternative_sweep, run_monte_carlo, Dataset, DgpKind, DgpSpec,
    IvDgp, MseTable, SimError, StratifiedDgp, TwoRateDgp,
};
