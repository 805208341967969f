//! Expectations `E[f(N)]` with `N ~ Normal(g, 1)`.
//!
//! Every engine reduces to a fixed set of standard-normal abscissae `z_i`
//! with weights `w_i`, so that `E[f(N)] ≈ Σ w_i f(g + z_i)`:
//!
//! - Gauss–Hermite: `z_i = sqrt(2) t_i`, `w_i = ω_i / sqrt(pi)` from the
//!   Hermite rule `(t_i, ω_i)`;
//! - Halton quasi–Monte Carlo: `z_i = Φ⁻¹(halton(skip + i, base))`, equal weights;
//! - pseudo–Monte Carlo: ChaCha8 standard normals from `seed`, equal weights.
//!
//! Build an [`Integrator`] once per engine and reuse it: Monte Carlo
//! abscissae are generated at build time. Sums are reduced in a fixed batch
//! order, so results are bit-identical regardless of the thread count.

mod halton;
mod hermite;
mod legendre;
mod normal;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use halton::halton;
pub use hermite::{gauss_hermite_rule, MAX_HERMITE_NODES};
pub use legendre::gauss_legendre_rule;
pub use normal::{inv_norm_cdf, norm_cdf};

/// Node count of the default Gauss–Hermite engine.
pub const DEFAULT_HERMITE_NODES: usize = 150;
/// Batches used for the batch-means standard error of Monte Carlo engines.
pub const MC_BATCHES: usize = 20;
/// Piecewise quadrature: Gauss–Legendre order per panel, panel width and
/// half-width of the integration window, all in standard deviations.
const PANEL_ORDER: usize = 20;
const PANEL_WIDTH: f64 = 0.5;
const WINDOW: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpectError {
    #[error("Gauss-Hermite order must be in 1..={MAX_HERMITE_NODES}, got {0}")]
    HermiteOrder(usize),
    #[error("Gauss-Hermite engine needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("Monte Carlo engine needs at least one draw")]
    NoDraws,
    #[error("Halton base must be a prime in 2..=1000, got {0}")]
    HaltonBase(u32),
    #[error("normal quantile requires 0 < u < 1, got {0}")]
    QuantileDomain(f64),
    #[error("integrand is not finite at abscissa {abscissa} (value {value})")]
    NonFiniteIntegrand { abscissa: f64, value: f64 },
    #[error("unknown integration method '{0}' (expected gauss-hermite, halton or pseudo)")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GaussHermite,
    HaltonMc,
    PseudoMc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::GaussHermite => "gauss_hermite",
            Method::HaltonMc => "halton_mc",
            Method::PseudoMc => "pseudo_mc",
        })
    }
}

impl FromStr for Method {
    type Err = ExpectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gauss_hermite" | "gh" | "quadrature" => Ok(Method::GaussHermite),
            "halton_mc" | "halton" => Ok(Method::HaltonMc),
            "pseudo_mc" | "pseudo" | "mc" => Ok(Method::PseudoMc),
            _ => Err(ExpectError::UnknownMethod(s.to_string())),
        }
    }
}

/// Configuration of an expectation engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectationEngine {
    pub method: Method,
    /// Quadrature nodes or Monte Carlo draws.
    pub nodes: usize,
    /// PRNG seed, used by `pseudo_mc` only.
    #[serde(default)]
    pub seed: u64,
    /// Prime base of the Halton sequence.
    #[serde(default = "default_base")]
    pub halton_base: u32,
    /// Halton indices skipped before the first draw.
    #[serde(default)]
    pub halton_skip: u64,
}

fn default_base() -> u32 {
    2
}

impl Default for ExpectationEngine {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_HERMITE_NODES)
    }
}

impl fmt::Display for ExpectationEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.method {
            Method::GaussHermite => write!(f, "gauss_hermite({})", self.nodes),
            Method::HaltonMc => write!(
                f,
                "halton_mc({}, base={}, skip={})",
                self.nodes, self.halton_base, self.halton_skip
            ),
            Method::PseudoMc => write!(f, "pseudo_mc({}, seed={})", self.nodes, self.seed),
        }
    }
}

impl ExpectationEngine {
    pub fn gauss_hermite(nodes: usize) -> Self {
        Self {
            method: Method::GaussHermite,
            nodes,
            seed: 0,
            halton_base: 2,
            halton_skip: 0,
        }
    }

    pub fn halton(draws: usize) -> Self {
        Self {
            method: Method::HaltonMc,
            ..Self::gauss_hermite(draws)
        }
    }

    pub fn pseudo(draws: usize, seed: u64) -> Self {
        Self {
            method: Method::PseudoMc,
            seed,
            ..Self::gauss_hermite(draws)
        }
    }

    pub fn with_halton_base(mut self, base: u32) -> Self {
        self.halton_base = base;
        self
    }

    pub fn with_halton_skip(mut self, skip: u64) -> Self {
        self.halton_skip = skip;
        self
    }

    pub fn validate(&self) -> Result<(), ExpectError> {
        match self.method {
            Method::GaussHermite if self.nodes < 2 => Err(ExpectError::TooFewNodes(self.nodes)),
            Method::GaussHermite if self.nodes > MAX_HERMITE_NODES => {
                Err(ExpectError::HermiteOrder(self.nodes))
            }
            Method::HaltonMc | Method::PseudoMc if self.nodes == 0 => Err(ExpectError::NoDraws),
            Method::HaltonMc if !(halton::is_prime(self.halton_base) && self.halton_base <= 1000) => {
                Err(ExpectError::HaltonBase(self.halton_base))
            }
            _ => Ok(()),
        }
    }

    /// Precomputes abscissae and weights.
    pub fn build(&self) -> Result<Integrator, ExpectError> {
        self.validate()?;
        let (points, weights) = match self.method {
            Method::GaussHermite => {
                let (t, w) = gauss_hermite_rule(self.nodes)?;
                let norm = std::f64::consts::PI.sqrt().recip();
                let z = t.iter().map(|t| std::f64::consts::SQRT_2 * t).collect();
                (z, Some(w.iter().map(|w| w * norm).collect()))
            }
            Method::HaltonMc => {
                let (base, skip) = (self.halton_base, self.halton_skip);
                let z = (1..=self.nodes as u64)
                    .into_par_iter()
                    .map(|i| inv_norm_cdf(halton(skip + i, base)))
                    .collect::<Result<Vec<_>, _>>()?;
                (z, None)
            }
            Method::PseudoMc => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let z = (0..self.nodes).map(|_| StandardNormal.sample(&mut rng)).collect();
                (z, None)
            }
        };
        let panel = (self.method == Method::GaussHermite).then(|| gauss_legendre_rule(PANEL_ORDER));
        Ok(Integrator {
            engine: self.clone(),
            points,
            weights,
            panel,
        })
    }
}

/// A numerical expectation with its Monte Carlo standard error, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Sample standard error (pseudo MC) or batch-means standard error
    /// (Halton); `None` for quadrature.
    pub std_error: Option<f64>,
}

/// A built engine: fixed standard-normal abscissae and weights.
#[derive(Debug, Clone)]
pub struct Integrator {
    engine: ExpectationEngine,
    points: Vec<f64>,
    weights: Option<Vec<f64>>,
    panel: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Clone, Copy)]
struct BatchStats {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Integrator {
    pub fn engine(&self) -> &ExpectationEngine {
        &self.engine
    }

    /// Standard-normal abscissae (before the shift by `g`).
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Approximates `E[f(N)]` for `N ~ Normal(g, 1)`.
    pub fn expect<F>(&self, f: F, g: f64) -> Result<Estimate, ExpectError>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        match &self.weights {
            Some(w) => {
                let mut acc = 0.0;
                for (z, wi) in self.points.iter().zip(w) {
                    let x = g + z;
                    let v = f(x);
                    if !v.is_finite() {
                        return Err(ExpectError::NonFiniteIntegrand { abscissa: x, value: v });
                    }
                    acc += wi * v;
                }
                Ok(Estimate { value: acc, std_error: None })
            }
            None => self.expect_mc(&f, g),
        }
    }

    /// Like [`Integrator::expect`] for an `f` that is smooth except at
    /// `breaks`. The quadrature engine then integrates `f · φ(· - g)` with a
    /// composite Gauss–Legendre rule on `g ± 12` split at the breaks, since
    /// Hermite nodes converge slowly across a kink. Without breaks, and for
    /// Monte Carlo engines, this is [`Integrator::expect`].
    pub fn expect_piecewise<F>(&self, f: F, g: f64, breaks: &[f64]) -> Result<Estimate, ExpectError>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let Some((nodes, weights)) = self.panel.as_ref().filter(|_| !breaks.is_empty()) else {
            return self.expect(f, g);
        };
        let (lo, hi) = (g - WINDOW, g + WINDOW);
        let mut cuts = vec![lo];
        cuts.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
        let mut acc = 0.0;
        for seg in cuts.windows(2) {
            let panels = ((seg[1] - seg[0]) / PANEL_WIDTH).ceil().max(1.0) as usize;
            let h = (seg[1] - seg[0]) / panels as f64;
            for k in 0..panels {
                let mid = seg[0] + (k as f64 + 0.5) * h;
                for (t, w) in nodes.iter().zip(weights) {
                    let x = mid + 0.5 * h * t;
                    let v = f(x);
                    if !v.is_finite() {
                        return Err(ExpectError::NonFiniteIntegrand { abscissa: x, value: v });
                    }
                    let z = x - g;
                    acc += 0.5 * h * w * v * norm * (-0.5 * z * z).exp();
                }
            }
        }
        Ok(Estimate { value: acc, std_error: None })
    }

    fn expect_mc<F>(&self, f: &F, g: f64) -> Result<Estimate, ExpectError>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let n = self.points.len();
        let batches = MC_BATCHES.min(n);
        let stats = (0..batches)
            .into_par_iter()
            .map(|b| {
                let chunk = &self.points[b * n / batches..(b + 1) * n / batches];
                let mut sum = 0.0;
                for z in chunk {
                    let x = g + z;
                    let v = f(x);
                    if !v.is_finite() {
                        return Err(ExpectError::NonFiniteIntegrand { abscissa: x, value: v });
                    }
                    sum += v;
                }
                let count = chunk.len() as f64;
                let mean = sum / count;
                let m2 = if self.engine.method == Method::PseudoMc {
                    chunk.iter().map(|z| (f(g + z) - mean).powi(2)).sum::<f64>()
                } else {
                    0.0
                };
                Ok(BatchStats { count, mean, m2 })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let total: f64 = stats.iter().map(|s| s.mean * s.count).sum();
        let value = total / n as f64;

        let std_error = match self.engine.method {
            Method::PseudoMc if n >= 2 => {
                // Chan et al. pooled sum of squares, merged in batch order.
                let mut acc = stats[0];
                for s in &stats[1..] {
                    let count = acc.count + s.count;
                    let delta = s.mean - acc.mean;
                    acc = BatchStats {
                        count,
                        mean: acc.mean + delta * s.count / count,
                        m2: acc.m2 + s.m2 + delta * delta * acc.count * s.count / count,
                    };
                }
                Some((acc.m2 / (n as f64 - 1.0) / n as f64).sqrt())
            }
            Method::HaltonMc if batches >= 2 => {
                let b = batches as f64;
                let grand = stats.iter().map(|s| s.mean).sum::<f64>() / b;
                let var = stats.iter().map(|s| (s.mean - grand).powi(2)).sum::<f64>() / (b - 1.0);
                Some((var / b).sqrt())
            }
            _ => None,
        };
        Ok(Estimate { value, std_error })
    }
}

/// One-shot convenience: builds `engine` and evaluates `E[f(N)]`, `N ~ Normal(g, 1)`.
/// Prefer [`ExpectationEngine::build`] when evaluating many integrands.
pub fn expect_normal<F>(f: F, g: f64, engine: &ExpectationEngine) -> Result<Estimate, ExpectError>
where
    F: Fn(f64) -> f64 + Sync,
{
    engine.build()?.expect(f, g)
}
