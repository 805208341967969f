//! Data-generating processes with closed-form probability limits.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SimError;

pub const MIN_SAMPLE_SIZE: usize = 20;

/// Linear IV model with one instrument.
///
/// ```text
/// z, v, e ~ N(0, 1) iid
/// x = instr_strength * z + v
/// u = noise_sd * (a * v + sqrt(1 - a²) * e),   a = endo * sd(x)
/// y = beta0 * x + u
/// ```
///
/// `endo` is the correlation between `x` and `u`. Because the instrument
/// must stay independent of `u`, the endogeneity has to flow through `v`,
/// which limits `|endo|` to below `1 / sd(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IvDgp {
    pub n: usize,
    #[serde(default = "one")]
    pub beta0: f64,
    #[serde(default)]
    pub endo: f64,
    #[serde(default = "one")]
    pub instr_strength: f64,
    #[serde(default = "one")]
    pub noise_sd: f64,
}

/// Stratified experiment with stratum-specific effects and assignment
/// probabilities. Unit `i` belongs to stratum `i mod K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratifiedDgp {
    pub n: usize,
    /// Treatment effect per stratum; `K` is its length.
    pub effects: Vec<f64>,
    /// Treatment probability per stratum.
    pub probs: Vec<f64>,
    /// Stratum intercepts. Empty means all zero.
    #[serde(default)]
    pub baselines: Vec<f64>,
    #[serde(default = "one")]
    pub noise_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CefShape {
    Linear,
    /// Adds `curvature * (x - cutoff)³` to the conditional mean.
    Curved { curvature: f64 },
}

impl CefShape {
    pub fn curvature(&self) -> f64 {
        match *self {
            CefShape::Linear => 0.0,
            CefShape::Curved { curvature } => curvature,
        }
    }
}

/// Sharp discontinuity design on `x ~ U(cutoff - 1, cutoff + 1)`:
///
/// ```text
/// y = beta0 * 1{x >= cutoff} + slope * |x - cutoff| + curvature * (x - cutoff)³ + noise
/// ```
///
/// The consistent estimator is the difference of means within
/// `b_n = bandwidth_const * n^(-bandwidth_exponent)` of the cutoff. The
/// efficient one fits a line on each side over the whole support, which
/// misses the cubic term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoRateDgp {
    pub n: usize,
    #[serde(default = "one")]
    pub beta0: f64,
    #[serde(default = "linear")]
    pub cef_shape: CefShape,
    #[serde(default)]
    pub slope: f64,
    #[serde(default)]
    pub cutoff: f64,
    #[serde(default = "one")]
    pub bandwidth_const: f64,
    #[serde(default = "fifth")]
    pub bandwidth_exponent: f64,
    #[serde(default = "one")]
    pub noise_sd: f64,
}

fn one() -> f64 {
    1.0
}

fn fifth() -> f64 {
    0.2
}

fn linear() -> CefShape {
    CefShape::Linear
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpKind {
    Iv,
    Stratified,
    TwoRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgpSpec {
    Iv(IvDgp),
    Stratified(StratifiedDgp),
    TwoRate(TwoRateDgp),
}

/// One synthetic sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Iv {
        y: Vec<f64>,
        x: Vec<f64>,
        z: Vec<f64>,
    },
    Stratified {
        y: Vec<f64>,
        d: Vec<f64>,
        stratum: Vec<usize>,
        strata: usize,
    },
    TwoRate {
        y: Vec<f64>,
        x: Vec<f64>,
        cutoff: f64,
        bandwidth: f64,
    },
}

impl Dataset {
    pub fn kind(&self) -> DgpKind {
        match self {
            Dataset::Iv { .. } => DgpKind::Iv,
            Dataset::Stratified { .. } => DgpKind::Stratified,
            Dataset::TwoRate { .. } => DgpKind::TwoRate,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Iv { y, .. } | Dataset::Stratified { y, .. } | Dataset::TwoRate { y, .. } => {
                y.len()
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Little-endian serialization of every column, for byte-level comparison.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut put = |v: &[f64]| v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        match self {
            Dataset::Iv { y, x, z } => {
                put(y);
                put(x);
                put(z);
            }
            Dataset::Stratified { y, d, stratum, strata } => {
                put(y);
                put(d);
                out.extend(stratum.iter().flat_map(|s| (*s as u64).to_le_bytes()));
                out.extend_from_slice(&(*strata as u64).to_le_bytes());
            }
            Dataset::TwoRate { y, x, cutoff, bandwidth } => {
                put(y);
                put(x);
                put(&[*cutoff, *bandwidth]);
            }
        }
        out
    }
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidDgp(msg.into())
}

fn check_finite(fields: &[(&str, f64)]) -> Result<(), SimError> {
    for (name, v) in fields {
        if !v.is_finite() {
            return Err(invalid(format!("{name} must be finite, got {v}")));
        }
    }
    Ok(())
}

fn check_n(n: usize) -> Result<(), SimError> {
    if n < MIN_SAMPLE_SIZE {
        return Err(invalid(format!("n must be at least {MIN_SAMPLE_SIZE}, got {n}")));
    }
    Ok(())
}

fn check_noise(noise_sd: f64) -> Result<(), SimError> {
    if noise_sd < 0.0 {
        return Err(invalid(format!("noise_sd must be non-negative, got {noise_sd}")));
    }
    Ok(())
}

impl IvDgp {
    pub fn new(n: usize, beta0: f64, endo: f64, instr_strength: f64, noise_sd: f64) -> Self {
        Self {
            n,
            beta0,
            endo,
            instr_strength,
            noise_sd,
        }
    }

    /// Standard deviation of the regressor.
    pub fn sd_x(&self) -> f64 {
        self.instr_strength.hypot(1.0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_finite(&[
            ("beta0", self.beta0),
            ("endo", self.endo),
            ("instr_strength", self.instr_strength),
            ("noise_sd", self.noise_sd),
        ])?;
        check_n(self.n)?;
        check_noise(self.noise_sd)?;
        if self.instr_strength == 0.0 {
            return Err(invalid("instr_strength must be nonzero"));
        }
        if self.endo.abs() >= 1.0 {
            return Err(invalid(format!("|endo| must be below 1, got {}", self.endo)));
        }
        let limit = 1.0 / self.sd_x();
        if self.endo.abs() > limit {
            return Err(invalid(format!(
                "|endo| = {} exceeds 1 / sd(x) = {limit} for instr_strength = {}",
                self.endo.abs(),
                self.instr_strength
            )));
        }
        Ok(())
    }

    /// `plim OLS - beta0 = endo * noise_sd / sd(x)`.
    pub fn efficient_bias(&self) -> f64 {
        self.endo * self.noise_sd / self.sd_x()
    }

    /// Sets `endo` so that [`efficient_bias`](Self::efficient_bias) equals `bias`.
    pub fn with_efficient_bias(&self, bias: f64) -> Result<Self, SimError> {
        let mut out = self.clone();
        out.endo = if bias == 0.0 {
            0.0
        } else if self.noise_sd > 0.0 {
            bias * self.sd_x() / self.noise_sd
        } else {
            return Err(invalid("cannot induce bias without noise"));
        };
        out.validate()?;
        Ok(out)
    }

    /// Limit variances of `sqrt(n)(2SLS - beta0)` and `sqrt(n)(OLS - beta0)`
    /// under exogeneity.
    pub fn asymptotic_variances(&self) -> (f64, f64) {
        let s2 = self.noise_sd * self.noise_sd;
        let pi2 = self.instr_strength * self.instr_strength;
        (s2 / pi2, s2 / (pi2 + 1.0))
    }

    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Dataset {
        let a = self.endo * self.sd_x();
        let b = (1.0 - a * a).max(0.0).sqrt();
        let mut y = Vec::with_capacity(self.n);
        let mut x = Vec::with_capacity(self.n);
        let mut z = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let zi: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            let xi = self.instr_strength * zi + v;
            let u = self.noise_sd * (a * v + b * e);
            y.push(self.beta0 * xi + u);
            x.push(xi);
            z.push(zi);
        }
        Dataset::Iv { y, x, z }
    }
}

impl StratifiedDgp {
    pub fn strata_count(&self) -> usize {
        self.effects.len()
    }

    fn baseline(&self, k: usize) -> f64 {
        self.baselines.get(k).copied().unwrap_or(0.0)
    }

    /// Fraction of the sample in each stratum under the `i mod K` assignment.
    pub fn shares(&self) -> Vec<f64> {
        let k = self.strata_count();
        (0..k)
            .map(|s| ((self.n - s).div_ceil(k)) as f64 / self.n as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_n(self.n)?;
        check_finite(&[("noise_sd", self.noise_sd)])?;
        check_noise(self.noise_sd)?;
        let k = self.strata_count();
        if k == 0 {
            return Err(invalid("at least one stratum is required"));
        }
        if self.probs.len() != k {
            return Err(invalid(format!(
                "{} effects but {} probabilities",
                k,
                self.probs.len()
            )));
        }
        if !self.baselines.is_empty() && self.baselines.len() != k {
            return Err(invalid(format!(
                "{} effects but {} baselines",
                k,
                self.baselines.len()
            )));
        }
        if self.n < 4 * k {
            return Err(invalid(format!("n = {} is too small for {k} strata", self.n)));
        }
        for (i, &p) in self.probs.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(invalid(format!("probs[{i}] must lie in (0, 1), got {p}")));
            }
        }
        for (i, &t) in self.effects.iter().chain(&self.baselines).enumerate() {
            if !t.is_finite() {
                return Err(invalid(format!("effect/baseline #{i} is not finite")));
            }
        }
        Ok(())
    }

    /// Share-weighted average effect, the target of both estimators.
    pub fn true_beta(&self) -> f64 {
        self.shares().iter().zip(&self.effects).map(|(s, t)| s * t).sum()
    }

    /// Weights of the fixed-effects estimand, proportional to `share * p(1-p)`.
    fn fe_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = self
            .shares()
            .iter()
            .zip(&self.probs)
            .map(|(s, p)| s * p * (1.0 - p))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    }

    /// `plim FE - ATE`.
    pub fn efficient_bias(&self) -> f64 {
        let fe: f64 = self.fe_weights().iter().zip(&self.effects).map(|(w, t)| w * t).sum();
        fe - self.true_beta()
    }

    /// Replaces the effects by `ate + t * (w_k / s_k - 1)`, which keeps the
    /// average effect and moves the fixed-effects estimand by `bias`.
    pub fn with_efficient_bias(&self, bias: f64) -> Result<Self, SimError> {
        self.validate()?;
        let ate = self.true_beta();
        let shares = self.shares();
        let dir: Vec<f64> = self
            .fe_weights()
            .iter()
            .zip(&shares)
            .map(|(w, s)| w / s - 1.0)
            .collect();
        let slope: f64 = self.fe_weights().iter().zip(&dir).map(|(w, d)| w * d).sum();
        let mut out = self.clone();
        if bias == 0.0 {
            out.effects = vec![ate; self.strata_count()];
            return Ok(out);
        }
        if slope <= 1e-14 {
            return Err(invalid(
                "equal assignment probabilities: every effect profile has zero bias",
            ));
        }
        let t = bias / slope;
        out.effects = dir.iter().map(|d| ate + t * d).collect();
        Ok(out)
    }

    /// Limit variances of `sqrt(n)(estimate - beta0)` under constant effects.
    pub fn asymptotic_variances(&self) -> (f64, f64) {
        let s2 = self.noise_sd * self.noise_sd;
        let shares = self.shares();
        let c: f64 = shares
            .iter()
            .zip(&self.probs)
            .map(|(s, p)| s / (p * (1.0 - p)))
            .sum();
        let e: f64 = shares.iter().zip(&self.probs).map(|(s, p)| s * p * (1.0 - p)).sum();
        (s2 * c, s2 / e)
    }

    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Dataset {
        let k = self.strata_count();
        let mut y = Vec::with_capacity(self.n);
        let mut d = Vec::with_capacity(self.n);
        let mut stratum = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let s = i % k;
            let treated = rng.random::<f64>() < self.probs[s];
            let eps: f64 = rng.sample(StandardNormal);
            let di = if treated { 1.0 } else { 0.0 };
            y.push(self.baseline(s) + self.effects[s] * di + self.noise_sd * eps);
            d.push(di);
            stratum.push(s);
        }
        Dataset::Stratified {
            y,
            d,
            stratum,
            strata: k,
        }
    }
}

impl TwoRateDgp {
    pub fn validate(&self) -> Result<(), SimError> {
        check_n(self.n)?;
        check_finite(&[
            ("beta0", self.beta0),
            ("curvature", self.cef_shape.curvature()),
            ("slope", self.slope),
            ("cutoff", self.cutoff),
            ("bandwidth_const", self.bandwidth_const),
            ("bandwidth_exponent", self.bandwidth_exponent),
            ("noise_sd", self.noise_sd),
        ])?;
        check_noise(self.noise_sd)?;
        if !(self.bandwidth_exponent > 0.0 && self.bandwidth_exponent < 0.5) {
            return Err(invalid(format!(
                "bandwidth_exponent must lie in (0, 1/2), got {}",
                self.bandwidth_exponent
            )));
        }
        if self.bandwidth_const <= 0.0 {
            return Err(invalid("bandwidth_const must be positive"));
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth_const * (self.n as f64).powf(-self.bandwidth_exponent)
    }

    /// Convergence rate of the local estimator, `sqrt(n * b_n)` up to the
    /// constant, i.e. `n^((1 - exponent) / 2)`.
    pub fn rate(&self) -> f64 {
        (self.n as f64).powf((1.0 - self.bandwidth_exponent) / 2.0)
    }

    /// `plim global - beta0 = -2 curvature / 5`: the best linear fit of `k u³`
    /// on `u ∈ [0, 1]` has intercept `-k / 5`, and the left side mirrors it.
    pub fn efficient_bias(&self) -> f64 {
        -0.4 * self.cef_shape.curvature()
    }

    pub fn with_efficient_bias(&self, bias: f64) -> Result<Self, SimError> {
        let mut out = self.clone();
        out.cef_shape = if bias == 0.0 {
            CefShape::Linear
        } else {
            CefShape::Curved {
                curvature: -2.5 * bias,
            }
        };
        out.validate()?;
        Ok(out)
    }

    fn cef(&self, u: f64) -> f64 {
        self.slope * u.abs() + self.cef_shape.curvature() * u * u * u
    }

    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Dataset {
        let mut y = Vec::with_capacity(self.n);
        let mut x = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let u = 2.0 * rng.random::<f64>() - 1.0;
            let eps: f64 = rng.sample(StandardNormal);
            let jump = if u >= 0.0 { self.beta0 } else { 0.0 };
            y.push(jump + self.cef(u) + self.noise_sd * eps);
            x.push(self.cutoff + u);
        }
        Dataset::TwoRate {
            y,
            x,
            cutoff: self.cutoff,
            bandwidth: self.bandwidth(),
        }
    }
}

impl DgpSpec {
    pub fn kind(&self) -> DgpKind {
        match self {
            DgpSpec::Iv(_) => DgpKind::Iv,
            DgpSpec::Stratified(_) => DgpKind::Stratified,
            DgpSpec::TwoRate(_) => DgpKind::TwoRate,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            DgpSpec::Iv(d) => d.n,
            DgpSpec::Stratified(d) => d.n,
            DgpSpec::TwoRate(d) => d.n,
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            DgpSpec::Iv(d) => d.n = n,
            DgpSpec::Stratified(d) => d.n = n,
            DgpSpec::TwoRate(d) => d.n = n,
        }
        out
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            DgpSpec::Iv(d) => d.validate(),
            DgpSpec::Stratified(d) => d.validate(),
            DgpSpec::TwoRate(d) => d.validate(),
        }
    }

    /// The parameter both estimators target under the null.
    pub fn true_beta(&self) -> f64 {
        match self {
            DgpSpec::Iv(d) => d.beta0,
            DgpSpec::Stratified(d) => d.true_beta(),
            DgpSpec::TwoRate(d) => d.beta0,
        }
    }

    /// Probability limit of the efficient estimator minus the true value.
    pub fn efficient_bias(&self) -> f64 {
        match self {
            DgpSpec::Iv(d) => d.efficient_bias(),
            DgpSpec::Stratified(d) => d.efficient_bias(),
            DgpSpec::TwoRate(d) => d.efficient_bias(),
        }
    }

    pub fn with_efficient_bias(&self, bias: f64) -> Result<Self, SimError> {
        Ok(match self {
            DgpSpec::Iv(d) => DgpSpec::Iv(d.with_efficient_bias(bias)?),
            DgpSpec::Stratified(d) => DgpSpec::Stratified(d.with_efficient_bias(bias)?),
            DgpSpec::TwoRate(d) => DgpSpec::TwoRate(d.with_efficient_bias(bias)?),
        })
    }

    /// Rate of the consistent estimator: `sqrt(n)`, or `n^((1 - exponent)/2)`
    /// for the discontinuity design.
    pub fn rate(&self) -> f64 {
        match self {
            DgpSpec::TwoRate(d) => d.rate(),
            _ => (self.n() as f64).sqrt(),
        }
    }

    /// Whether both estimators converge at the same rate.
    pub fn equal_rates(&self) -> bool {
        !matches!(self, DgpSpec::TwoRate(_))
    }

    /// `(σ²_C, σ²_E)` for the equal-rate designs.
    pub fn asymptotic_variances(&self) -> Option<(f64, f64)> {
        match self {
            DgpSpec::Iv(d) => Some(d.asymptotic_variances()),
            DgpSpec::Stratified(d) => Some(d.asymptotic_variances()),
            DgpSpec::TwoRate(_) => None,
        }
    }
}

/// Draws one dataset. Deterministic in `(spec, seed)`.
pub fn generate(spec: &DgpSpec, seed: u64) -> Result<Dataset, SimError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match spec {
        DgpSpec::Iv(d) => d.generate(&mut rng),
        DgpSpec::Stratified(d) => d.generate(&mut rng),
        DgpSpec::TwoRate(d) => d.generate(&mut rng),
    })
}
