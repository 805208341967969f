//! Consistent/efficient estimator pairs with heteroskedasticity-robust
//! (HC0) variances.

use crate::combine::EstimatorInput;

use super::dgp::{Dataset, DgpKind};
use super::SimError;

/// Residuals this small relative to the outcome scale are treated as an
/// exact fit, so noiseless data yields exactly zero variance.
const EXACT_FIT: f64 = 1e-10;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = mean(v);
    v.iter().map(|x| x - m).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn snap_exact(resid: &mut [f64], scale: f64) {
    if max_abs(resid) <= EXACT_FIT * scale {
        resid.iter_mut().for_each(|r| *r = 0.0);
    }
}

/// Slope of `y` on `x` with instrument `w` (all centered) and its HC0 variance.
fn iv_slope(y: &[f64], x: &[f64], w: &[f64], what: &'static str) -> Result<(f64, f64), SimError> {
    let wx: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
    if wx == 0.0 || !wx.is_finite() {
        return Err(SimError::RankDeficient(what));
    }
    let wy: f64 = w.iter().zip(y).map(|(a, b)| a * b).sum();
    let beta = wy / wx;
    let mut resid: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi - beta * xi).collect();
    snap_exact(&mut resid, max_abs(y));
    let meat: f64 = w.iter().zip(&resid).map(|(wi, r)| (wi * r).powi(2)).sum();
    Ok((beta, meat / (wx * wx)))
}

fn iv_pair(y: &[f64], x: &[f64], z: &[f64]) -> Result<EstimatorInput, SimError> {
    let (y, x, z) = (centered(y), centered(x), centered(z));
    let (beta_c, var_c) = iv_slope(&y, &x, &z, "first stage has no variation")?;
    let (beta_e, var_e) = iv_slope(&y, &x, &x, "regressor has no variation")?;
    Ok(EstimatorInput::new(beta_c, beta_e, var_c, var_e, None)?)
}

#[derive(Default, Clone)]
struct Cell {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Cell {
    fn push(&mut self, y: f64) {
        self.n += 1.0;
        self.sum += y;
        self.sum_sq += y * y;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    /// Unbiased sample variance of the mean, `s² / n`.
    fn var_of_mean(&self) -> f64 {
        let m = self.mean();
        let ss = (self.sum_sq - self.n * m * m).max(0.0);
        ss / (self.n - 1.0) / self.n
    }
}

fn stratified_pair(
    y: &[f64],
    d: &[f64],
    stratum: &[usize],
    strata: usize,
) -> Result<EstimatorInput, SimError> {
    let n = y.len() as f64;
    let mut treated = vec![Cell::default(); strata];
    let mut control = vec![Cell::default(); strata];
    for ((&yi, &di), &s) in y.iter().zip(d).zip(stratum) {
        if di > 0.5 {
            treated[s].push(yi);
        } else {
            control[s].push(yi);
        }
    }
    let mut beta_c = 0.0;
    let mut var_c = 0.0;
    let mut p_hat = vec![0.0; strata];
    let mut y_bar = vec![0.0; strata];
    for s in 0..strata {
        let (t, c) = (&treated[s], &control[s]);
        if t.n < 2.0 || c.n < 2.0 {
            return Err(SimError::EmptyCell(format!(
                "stratum {s} has {} treated and {} control units; need at least 2 of each",
                t.n, c.n
            )));
        }
        let share = (t.n + c.n) / n;
        beta_c += share * (t.mean() - c.mean());
        var_c += share * share * (t.var_of_mean() + c.var_of_mean());
        p_hat[s] = t.n / (t.n + c.n);
        y_bar[s] = (t.sum + c.sum) / (t.n + c.n);
    }
    if var_c < 1e-300 {
        var_c = 0.0;
    }

    // Fixed effects by partialling out stratum means.
    let dt: Vec<f64> = d.iter().zip(stratum).map(|(di, &s)| di - p_hat[s]).collect();
    let yt: Vec<f64> = y.iter().zip(stratum).map(|(yi, &s)| yi - y_bar[s]).collect();
    let (beta_e, var_e) = iv_slope(&yt, &dt, &dt, "treatment has no within-stratum variation")?;
    Ok(EstimatorInput::new(beta_c, beta_e, var_c, var_e, None)?)
}

/// Intercept at `u = 0` of an OLS line through `(u, y)` and its HC0 variance.
fn boundary_intercept(u: &[f64], y: &[f64], side: &str) -> Result<(f64, f64), SimError> {
    let m = u.len() as f64;
    if u.len() < 3 {
        return Err(SimError::EmptyCell(format!(
            "{side} of the cutoff has {} observations; need at least 3",
            u.len()
        )));
    }
    let ub = mean(u);
    let uc: Vec<f64> = u.iter().map(|x| x - ub).collect();
    let yc = centered(y);
    let (slope, _) = iv_slope(&yc, &uc, &uc, "running variable has no variation")?;
    let intercept = mean(y) - slope * ub;
    let mut resid: Vec<f64> = u
        .iter()
        .zip(y)
        .map(|(ui, yi)| yi - intercept - slope * ui)
        .collect();
    snap_exact(&mut resid, max_abs(&yc).max(max_abs(y)));
    // a = ȳ - b ū; its influence is e_i (1/m - ū (u_i - ū) / Suu).
    let suu: f64 = uc.iter().map(|x| x * x).sum();
    let var = resid
        .iter()
        .zip(&uc)
        .map(|(r, c)| (r * (1.0 / m - ub * c / suu)).powi(2))
        .sum();
    Ok((intercept, var))
}

fn two_rate_pair(y: &[f64], x: &[f64], cutoff: f64, bandwidth: f64) -> Result<EstimatorInput, SimError> {
    let mut near_r = Cell::default();
    let mut near_l = Cell::default();
    let (mut ur, mut yr, mut ul, mut yl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (&xi, &yi) in x.iter().zip(y) {
        let u = xi - cutoff;
        if u >= 0.0 {
            ur.push(u);
            yr.push(yi);
            if u < bandwidth {
                near_r.push(yi);
            }
        } else {
            ul.push(u);
            yl.push(yi);
            if -u < bandwidth {
                near_l.push(yi);
            }
        }
    }
    if near_r.n < 2.0 || near_l.n < 2.0 {
        return Err(SimError::EmptyCell(format!(
            "bandwidth window holds {} observations right and {} left of the cutoff; need at least 2 each",
            near_r.n, near_l.n
        )));
    }
    let beta_c = near_r.mean() - near_l.mean();
    let var_c = near_r.var_of_mean() + near_l.var_of_mean();
    let (ar, vr) = boundary_intercept(&ur, &yr, "right side")?;
    let (al, vl) = boundary_intercept(&ul, &yl, "left side")?;
    Ok(EstimatorInput::new(beta_c, ar - al, var_c, vr + vl, None)?)
}

/// Computes `(beta_c, beta_e)` with robust variances. The covariance is set
/// to `var_e`.
pub fn estimate_pair(dataset: &Dataset, kind: DgpKind) -> Result<EstimatorInput, SimError> {
    if dataset.kind() != kind {
        return Err(SimError::KindMismatch {
            expected: kind,
            found: dataset.kind(),
        });
    }
    match dataset {
        Dataset::Iv { y, x, z } => iv_pair(y, x, z),
        Dataset::Stratified {
            y,
            d,
            stratum,
            strata,
        } => stratified_pair(y, d, stratum, *strata),
        Dataset::TwoRate {
            y,
            x,
            cutoff,
            bandwidth,
        } => two_rate_pair(y, x, *cutoff, *bandwidth),
    }
}
