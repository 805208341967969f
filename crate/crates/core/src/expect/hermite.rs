//! Gauss–Hermite nodes and weights for the weight function `exp(-x²)`.
//!
//! Positive roots are bracketed by a sign scan of the orthonormal Hermite
//! recurrence (which avoids the overflow of the physicists' polynomials) and
//! polished by bisection-safeguarded Newton steps.

use super::ExpectError;

pub const MAX_HERMITE_NODES: usize = 200;

const PI_M4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
const MAX_NEWTON: usize = 100;

/// `n`-point Gauss–Hermite rule, nodes in ascending order.
///
/// Exact for polynomials of degree `<= 2n - 1` against `exp(-x²)`; the
/// weights sum to `sqrt(pi)`. Nodes are exactly symmetric about zero.
pub fn gauss_hermite_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>), ExpectError> {
    if !(1..=MAX_HERMITE_NODES).contains(&n) {
        return Err(ExpectError::HermiteOrder(n));
    }
    let half = n.div_ceil(2);
    let pairs = n / 2;
    let nf = n as f64;

    // Positive roots, descending. Adjacent roots are at least ~pi / sqrt(2n + 1) apart.
    let step = 0.1 * std::f64::consts::PI / (2.0 * nf + 1.0).sqrt();
    let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
    let mut brackets = Vec::with_capacity(pairs);
    let mut a = if n % 2 == 1 { 0.5 * step } else { 0.0 };
    let mut pa = orthonormal_hermite(n, a).0;
    while a < upper && brackets.len() < pairs {
        let b = a + step;
        let pb = orthonormal_hermite(n, b).0;
        if pa == 0.0 || pa.signum() != pb.signum() {
            brackets.push((a, b));
        }
        a = b;
        pa = pb;
    }
    if brackets.len() != pairs {
        return Err(ExpectError::HermiteOrder(n));
    }

    let mut roots = vec![0.0; half];
    let mut weights = vec![0.0; half];
    for (k, &(lo, hi)) in brackets.iter().rev().enumerate() {
        let z = polish_root(n, lo, hi);
        let (_, d) = orthonormal_hermite(n, z);
        roots[k] = z;
        weights[k] = 2.0 / (d * d);
    }
    if n % 2 == 1 {
        let (_, d) = orthonormal_hermite(n, 0.0);
        weights[half - 1] = 2.0 / (d * d);
    }

    // roots[] holds the non-negative half in descending order.
    let negative = (0..pairs).map(|i| (-roots[i], weights[i]));
    let middle = (n % 2 == 1).then(|| (0.0, weights[half - 1]));
    let positive = (0..pairs).rev().map(|i| (roots[i], weights[i]));
    let (nodes, w): (Vec<f64>, Vec<f64>) = negative.chain(middle).chain(positive).unzip();
    Ok((nodes, w))
}

fn polish_root(n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let sign_lo = orthonormal_hermite(n, lo).0.signum();
    let mut z = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let (p, d) = orthonormal_hermite(n, z);
        if p == 0.0 {
            return z;
        }
        if p.signum() == sign_lo {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - p / d;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 1e-15 * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

/// Orthonormal Hermite value `p_n(x)` and the derivative scaling `sqrt(2n) p_{n-1}(x)`.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64) {
    let mut p1 = PI_M4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = x * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, SymmetricEigen};
    use std::f64::consts::PI;

    /// Golub–Welsch: eigenvalues of the Jacobi matrix are the nodes, and
    /// sqrt(pi) times the squared first eigenvector components the weights.
    fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut j = DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            let b = ((i + 1) as f64 / 2.0).sqrt();
            j[(i, i + 1)] = b;
            j[(i + 1, i)] = b;
        }
        let eig = SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| (eig.eigenvalues[k], PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    }

    #[test]
    fn one_point_rule() {
        let (x, w) = gauss_hermite_rule(1).unwrap();
        assert_eq!(x, vec![0.0]);
        assert_abs_diff_eq!(w[0], PI.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn two_point_rule() {
        let (x, w) = gauss_hermite_rule(2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(x[0], -r, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], r, epsilon = 1e-15);
        for wi in w {
            assert_abs_diff_eq!(wi, PI.sqrt() / 2.0, epsilon = 1e-15);
        }
        let (gx, gw) = golub_welsch(2);
        assert_abs_diff_eq!(gx[1], r, epsilon = 1e-14);
        assert_abs_diff_eq!(gw[0], PI.sqrt() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn matches_golub_welsch() {
        for n in [3, 4, 7, 10, 20, 33, 64] {
            let (x, w) = gauss_hermite_rule(n).unwrap();
            let (gx, gw) = golub_welsch(n);
            assert_eq!(x.len(), n);
            for k in 0..n {
                assert_abs_diff_eq!(x[k], gx[k], epsilon = 1e-10);
                assert_abs_diff_eq!(w[k], gw[k], epsilon = 1e-12 * (1.0 + gw[k].abs()));
            }
        }
    }

    #[test]
    fn weights_sum_and_symmetry() {
        for n in 2..=MAX_HERMITE_NODES {
            let (x, w) = gauss_hermite_rule(n).unwrap();
            assert_eq!(x.len(), n);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), PI.sqrt(), epsilon = 1e-12);
            for k in 0..n {
                assert_eq!(x[k], -x[n - 1 - k]);
                assert_eq!(w[k], w[n - 1 - k]);
                assert!(w[k] >= 0.0);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]), "n = {n} not strictly ascending");
        }
    }

    #[test]
    fn exact_for_low_degree_polynomials() {
        // int x^(2k) exp(-x²) dx = Gamma(k + 1/2)
        for n in 1..=10 {
            let (x, w) = gauss_hermite_rule(n).unwrap();
            for deg in 0..(2 * n) {
                let terms: Vec<f64> = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).collect();
                let q: f64 = terms.iter().sum();
                let scale: f64 = terms.iter().map(|t| t.abs()).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { libm::tgamma(deg as f64 / 2.0 + 0.5) };
                assert_abs_diff_eq!(q, exact, epsilon = 1e-12 * (1.0 + scale));
            }
        }
    }

    #[test]
    fn order_out_of_range() {
        assert!(gauss_hermite_rule(0).is_err());
        assert!(gauss_hermite_rule(MAX_HERMITE_NODES + 1).is_err());
    }
}
