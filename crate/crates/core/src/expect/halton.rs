//! Radical-inverse (van der Corput / Halton) points.

/// Radical inverse of `index` in `base`: the base-`base` digits of `index`
/// mirrored about the radix point. `halton(1, 2) = 0.5`, `halton(3, 2) = 0.75`.
///
/// Returns a value in `(0, 1)` for `index >= 1`; `index = 0` maps to 0.
pub fn halton(index: u64, base: u32) -> f64 {
    debug_assert!(base >= 2);
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut i = index;
    let mut scale = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    out
}

pub(crate) fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_two() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert_eq!(halton(4, 2), 0.125);
    }

    #[test]
    fn base_three() {
        // 5 = 12 in base 3, mirrored: 0.21 = 2/3 + 1/9
        assert!((halton(5, 3) - 7.0 / 9.0).abs() < 1e-15);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn first_block_is_a_permutation_of_the_grid() {
        let mut pts: Vec<u64> = (1..1024).map(|i| (halton(i, 2) * 1024.0) as u64).collect();
        pts.sort_unstable();
        assert_eq!(pts, (1..1024).collect::<Vec<_>>());
    }

    #[test]
    fn stays_inside_unit_interval() {
        for i in (1..2_000_000u64).step_by(9973) {
            let h = halton(i, 7);
            assert!(h > 0.0 && h < 1.0);
        }
    }

    #[test]
    fn primes() {
        assert!(is_prime(2) && is_prime(3) && is_prime(97));
        assert!(!is_prime(1) && !is_prime(4) && !is_prime(91));
    }
}
