//! Goodness-of-fit and scaling fits used by the audits and benchmarks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

/// Pearson's test of `counts` against the uniform distribution over its
/// cells. `None` with fewer than two cells or no observations.
pub fn chi_square_uniform(counts: &[u64]) -> Option<ChiSquare> {
    let total: u64 = counts.iter().sum();
    if counts.len() < 2 || total == 0 {
        return None;
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = counts.len() as u64 - 1;
    let p_value = ChiSquared::new(dof as f64)
        .expect("positive dof")
        .sf(statistic);
    Some(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}

/// Least-squares slope of `ln y` on `ln x`, the exponent `k` in `y ~ x^k`.
/// `None` with fewer than two distinct points or a non-positive value.
pub fn power_law_exponent(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// `y[i+1] / y[i]` for consecutive points.
pub fn ratios(ys: &[f64]) -> Vec<f64> {
    ys.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Number of ordered `k`-tuples of distinct values below `n`.
pub fn arrangements(n: u64, k: u64) -> u64 {
    (0..k).map(|i| n - i).product()
}

/// Rank of an ordered tuple of distinct values below `n` among all such
/// tuples, in `0..arrangements(n, len)`.
pub fn arrangement_rank(tuple: &[u64], n: u64) -> Option<u64> {
    let mut used = Vec::with_capacity(tuple.len());
    let mut rank = 0u64;
    for (i, &v) in tuple.iter().enumerate() {
        if v >= n || used.contains(&v) {
            return None;
        }
        let smaller_free = v - used.iter().filter(|&&u| u < v).count() as u64;
        rank = rank * (n - i as u64) + smaller_free;
        used.push(v);
    }
    Some(rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfectly_flat_counts_have_p_one() {
        let r = chi_square_uniform(&[10; 6]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 5);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concentrated_counts_fail() {
        let mut c = vec![0u64; 24];
        c[3] = 4000;
        assert!(chi_square_uniform(&c).unwrap().p_value < 1e-100);
        assert!(chi_square_uniform(&[5]).is_none());
        assert!(chi_square_uniform(&[0, 0]).is_none());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs = [8.0, 10.0, 12.0, 14.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.5 * x.powi(2)).collect();
        assert!((power_law_exponent(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(power_law_exponent(&[4.0], &[1.0]).is_none());
        assert!(power_law_exponent(&[4.0, 4.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn ranks_enumerate_all_arrangements() {
        let n = 5;
        let mut seen = std::collections::HashSet::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if let Some(r) = arrangement_rank(&[a, b, c], n) {
                        assert!(r < arrangements(n, 3));
                        assert!(seen.insert(r));
                    }
                }
            }
        }
        assert_eq!(seen.len() as u64, arrangements(n, 3));
        assert_eq!(arrangement_rank(&[1, 1], 3), None);
    }
}
