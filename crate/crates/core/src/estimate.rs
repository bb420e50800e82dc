//! Monte-Carlo estimates with standard errors and deterministic aggregation.
//!
//! All reductions go through [`pairwise_sum`], whose combination order depends
//! only on the length of the input. Replica results are always collected in
//! replica order before reduction, so estimates are bit-identical regardless
//! of how many worker threads produced them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A Monte-Carlo estimate together with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateCI {
    pub value: f64,
    pub se: f64,
    pub n: u64,
    pub seed: u64,
}

impl EstimateCI {
    /// Mean-type estimate: `se` is the sample standard deviation over `sqrt(n)`.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        assert!(n > 0, "estimate needs at least one sample");
        let mean = pairwise_sum(samples) / n as f64;
        let se = if n > 1 {
            let dev: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { value: mean, se, n: n as u64, seed }
    }

    /// Proportion estimate with binomial standard error.
    pub fn from_proportion(successes: u64, n: u64, seed: u64) -> Self {
        assert!(n > 0, "estimate needs at least one sample");
        let p = successes as f64 / n as f64;
        Self { value: p, se: (p * (1.0 - p) / n as f64).sqrt(), n, seed }
    }

    /// Weighted-indicator estimate (weights in `[0, 1]`), binomial-style SE
    /// computed from the population variance of the weights.
    pub fn from_weights(weights: &[f64], seed: u64) -> Self {
        let n = weights.len();
        assert!(n > 0, "estimate needs at least one sample");
        let mean = pairwise_sum(weights) / n as f64;
        let dev: Vec<f64> = weights.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / n as f64;
        Self { value: mean, se: (var / n as f64).sqrt(), n: n as u64, seed }
    }

    /// `|value - reference| <= k * se`.
    pub fn within_se(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.se
    }
}

/// Split `total` replicas into fixed chunks of `chunk` and map each chunk in
/// parallel. The output is in chunk order, so any reduction over it is
/// independent of the number of worker threads.
pub fn map_chunks<T, F>(total: u64, chunk: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, std::ops::Range<u64>) -> T + Sync,
{
    let chunk = chunk.max(1);
    let n = total.div_ceil(chunk);
    (0..n)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            f(c, lo..(lo + chunk).min(total))
        })
        .collect()
}

/// Summation with a fixed binary-tree combination order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportion_se_matches_binomial() {
        let e = EstimateCI::from_proportion(25, 100, 1);
        assert_eq!(e.value, 0.25);
        assert!((e.se - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn weights_reduce_to_binomial_for_indicators() {
        let w: Vec<f64> = (0..100).map(|i| if i < 25 { 1.0 } else { 0.0 }).collect();
        let a = EstimateCI::from_weights(&w, 0);
        let b = EstimateCI::from_proportion(25, 100, 0);
        assert!((a.value - b.value).abs() < 1e-15);
        assert!((a.se - b.se).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
    }

    #[test]
    fn wilson_brackets_point_estimate() {
        let (lo, hi) = wilson_interval(10, 1000, 1.96);
        assert!(lo < 0.01 && 0.01 < hi);
        assert_eq!(wilson_interval(0, 10, 1.96).0, 0.0);
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = [0.1, 0.4, 0.2, 0.9];
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&[0.0, 0.1], &[1.0, 2.0]), 1.0);
    }
}
