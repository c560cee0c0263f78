//! Exact, fully enumerated distributions over packed states.

use alloc::vec::Vec;

use rand::Rng;

use crate::math::{exp, LogSumExp};
use crate::{Error, Result};

/// An enumerated Gibbs distribution. States are packed into a `u64` code by
/// the model that built the table (little-endian bits for SAT, base-`q`
/// digits for colorings) and stored in ascending code order.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    codes: Vec<u64>,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    log_partition: f64,
}

impl ExactDistribution {
    /// Normalizes `(code, log-weight)` pairs. Codes must be distinct.
    pub fn from_log_weights(mut states: Vec<(u64, f64)>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptySupport);
        }
        states.sort_unstable_by_key(|s| s.0);
        let mut acc = LogSumExp::new();
        for &(_, lw) in &states {
            acc.add(lw);
        }
        let log_partition = acc.value();
        let mut codes = Vec::with_capacity(states.len());
        let mut log_weights = Vec::with_capacity(states.len());
        let mut probs = Vec::with_capacity(states.len());
        let mut cumulative = Vec::with_capacity(states.len());
        let mut running = 0.0;
        for (code, lw) in states {
            let p = exp(lw - log_partition);
            running += p;
            codes.push(code);
            log_weights.push(lw);
            probs.push(p);
            cumulative.push(running);
        }
        Ok(Self { codes, log_weights, probs, cumulative, log_partition })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[u64] {
        &self.codes
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `log Z`.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.codes.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn prob_of(&self, code: u64) -> f64 {
        match self.codes.binary_search(&code) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn expectation<F: Fn(u64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(c, p)| p * f(c)).sum()
    }

    /// Variance of a statistic, computed around its value at the first
    /// state so that constant statistics give exactly zero.
    pub fn variance<F: Fn(u64) -> f64>(&self, f: F) -> f64 {
        let reference = f(self.codes[0]);
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (c, p) in self.iter() {
            let d = f(c) - reference;
            m1 += p * d;
            m2 += p * d * d;
        }
        (m2 - m1 * m1).max(0.0)
    }

    /// Draws a state code by inverting the cumulative distribution.
    pub fn sample_code<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = *self.cumulative.last().expect("non-empty support");
        let u: f64 = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.codes[idx.min(self.codes.len() - 1)]
    }

    /// Total variation distance to another distribution over the same codes.
    pub fn total_variation(&self, other: &ExactDistribution) -> f64 {
        let mut tv = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < self.codes.len() || j < other.codes.len() {
            let a = self.codes.get(i).copied().unwrap_or(u64::MAX);
            let b = other.codes.get(j).copied().unwrap_or(u64::MAX);
            if i < self.codes.len() && (j >= other.codes.len() || a < b) {
                tv += self.probs[i];
                i += 1;
            } else if j < other.codes.len() && (i >= self.codes.len() || b < a) {
                tv += other.probs[j];
                j += 1;
            } else {
                tv += (self.probs[i] - other.probs[j]).abs();
                i += 1;
                j += 1;
            }
        }
        0.5 * tv
    }

    /// Total variation distance to an empirical histogram of codes.
    pub fn tv_to_empirical(&self, samples: &[u64]) -> f64 {
        let mut sorted: Vec<u64> = samples.to_vec();
        sorted.sort_unstable();
        let n = sorted.len() as f64;
        let mut tv = 0.0;
        let mut seen_mass = 0.0;
        let mut k = 0;
        while k < sorted.len() {
            let code = sorted[k];
            let mut count = 0usize;
            while k < sorted.len() && sorted[k] == code {
                count += 1;
                k += 1;
            }
            let p = self.prob_of(code);
            seen_mass += p;
            tv += (count as f64 / n - p).abs();
        }
        // states that were never drawn
        tv += (1.0 - seen_mass).max(0.0);
        0.5 * tv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn normalizes_and_sorts() {
        let d = ExactDistribution::from_log_weights(vec![(3, 0.0), (1, 2f64.ln())]).unwrap();
        assert_eq!(d.codes(), &[1, 3]);
        assert!((d.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.log_partition() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(d.prob_of(2), 0.0);
    }

    #[test]
    fn empty_support_is_an_error() {
        assert_eq!(ExactDistribution::from_log_weights(vec![]).unwrap_err(), Error::EmptySupport);
    }

    #[test]
    fn constant_statistic_has_exactly_zero_variance() {
        let d = ExactDistribution::from_log_weights(vec![(0, 0.1), (1, 0.7), (2, -0.3)]).unwrap();
        assert_eq!(d.variance(|_| 17.3), 0.0);
    }

    #[test]
    fn tv_between_disjoint_supports_is_one() {
        let a = ExactDistribution::from_log_weights(vec![(0, 0.0)]).unwrap();
        let b = ExactDistribution::from_log_weights(vec![(1, 0.0)]).unwrap();
        assert!((a.total_variation(&b) - 1.0).abs() < 1e-15);
        assert!((a.tv_to_empirical(&[1, 1]) - 1.0).abs() < 1e-15);
    }
}
