//! Small statistics helpers shared by the experiment harnesses.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson chi-square statistic of `counts` against the uniform distribution.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| {
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum()
}

/// Upper critical value of the chi-square distribution at significance `alpha`.
pub fn chi_square_critical(dof: usize, alpha: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - alpha)
}

/// Half-width of the two-sided Hoeffding interval for a mean of `trials`
/// bounded samples at confidence `1 - beta`.
pub fn hoeffding_half_width(trials: u64, beta: f64) -> f64 {
    ((2.0 / beta).ln() / (2.0 * trials as f64)).sqrt()
}

/// Standard deviation of a binomial proportion with success probability `p`.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Point estimate of an acceptance probability with a Hoeffding interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub accepts: u64,
    pub trials: u64,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Estimate {
    pub fn new(accepts: u64, trials: u64, beta: f64) -> Self {
        assert!(trials > 0, "an estimate needs at least one trial");
        let rate = accepts as f64 / trials as f64;
        let half = hoeffding_half_width(trials, beta);
        Estimate {
            accepts,
            trials,
            rate,
            lower: (rate - half).max(0.0),
            upper: (rate + half).min(1.0),
        }
    }
}
