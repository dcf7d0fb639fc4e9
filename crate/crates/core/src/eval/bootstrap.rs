//! Bootstrap confidence intervals for a sample mean.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{rng_for, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapMethod {
    Percentile,
    #[default]
    Bca,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapOptions {
    pub confidence: f64,
    pub n_resamples: usize,
    pub method: BootstrapMethod,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions { confidence: 0.95, n_resamples: 9999, method: BootstrapMethod::Bca, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    /// `mean -/+ z sd / sqrt(n)` for comparison.
    pub gaussian: (f64, f64),
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

pub fn bootstrap_ci(samples: &[f64], opts: &BootstrapOptions) -> Result<ConfidenceInterval> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid("bootstrap needs at least two samples"));
    }
    if !(opts.confidence > 0.0 && opts.confidence < 1.0) || opts.n_resamples == 0 {
        return Err(Error::invalid("confidence must be in (0, 1) and n_resamples positive"));
    }
    let theta = mean(samples);
    let normal = Normal::standard();
    let alpha = 1.0 - opts.confidence;
    let z = normal.inverse_cdf(1.0 - alpha / 2.0);
    let sd = (samples.iter().map(|x| (x - theta).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let half = z * sd / (n as f64).sqrt();
    let gaussian = (theta - half, theta + half);
    if samples.iter().all(|&x| x == samples[0]) {
        return Ok(ConfidenceInterval { estimate: theta, lo: theta, hi: theta, gaussian });
    }

    let mut rng = rng_for(opts.seed, stream::BOOTSTRAP);
    let mut boot: Vec<f64> = (0..opts.n_resamples)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    boot.sort_by(f64::total_cmp);

    let (qlo, qhi) = match opts.method {
        BootstrapMethod::Percentile => (alpha / 2.0, 1.0 - alpha / 2.0),
        BootstrapMethod::Bca => {
            let below = boot.partition_point(|&v| v < theta);
            let equal = boot.partition_point(|&v| v <= theta) - below;
            let frac = (below as f64 + 0.5 * equal as f64) / boot.len() as f64;
            let frac = frac.clamp(0.5 / boot.len() as f64, 1.0 - 0.5 / boot.len() as f64);
            let z0 = normal.inverse_cdf(frac);
            let total: f64 = samples.iter().sum();
            let jack: Vec<f64> = samples.iter().map(|x| (total - x) / (n - 1) as f64).collect();
            let jm = mean(&jack);
            let num: f64 = jack.iter().map(|j| (jm - j).powi(3)).sum();
            let den: f64 = jack.iter().map(|j| (jm - j).powi(2)).sum();
            let a = if den > 0.0 { num / (6.0 * den.powf(1.5)) } else { 0.0 };
            let adjust = |zq: f64| normal.cdf(z0 + (z0 + zq) / (1.0 - a * (z0 + zq)));
            (adjust(-z), adjust(z))
        }
    };
    Ok(ConfidenceInterval { estimate: theta, lo: quantile(&boot, qlo), hi: quantile(&boot, qhi), gaussian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_samples_give_zero_width() {
        let ci = bootstrap_ci(&[2.5; 8], &BootstrapOptions::default()).unwrap();
        assert_eq!((ci.lo, ci.hi), (2.5, 2.5));
    }

    #[test]
    fn symmetric_samples_give_percentile_like_bca() {
        let x = [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0];
        let bca = bootstrap_ci(&x, &BootstrapOptions::default()).unwrap();
        let pct = bootstrap_ci(&x, &BootstrapOptions { method: BootstrapMethod::Percentile, ..Default::default() })
            .unwrap();
        assert!((bca.lo - pct.lo).abs() < 0.1 && (bca.hi - pct.hi).abs() < 0.1, "{bca:?} {pct:?}");
        assert!(bca.lo < 0.0 && bca.hi > 0.0);
    }

    #[test]
    fn needs_two_samples() {
        assert!(bootstrap_ci(&[1.0], &BootstrapOptions::default()).is_err());
    }

    #[test]
    fn coverage_is_reasonable_with_few_resamples() {
        let mut rng = rng_for(9, stream::OUTPUTS);
        let trials = 200;
        let mut hits = 0;
        for t in 0..trials {
            let x: Vec<f64> = (0..10).map(|_| StandardNormal.sample(&mut rng)).collect();
            let opts = BootstrapOptions { n_resamples: 999, seed: t, ..Default::default() };
            let ci = bootstrap_ci(&x, &opts).unwrap();
            if ci.lo <= 0.0 && 0.0 <= ci.hi {
                hits += 1;
            }
        }
        let cov = hits as f64 / trials as f64;
        assert!(cov > 0.84 && cov < 0.99, "coverage {cov}");
    }
}
