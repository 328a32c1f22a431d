//! Distribution of the number of molecules absorbed in a time window.
//!
//! Each released molecule lands in the window independently with the
//! channel-response probability, so the count is binomial. The Poisson
//! and Gaussian laws are the usual approximations to it; the Gaussian one
//! is evaluated with a continuity correction and treated as a law on the
//! non-negative integers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{binomial_cdf, normal_cdf, poisson_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountKind {
    Binomial,
    Poisson,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CountModel {
    Binomial { n: u64, p: f64 },
    Poisson { mean: f64 },
    Gaussian { mean: f64, variance: f64 },
}

impl CountModel {
    /// Model of `kind` matched to `Binomial(n, p)`: Poisson with mean `np`,
    /// Gaussian with mean `np` and variance `np(1-p)`.
    pub fn matched(kind: CountKind, n: u64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!(
                "success probability must lie in [0, 1], got {p}"
            )));
        }
        let mean = n as f64 * p;
        let model = match kind {
            CountKind::Binomial => CountModel::Binomial { n, p },
            CountKind::Poisson => CountModel::Poisson { mean },
            CountKind::Gaussian => CountModel::Gaussian {
                mean,
                variance: mean * (1.0 - p),
            },
        };
        Ok(model)
    }

    pub fn kind(&self) -> CountKind {
        match self {
            CountModel::Binomial { .. } => CountKind::Binomial,
            CountModel::Poisson { .. } => CountKind::Poisson,
            CountModel::Gaussian { .. } => CountKind::Gaussian,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            CountModel::Binomial { n, p } => n as f64 * p,
            CountModel::Poisson { mean } | CountModel::Gaussian { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            CountModel::Binomial { n, p } => n as f64 * p * (1.0 - p),
            CountModel::Poisson { mean } => mean,
            CountModel::Gaussian { variance, .. } => variance,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CountModel::Binomial { p, .. } => (0.0..=1.0).contains(&p),
            CountModel::Poisson { mean } => mean >= 0.0 && mean.is_finite(),
            CountModel::Gaussian { mean, variance } => mean.is_finite() && variance >= 0.0 && variance.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid count model {self:?}")))
        }
    }

    /// `P(X ≤ k)`. Every model gives 0 for `k < 0`.
    pub fn cdf(&self, k: i64) -> Result<f64> {
        self.validate()?;
        if k < 0 {
            return Ok(0.0);
        }
        let v = match *self {
            CountModel::Binomial { n, p } => binomial_cdf(k, n, p),
            CountModel::Poisson { mean } => poisson_cdf(k, mean),
            CountModel::Gaussian { mean, variance } => {
                let x = k as f64 + 0.5;
                if variance == 0.0 {
                    if x >= mean {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    normal_cdf((x - mean) / variance.sqrt())
                }
            }
        };
        Ok(v)
    }

    /// Integer past which the model CDF is 1 to working precision.
    fn upper_support(&self) -> u64 {
        match *self {
            CountModel::Binomial { n, .. } => n,
            _ => {
                let (m, s) = (self.mean(), self.variance().sqrt());
                (m + 40.0 * s + 40.0).ceil().max(0.0) as u64
            }
        }
    }
}

/// Kolmogorov–Smirnov distance `sup_k |F_emp(k) - F_model(k)|` between the
/// empirical law of `samples` and `model`, over the integers.
pub fn ks_distance(samples: &[u64], model: &CountModel) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("KS distance needs at least one sample"));
    }
    model.validate()?;
    let max_sample = *samples.iter().max().expect("nonempty");
    let top = max_sample.max(model.upper_support());
    let mut freq = vec![0u64; max_sample as usize + 1];
    for &s in samples {
        freq[s as usize] += 1;
    }
    let n = samples.len() as f64;
    let mut cum = 0u64;
    let mut sup = 0.0f64;
    for k in 0..=top {
        if let Some(&c) = freq.get(k as usize) {
            cum += c;
        }
        let emp = cum as f64 / n;
        let d = (emp - model.cdf(k as i64)?).abs();
        sup = sup.max(d);
        if cum as f64 == n && model.cdf(k as i64)? >= 1.0 {
            break;
        }
    }
    Ok(sup)
}

/// Empirical CDF of integer samples at `k`.
pub fn empirical_cdf(samples: &[u64], k: i64) -> f64 {
    if samples.is_empty() || k < 0 {
        return 0.0;
    }
    let below = samples.iter().filter(|&&s| s as i64 <= k).count();
    below as f64 / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomial_enumeration() {
        let m = CountModel::matched(CountKind::Binomial, 2, 0.5).unwrap();
        assert!((m.cdf(1).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(m.cdf(-1).unwrap(), 0.0);
        assert_eq!(m.cdf(2).unwrap(), 1.0);
    }

    #[test]
    fn poisson_at_zero() {
        let m = CountModel::Poisson { mean: 1.0 };
        assert!((m.cdf(0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn matched_moments() {
        let g = CountModel::matched(CountKind::Gaussian, 2000, 0.2).unwrap();
        assert!((g.mean() - 400.0).abs() < 1e-12);
        assert!((g.variance() - 320.0).abs() < 1e-9);
        assert!(CountModel::matched(CountKind::Poisson, 10, 1.5).is_err());
        assert!(CountModel::Poisson { mean: -1.0 }.cdf(0).is_err());
    }

    #[test]
    fn gaussian_continuity_correction() {
        let g = CountModel::Gaussian {
            mean: 10.0,
            variance: 4.0,
        };
        let want = normal_cdf((10.5 - 10.0) / 2.0);
        assert!((g.cdf(10).unwrap() - want).abs() < 1e-15);
        let point = CountModel::Gaussian {
            mean: 3.0,
            variance: 0.0,
        };
        assert_eq!(point.cdf(2).unwrap(), 0.0);
        assert_eq!(point.cdf(3).unwrap(), 1.0);
    }

    #[test]
    fn binomial_near_poisson_in_rare_regime() {
        let b = CountModel::matched(CountKind::Binomial, 2000, 0.01).unwrap();
        let p = CountModel::Poisson { mean: 20.0 };
        assert!((b.cdf(20).unwrap() - p.cdf(20).unwrap()).abs() < 0.012);
    }

    #[test]
    fn ks_degenerate_sample() {
        let samples = vec![0u64; 50];
        let d = ks_distance(&samples, &CountModel::Poisson { mean: 10.0 }).unwrap();
        assert!((d - (1.0 - (-10.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn ks_rejects_empty() {
        assert!(ks_distance(&[], &CountModel::Poisson { mean: 1.0 }).is_err());
    }

    #[test]
    fn empirical_cdf_counts() {
        let s = [0, 1, 1, 3];
        assert_eq!(empirical_cdf(&s, -1), 0.0);
        assert_eq!(empirical_cdf(&s, 1), 0.75);
        assert_eq!(empirical_cdf(&s, 3), 1.0);
    }
}
