//! Goodness-of-fit tests used to check the samplers against their analytic
//! distributions.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestOutcome {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// One-sample Kolmogorov-Smirnov test of `samples` against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestOutcome> {
    if samples.is_empty() {
        return Err(Error::invalid("KS test needs at least one sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        d = d.max((f - below).abs()).max((above - f).abs());
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(TestOutcome {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// `P(K > lambda)` for the limiting Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small lambda.
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let mut s = 0.0;
        let mut k = 1u32;
        loop {
            let term = y.powi(((2 * k - 1) * (2 * k - 1)) as i32);
            s += term;
            if term < 1e-17 || k > 50 {
                break;
            }
            k += 1;
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100u32 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Pearson chi-squared test of category counts against expected probabilities.
pub fn chi_squared_test(observed: &[u64], expected_probs: &[f64]) -> Result<TestOutcome> {
    if observed.len() != expected_probs.len() || observed.len() < 2 {
        return Err(Error::invalid(
            "chi-squared test needs matching count/probability vectors with at least two categories",
        ));
    }
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(expected_probs) {
        if !(p > 0.0) {
            return Err(Error::invalid("expected probabilities must be positive"));
        }
        let e = n as f64 * p;
        stat += (o as f64 - e).powi(2) / e;
    }
    let dist =
        ChiSquared::new((observed.len() - 1) as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(TestOutcome {
        statistic: stat,
        p_value: dist.sf(stat),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kolmogorov_reference_values() {
        // scipy.special.kolmogorov
        assert_relative_eq!(
            kolmogorov_survival(1.0),
            0.269_999_671_677_354_56,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            kolmogorov_survival(0.5),
            0.963_945_243_664_875_1,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            kolmogorov_survival(1.5),
            0.022_217_962_616_525_127,
            epsilon = 1e-10
        );
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_on_exact_uniform_grid() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let out = ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert_relative_eq!(out.statistic, 0.5 / n as f64, epsilon = 1e-12);
        assert!(out.passes(0.01));
        let shifted: Vec<f64> = xs.iter().map(|x| x * 0.8).collect();
        assert!(!ks_test(&shifted, |x| x.clamp(0.0, 1.0))
            .unwrap()
            .passes(0.01));
    }

    #[test]
    fn chi_squared_reference() {
        // scipy.stats.chisquare([18, 22, 60], [10, 10, 80])
        let out = chi_squared_test(&[18, 22, 60], &[0.1, 0.1, 0.8]).unwrap();
        assert_relative_eq!(out.statistic, 25.8, epsilon = 1e-12);
        assert_relative_eq!(out.p_value, 2.498_050_325_866_634_5e-6, epsilon = 1e-12);
    }
}
