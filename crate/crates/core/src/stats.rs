//! Small statistics toolkit for the estimators: moments, exact binomial
//! intervals, goodness of fit, two-sample KS and percentile bootstrap.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; `None` below two observations.
pub fn variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some(ss / (xs.len() - 1) as f64)
}

/// A point estimate with a two-sided interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Exact (Clopper-Pearson) interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> Interval {
    assert!(successes <= trials && trials > 0);
    let (x, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    Interval { estimate: x / n, lo, hi }
}

/// Pearson chi-square goodness-of-fit p-value with `cells - 1` degrees of
/// freedom. Cells with zero expectation must also be empty.
pub fn chi_square_pvalue(counts: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(counts.len(), expected.len());
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &e) in counts.iter().zip(expected) {
        if e == 0.0 {
            if o > 0 {
                return 0.0;
            }
            continue;
        }
        let d = o as f64 - e;
        stat += d * d / e;
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    ChiSquared::new((cells - 1) as f64).unwrap().sf(stat)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
/// With ties (integer data) the p-value is conservative.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Percentile bootstrap interval of `stat` with `resamples` draws.
pub fn bootstrap_ci<R, F>(data: &[f64], stat: F, resamples: usize, alpha: f64, rng: &mut R) -> Interval
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    let estimate = stat(data);
    if data.len() < 2 || resamples == 0 {
        return Interval { estimate, lo: f64::NAN, hi: f64::NAN };
    }
    let mut buf = vec![0.0; data.len()];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = data[rng.random_range(0..data.len())];
            }
            stat(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let pick = |q: f64| stats[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    Interval {
        estimate,
        lo: pick(alpha / 2.0),
        hi: pick(1.0 - alpha / 2.0),
    }
}

/// Total-variation distance between two laws on the same finite support.
/// The shorter slice is padded with zeros.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

/// Empirical law of non-negative integer samples.
pub fn empirical_law(samples: impl IntoIterator<Item = usize>) -> Vec<f64> {
    let mut counts: Vec<u64> = Vec::new();
    let mut total = 0u64;
    for s in samples {
        if s >= counts.len() {
            counts.resize(s + 1, 0);
        }
        counts[s] += 1;
        total += 1;
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::RngStream;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs).unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(variance(&[3.0]), None);
    }

    #[test]
    fn clopper_pearson_known_values() {
        // Rule of three: 0 of n has upper limit about 3/n at 95%.
        let ci = clopper_pearson(0, 1000, 0.05);
        assert_eq!(ci.lo, 0.0);
        assert!((ci.hi - 0.003682).abs() < 1e-5);
        let ci = clopper_pearson(50, 100, 0.05);
        assert!((ci.lo - 0.3983).abs() < 1e-3 && (ci.hi - 0.6017).abs() < 1e-3);
        assert_eq!(clopper_pearson(7, 7, 0.05).hi, 1.0);
    }

    #[test]
    fn chi_square_extremes() {
        assert!(chi_square_pvalue(&[25, 25, 25, 25], &[25.0; 4]) > 0.99);
        assert!(chi_square_pvalue(&[100, 0, 0, 0], &[25.0; 4]) < 1e-10);
        // statistic 4 on one degree of freedom
        let p = chi_square_pvalue(&[60, 40], &[50.0, 50.0]);
        assert!((p - 0.0455003).abs() < 1e-6);
    }

    #[test]
    fn ks_null_and_shift() {
        let mut rng = RngStream::new(5, 0).rng();
        let n = Normal::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..2000).map(|_| n.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..2000).map(|_| n.sample(&mut rng)).collect();
        let c: Vec<f64> = b.iter().map(|x| x + 0.3).collect();
        assert!(ks_two_sample(&a, &b).1 > 1e-3);
        assert!(ks_two_sample(&a, &c).1 < 1e-6);
        assert_eq!(ks_two_sample(&a, &a).0, 0.0);
    }

    #[test]
    fn bootstrap_brackets_the_mean() {
        let mut rng = RngStream::new(6, 0).rng();
        let data: Vec<f64> = (0..500).map(|i| (i % 10) as f64).collect();
        let ci = bootstrap_ci(&data, mean, 1000, 0.05, &mut rng);
        assert!(ci.lo < 4.5 && 4.5 < ci.hi);
        assert!(ci.hi - ci.lo < 1.0);
    }

    #[test]
    fn tv_and_law() {
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(tv_distance(&[1.0], &[0.0, 1.0]), 1.0);
        assert_eq!(empirical_law([0, 2, 2, 2]), vec![0.25, 0.0, 0.75]);
    }
}
