//! Variance growth of `L_n`, its tail envelope and the mean ratio `L_n / n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drop_scheme::{simulate_ln_coupled, InsertionMode};
use crate::error::Result;
use crate::lcs::lcs_bitparallel;
use crate::sequences::{check_probability, generate_case1, labels, strip_a, BinarySequence, RngStream};
use crate::stats::{bootstrap_ci, mean, variance, Interval};

/// How a sample of `L_n` is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Draw `X`, `Y` and compute `LCS(X^01, Y)` bit-parallel.
    #[default]
    Direct,
    /// Read `L^a(n - N^a)` off the drop-scheme curve.
    Coupled(InsertionMode),
}

/// One draw of `(L_n, N^a)` from stream `stream`.
pub fn sample_ln(n: usize, p: f64, stream: RngStream, route: Route) -> Result<(usize, usize)> {
    match route {
        Route::Direct => {
            let (x, y) = generate_case1(n, p, stream)?;
            let (x01, na) = strip_a(&x);
            Ok((lcs_bitparallel(&x01, &y), na))
        }
        Route::Coupled(mode) => {
            let s = simulate_ln_coupled(n, p, stream, mode)?;
            Ok((s.ln, s.na))
        }
    }
}

/// `reps` draws, replication `r` on stream `(seed, r)`, in replication order.
pub fn ln_samples(n: usize, p: f64, reps: usize, seed: u64, route: Route) -> Result<Vec<(usize, usize)>> {
    check_probability(p)?;
    (0..reps as u64)
        .into_par_iter()
        .map(|r| sample_ln(n, p, RngStream::new(seed, r), route))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub reps: usize,
    pub mean: f64,
    /// Unbiased sample variance; 0 when `insufficient_sample`.
    pub variance: f64,
    pub var_over_n: f64,
    /// Percentile bootstrap interval for `var / n`.
    pub ci: Interval,
    pub insufficient_sample: bool,
    /// `(L_n - mean) / sqrt(n)`.
    pub dn: Vec<f64>,
}

/// Mean, variance and a bootstrap interval for `var / n` from a sample of
/// `L_n`. The bootstrap draws come from `(seed, u64::MAX)`.
pub fn summarize_ln(n: usize, ln: &[usize], seed: u64, resamples: usize) -> ScalingRow {
    let xs: Vec<f64> = ln.iter().map(|&v| v as f64).collect();
    let m = mean(&xs);
    let var = variance(&xs);
    let scale = n as f64;
    let mut rng = RngStream::new(seed, u64::MAX).fork(labels::BOOTSTRAP).rng();
    let ci = match var {
        Some(_) => bootstrap_ci(&xs, |s| variance(s).unwrap_or(0.0) / scale, resamples, 0.05, &mut rng),
        None => Interval { estimate: 0.0, lo: f64::NAN, hi: f64::NAN },
    };
    ScalingRow {
        n,
        reps: ln.len(),
        mean: m,
        variance: var.unwrap_or(0.0),
        var_over_n: var.unwrap_or(0.0) / scale,
        ci,
        insufficient_sample: var.is_none(),
        dn: xs.iter().map(|x| (x - m) / scale.sqrt()).collect(),
    }
}

pub fn run_variance_scaling(ns: &[usize], p: f64, reps: usize, seed: u64, route: Route) -> Result<Vec<ScalingRow>> {
    ns.iter()
        .map(|&n| {
            let ln: Vec<usize> = ln_samples(n, p, reps, seed, route)?.into_iter().map(|s| s.0).collect();
            Ok(summarize_ln(n, &ln, seed, 1000))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub delta: f64,
    /// Empirical `P(|L_n - mean| >= n delta)`.
    pub frequency: f64,
    /// `-ln(frequency) / (n delta^2)`; infinite when no exceedance was seen.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEnvelope {
    pub points: Vec<TailPoint>,
    /// Largest `c` with `frequency <= exp(-c n delta^2)` at every point.
    pub c_fit: f64,
}

pub fn tail_envelope(ln: &[usize], n: usize, deltas: &[f64]) -> TailEnvelope {
    let xs: Vec<f64> = ln.iter().map(|&v| v as f64).collect();
    let m = mean(&xs);
    let points: Vec<TailPoint> = deltas
        .iter()
        .map(|&delta| {
            let hits = xs.iter().filter(|&&x| (x - m).abs() >= n as f64 * delta).count();
            let frequency = hits as f64 / xs.len() as f64;
            let rate = if hits == 0 {
                f64::INFINITY
            } else {
                -frequency.ln() / (n as f64 * delta * delta)
            };
            TailPoint { delta, frequency, rate }
        })
        .collect();
    let c_fit = points.iter().map(|p| p.rate).fold(f64::INFINITY, f64::min);
    TailEnvelope { points, c_fit }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub n: usize,
    /// `None` for two fair binary strings, `Some(p)` for the three-letter model.
    pub p: Option<f64>,
    pub reps: usize,
    /// Mean of `L_n / n` with a normal 95% interval.
    pub ratio: Interval,
}

/// Mean of `L_n / n` over `reps` replications.
pub fn estimate_gamma(n: usize, reps: usize, seed: u64, p: Option<f64>) -> Result<GammaEstimate> {
    let ratios: Vec<f64> = match p {
        Some(p) => ln_samples(n, p, reps, seed, Route::Direct)?
            .into_iter()
            .map(|(l, _)| l as f64 / n as f64)
            .collect(),
        None => (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let s = RngStream::new(seed, r);
                let x = BinarySequence::random(n, &mut s.fork(labels::X).rng());
                let y = BinarySequence::random(n, &mut s.fork(labels::Y).rng());
                lcs_bitparallel(&x, &y) as f64 / n as f64
            })
            .collect(),
    };
    let m = mean(&ratios);
    let half = variance(&ratios).map_or(f64::NAN, |v| 1.96 * (v / reps as f64).sqrt());
    Ok(GammaEstimate {
        n,
        p,
        reps,
        ratio: Interval { estimate: m, lo: m - half, hi: m + half },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replication_is_flagged() {
        let rows = run_variance_scaling(&[50], 0.5, 1, 1, Route::Direct).unwrap();
        assert!(rows[0].insufficient_sample);
        assert_eq!(rows[0].variance, 0.0);
    }

    #[test]
    fn routes_share_the_mean() {
        // Same law by the representation; compare means within 4 standard errors.
        let a: Vec<f64> = ln_samples(40, 0.3, 4000, 1, Route::Direct)
            .unwrap()
            .iter()
            .map(|s| s.0 as f64)
            .collect();
        let b: Vec<f64> = ln_samples(40, 0.3, 4000, 2, Route::Coupled(InsertionMode::PaperInterior))
            .unwrap()
            .iter()
            .map(|s| s.0 as f64)
            .collect();
        let se = ((variance(&a).unwrap() + variance(&b).unwrap()) / 4000.0).sqrt();
        assert!((mean(&a) - mean(&b)).abs() < 4.0 * se);
    }

    #[test]
    fn gamma_single_letter() {
        // L_1 = 1 iff X_1 equals Y_1, probability (1 - p) / 2.
        let g = estimate_gamma(1, 20_000, 4, Some(0.4)).unwrap();
        let se = (0.3f64 * 0.7 / 20_000.0).sqrt();
        assert!((g.ratio.estimate - 0.3).abs() < 4.0 * se);
    }

    #[test]
    fn gamma_decreases_with_p() {
        let lo = estimate_gamma(300, 200, 5, Some(0.5)).unwrap();
        let hi = estimate_gamma(300, 200, 5, Some(0.1)).unwrap();
        assert!(lo.ratio.estimate < hi.ratio.estimate);
    }

    #[test]
    fn tail_envelope_shape() {
        let ln: Vec<usize> = (0..1000).map(|i| 100 + (i % 21)).collect();
        let env = tail_envelope(&ln, 200, &[0.02, 0.06]);
        assert!(env.points[0].frequency > 0.0);
        assert_eq!(env.points[1].frequency, 0.0);
        assert!(env.c_fit.is_finite() && env.c_fit > 0.0);
        for p in &env.points {
            assert!(p.frequency <= (-env.c_fit * 200.0 * p.delta * p.delta).exp() + 1e-12);
        }
    }
}
