//! Exact enumeration oracles for small `n` and the distributional checks of
//! the coupling built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scaling::{ln_samples, Route};
use crate::drop_scheme::InsertionMode;
use crate::error::{Error, Result};
use crate::sequences::check_probability;
use crate::stats::{empirical_law, ks_two_sample, tv_distance};

/// Single-word bit-parallel LCS of two strings packed LSB-first, `n <= 63`.
fn lcs_word(a: u64, b: u64, la: usize, lb: usize) -> u32 {
    let low = (1u64 << la) - 1;
    let m1 = a & low;
    let m0 = !a & low;
    let mut v = !0u64;
    for i in 0..lb {
        let m = if b >> i & 1 == 1 { m1 } else { m0 };
        let u = v & m;
        v = v.wrapping_add(u) | (v & !u);
    }
    la as u32 - (v & low).count_ones()
}

/// `E[L_n]` for two independent uniform `n`-bit strings as an exact dyadic
/// rational `numerator / 2^(2n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactMean {
    pub n: usize,
    /// Sum of `LCS` over all `2^(2n)` ordered pairs.
    pub numerator: u64,
    pub log2_denominator: u32,
}

impl ExactMean {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / 2f64.powi(self.log2_denominator as i32)
    }

    /// The full terminating decimal expansion.
    pub fn decimal(&self) -> String {
        let d = self.log2_denominator;
        // numerator / 2^d = numerator * 5^d / 10^d
        let scaled = self.numerator as u128 * 5u128.pow(d);
        let ten = 10u128.pow(d);
        let frac = format!("{:0width$}", scaled % ten, width = d as usize);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            format!("{}", scaled / ten)
        } else {
            format!("{}.{}", scaled / ten, frac)
        }
    }
}

/// Full enumeration of all `2^(2n)` pairs; `n <= 12`.
pub fn exact_e_ln(n: usize) -> Result<ExactMean> {
    if n > 12 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            range: "0..=12".into(),
        });
    }
    let size = 1u64 << n;
    let numerator = (0..size)
        .into_par_iter()
        .map(|a| (0..size).map(|b| lcs_word(a, b, n, n) as u64).sum::<u64>())
        .sum();
    Ok(ExactMean {
        n,
        numerator,
        log2_denominator: 2 * n as u32,
    })
}

pub fn exact_e_l10() -> ExactMean {
    exact_e_ln(10).expect("n = 10 is in range")
}

/// Exact law of `L_n = LCS(X, Y)` in the three-letter model, `n <= 12`:
/// every `X` in `{0, 1, a}^n` is visited with its weight, letters `a` are
/// dropped, and every `Y` in `{0, 1}^n` is paired with the result.
pub fn exact_law_case1(n: usize, p: f64) -> Result<Vec<f64>> {
    check_probability(p)?;
    if n == 0 || n > 12 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            range: "1..=12".into(),
        });
    }
    let q = (1.0 - p) / 2.0;
    // weight[j][bits]: total probability of the X whose binary part is `bits` of length j.
    let mut weight: Vec<Vec<f64>> = (0..=n).map(|j| vec![0.0; 1 << j]).collect();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let (mut c, mut bits, mut j, mut w) = (code, 0u64, 0usize, 1.0);
        for _ in 0..n {
            match c % 3 {
                2 => w *= p,
                d => {
                    bits |= (d as u64) << j;
                    j += 1;
                    w *= q;
                }
            }
            c /= 3;
        }
        weight[j][bits as usize] += w;
    }
    let ny = 1u64 << n;
    let per_y = 1.0 / ny as f64;
    let mut law = vec![0.0; n + 1];
    for (j, row) in weight.iter().enumerate() {
        for (bits, &w) in row.iter().enumerate() {
            for yb in 0..ny {
                law[lcs_word(bits as u64, yb, j, n) as usize] += w * per_y;
            }
        }
    }
    Ok(law)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionCheck {
    pub n: usize,
    pub p: f64,
    pub reps: usize,
    pub exact: Vec<f64>,
    pub simulated: Vec<f64>,
    pub tv: f64,
}

/// Exact law of `L_n` against `reps` draws of `L^a(n - N^a)`.
pub fn distribution_equality_check(n: usize, p: f64, reps: usize, seed: u64, mode: InsertionMode) -> Result<DistributionCheck> {
    let exact = exact_law_case1(n, p)?;
    let sim = ln_samples(n, p, reps, seed, Route::Coupled(mode))?;
    let simulated = empirical_law(sim.iter().map(|s| s.0));
    Ok(DistributionCheck {
        n,
        p,
        reps,
        tv: tv_distance(&exact, &simulated),
        exact,
        simulated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleCheck {
    pub ks: f64,
    pub p_value: f64,
    pub tv: f64,
}

pub fn compare_samples(a: &[usize], b: &[usize]) -> TwoSampleCheck {
    let fa: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let fb: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    let (ks, p_value) = ks_two_sample(&fa, &fb);
    TwoSampleCheck {
        ks,
        p_value,
        tv: tv_distance(&empirical_law(a.iter().copied()), &empirical_law(b.iter().copied())),
    }
}

/// Direct draws of `L_n` (seed `seed`) against coupled draws (seed `seed + 1`).
pub fn two_sample_check(n: usize, p: f64, reps: usize, seed: u64, mode: InsertionMode) -> Result<TwoSampleCheck> {
    let direct: Vec<usize> = ln_samples(n, p, reps, seed, Route::Direct)?.into_iter().map(|s| s.0).collect();
    let coupled: Vec<usize> = ln_samples(n, p, reps, seed.wrapping_add(1), Route::Coupled(mode))?
        .into_iter()
        .map(|s| s.0)
        .collect();
    Ok(compare_samples(&direct, &coupled))
}
