//! Numeric checks of the two variance lower bounds: the discrete one for
//! integer maps with unit increments and linear growth over long windows,
//! and the continuous one for maps with derivative at least `c`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::sequences::check_probability;

const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceLemmaCheck {
    /// `VAR[f(B)]`.
    pub lhs: f64,
    pub rhs: f64,
    pub var_b: f64,
    pub holds: bool,
}

fn moments(law: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let m: f64 = law.clone().map(|(x, q)| x * q).sum();
    let v: f64 = law.map(|(x, q)| (x - m) * (x - m) * q).sum();
    (m, v.max(0.0))
}

fn check_law(law: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for q in law {
        if !(0.0..=1.0 + TOL).contains(&q) {
            return Err(Error::Precondition(format!("law has a weight {q} outside [0, 1]")));
        }
        total += q;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("law sums to {total}, not 1")));
    }
    Ok(())
}

/// `f` is tabulated on `0..f.len()` and `law[j] = P(B = j)` on the same
/// support. Rejects `f` that is decreasing somewhere, has an increment above
/// one, or grows by less than `c (j - i)` over some window `j - i >= m`.
pub fn verify_variance_lemma(f: &[i64], law: &[f64], c: f64, m: f64) -> Result<VarianceLemmaCheck> {
    if f.len() != law.len() || f.is_empty() {
        return Err(Error::Precondition(format!(
            "f has {} entries but the law has {}",
            f.len(),
            law.len()
        )));
    }
    if !(c > 0.0 && c <= 1.0) || m.is_nan() || m < 0.0 {
        return Err(Error::Precondition(format!("need 0 < c <= 1 and m >= 0, got c = {c}, m = {m}")));
    }
    check_law(law.iter().copied())?;
    for (j, w) in f.windows(2).enumerate() {
        let d = w[1] - w[0];
        if !(0..=1).contains(&d) {
            return Err(Error::Precondition(format!("f({}) - f({j}) = {d} is not 0 or 1", j + 1)));
        }
    }
    // g(j) = f(j) - c j must satisfy g(j) >= max_{i <= j - w} g(i).
    let w = (m.ceil() as usize).max(1);
    let g = |k: usize| f[k] as f64 - c * k as f64;
    let mut best = f64::NEG_INFINITY;
    for j in w..f.len() {
        best = best.max(g(j - w));
        if g(j) < best - TOL {
            return Err(Error::Precondition(format!("growth below c = {c} over a window ending at {j}")));
        }
    }
    let (_, var_b) = moments(law.iter().enumerate().map(|(j, &q)| (j as f64, q)));
    let (_, lhs) = moments(law.iter().zip(f).map(|(&q, &v)| (v as f64, q)));
    let rhs = if var_b == 0.0 {
        0.0
    } else {
        c * c * (1.0 - 2.0 * m / (c * var_b.sqrt())) * var_b
    };
    Ok(VarianceLemmaCheck {
        lhs,
        rhs,
        var_b,
        holds: lhs + TOL * (1.0 + rhs.abs()) >= rhs,
    })
}

/// Continuous form: `f' >= c` on the hull of the support implies
/// `VAR[f(B)] >= c^2 VAR[B]`. The derivative is probed at `probes` evenly
/// spaced points and the check is rejected if any probe falls below `c`.
pub fn verify_continuous_bound<F, D>(f: F, df: D, law: &[(f64, f64)], c: f64, probes: usize) -> Result<VarianceLemmaCheck>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if law.is_empty() || c <= 0.0 {
        return Err(Error::Precondition("need a non-empty law and c > 0".into()));
    }
    check_law(law.iter().map(|&(_, q)| q))?;
    let lo = law.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = law.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let probes = probes.max(2);
    for i in 0..probes {
        let x = lo + (hi - lo) * i as f64 / (probes - 1) as f64;
        let d = df(x);
        if d < c - TOL {
            return Err(Error::Precondition(format!("f'({x}) = {d} is below c = {c}")));
        }
    }
    let (_, var_b) = moments(law.iter().copied());
    let (_, lhs) = moments(law.iter().map(|&(x, q)| (f(x), q)));
    let rhs = c * c * var_b;
    Ok(VarianceLemmaCheck {
        lhs,
        rhs,
        var_b,
        holds: lhs + TOL * (1.0 + rhs) >= rhs,
    })
}

/// `P(Bin(n, p) = j)` for `j = 0..=n`.
pub fn binomial_law(n: usize, p: f64) -> Result<Vec<f64>> {
    check_probability(p)?;
    let b = Binomial::new(p, n as u64).map_err(|e| Error::Precondition(e.to_string()))?;
    Ok((0..=n as u64).map(|j| b.pmf(j)).collect())
}
