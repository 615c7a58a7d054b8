use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::drop_scheme::InsertionMode;
use crate::error::{Error, Result};
use crate::matchings::containment_ln_prob;
use crate::sequences::check_probability;

/// Fractions of `n` that delimit the event ranges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Upper end of the full-match range and lower end of the 65% range.
    pub low: f64,
    /// Minimal score ratio `L(k) / k` above `low * n`.
    pub mid: f64,
    /// First prefix length `l / n` covered by the non-containment event.
    pub e3_start: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            low: 0.45,
            mid: 0.65,
            e3_start: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: f64,
    pub reps: usize,
    pub seed: u64,
    /// Slope constant of the linear-growth event.
    pub k1: f64,
    /// Window constant: growth is required over windows of `k2 * ln n`.
    pub k2: f64,
    /// Free-bit proportion.
    pub epsilon: f64,
    /// `delta(epsilon)`; derived from `epsilon` and `c_hat` when absent.
    pub delta: Option<f64>,
    /// Block-length cutoff.
    #[serde(rename = "D")]
    pub d: usize,
    /// Non-empty match density; `0.0425 epsilon / (D - 1)` when absent.
    pub gamma_match: Option<f64>,
    /// Large-deviation rate used for `delta`; fitted from the containment
    /// probability when absent.
    pub c_hat: Option<f64>,
    pub thresholds: Thresholds,
    pub mode: InsertionMode,
    /// Number of log-spaced `k` values in `[low * n, n]` for the matching
    /// events.
    pub grid_points: usize,
    /// Uniform stride for that grid instead; `1` checks every `k`.
    pub stride: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 500,
            p: 0.5,
            reps: 1000,
            seed: 1,
            k1: 0.1,
            k2: 10.0,
            epsilon: 0.002,
            delta: None,
            d: 15,
            gamma_match: None,
            c_hat: None,
            thresholds: Thresholds::default(),
            mode: InsertionMode::PaperInterior,
            grid_points: 32,
            stride: None,
        }
    }
}

/// Constants after defaults have been filled in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub delta: f64,
    pub gamma_match: f64,
    pub c_hat: f64,
    /// `0.5 / (1 - delta) < mid`, the precondition of the first inclusion.
    pub numbers_condition: bool,
}

fn open_unit(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must lie in (0, 1), got {v}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability(self.p)?;
        if self.n == 0 {
            return Err(Error::InvalidLength { min: 1, got: 0 });
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if !(self.k1 > 0.0 && self.k1 <= 1.0) {
            return Err(Error::Config(format!("k1 must lie in (0, 1], got {}", self.k1)));
        }
        if !(self.k2 > 0.0 && self.k2.is_finite()) {
            return Err(Error::Config(format!("k2 must be positive, got {}", self.k2)));
        }
        open_unit("epsilon", self.epsilon)?;
        if let Some(d) = self.delta {
            open_unit("delta", d)?;
        }
        if let Some(g) = self.gamma_match {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gamma_match must be non-negative, got {g}")));
            }
        }
        if let Some(c) = self.c_hat {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("c_hat must be positive, got {c}")));
            }
        }
        if self.d < 2 {
            return Err(Error::Config(format!("D must be at least 2, got {}", self.d)));
        }
        open_unit("thresholds.low", self.thresholds.low)?;
        open_unit("thresholds.mid", self.thresholds.mid)?;
        open_unit("thresholds.e3_start", self.thresholds.e3_start)?;
        if self.grid_points == 0 {
            return Err(Error::Config("grid_points must be at least 1".into()));
        }
        if self.stride == Some(0) {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved(&self) -> Resolved {
        let c_hat = self.c_hat.unwrap_or_else(fitted_c_hat);
        let delta = self.delta.unwrap_or_else(|| delta_for_epsilon(self.epsilon, c_hat));
        Resolved {
            delta,
            gamma_match: self
                .gamma_match
                .unwrap_or(0.0425 * self.epsilon / (self.d as f64 - 1.0)),
            c_hat,
            numbers_condition: delta < 1.0 && 0.5 / (1.0 - delta) < self.thresholds.mid,
        }
    }

    /// First `k` of the matching-event range, `ceil(low * n)`.
    pub fn k_low(&self) -> usize {
        (self.thresholds.low * self.n as f64).ceil() as usize
    }

    /// The `k` values at which matchings are extracted, ascending.
    pub fn k_grid(&self) -> Vec<usize> {
        let (lo, hi) = (self.k_low().max(1), self.n);
        if lo > hi {
            return Vec::new();
        }
        if let Some(step) = self.stride {
            let mut g: Vec<usize> = (lo..=hi).step_by(step).collect();
            if *g.last().unwrap() != hi {
                g.push(hi);
            }
            return g;
        }
        let pts = self.grid_points;
        let mut g: Vec<usize> = if pts == 1 {
            vec![hi]
        } else {
            let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
            (0..pts)
                .map(|i| (a + (b - a) * i as f64 / (pts - 1) as f64).exp().round() as usize)
                .map(|k| k.clamp(lo, hi))
                .collect()
        };
        g.dedup();
        g
    }

    /// Window length `ceil(k2 ln n)` of the slope event.
    pub fn slope_window(&self) -> usize {
        ((self.k2 * (self.n as f64).ln()).ceil() as usize).max(1)
    }
}

/// Binary entropy in nats.
pub fn binary_entropy(e: f64) -> f64 {
    if e <= 0.0 || e >= 1.0 {
        return 0.0;
    }
    -e * e.ln() - (1.0 - e) * (1.0 - e).ln()
}

/// `delta(eps) = eps + sqrt((2 / c) (eps ln 2 + H(eps)))`.
pub fn delta_for_epsilon(epsilon: f64, c_hat: f64) -> f64 {
    epsilon + ((2.0 / c_hat) * (epsilon * std::f64::consts::LN_2 + binary_entropy(epsilon))).sqrt()
}

/// Conservative large-deviation rate for full containment: the smallest
/// `-ln P(Y^l in Z^k) / (delta^2 l)` with `k = floor(2 (1 - delta) l)` over
/// `delta in {0.05, ..., 0.3}` and `l in {500, 1000, 2000, 4000}`.
pub fn fit_c_hat() -> f64 {
    let mut best = f64::INFINITY;
    for delta in [0.05, 0.1, 0.15, 0.2, 0.25, 0.3] {
        for l in [500usize, 1000, 2000, 4000] {
            let k = (2.0 * (1.0 - delta) * l as f64).floor() as usize;
            let lp = containment_ln_prob(l, k).expect("grid stays in range");
            best = best.min(-lp / (delta * delta * l as f64));
        }
    }
    best
}

/// [`fit_c_hat`], computed once per process.
pub fn fitted_c_hat() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(fit_c_hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_satisfy_the_inclusion_precondition() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let r = cfg.resolved();
        assert!((r.c_hat - 1.19).abs() < 0.01, "c_hat {}", r.c_hat);
        assert!(r.delta > 0.15 && r.delta < 0.18);
        assert!(r.numbers_condition);
        assert!((r.gamma_match - 0.0425 * 0.002 / 14.0).abs() < 1e-15);
        // D 2^-D < eps / 4 at the default cutoff.
        assert!(15.0 * 2f64.powi(-15) < cfg.epsilon / 4.0);
    }

    #[test]
    fn delta_shrinks_with_epsilon() {
        let c = 1.2;
        let ds: Vec<f64> = [0.1, 0.01, 0.001, 1e-5].iter().map(|&e| delta_for_epsilon(e, c)).collect();
        assert!(ds.windows(2).all(|w| w[1] < w[0]));
        assert!(ds[3] < 0.02);
    }

    #[test]
    fn grids() {
        let mut cfg = ExperimentConfig { n: 100, ..Default::default() };
        let g = cfg.k_grid();
        assert_eq!((g[0], *g.last().unwrap()), (45, 100));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        cfg.stride = Some(1);
        assert_eq!(cfg.k_grid(), (45..=100).collect::<Vec<_>>());
        cfg.stride = Some(20);
        assert_eq!(cfg.k_grid(), vec![45, 65, 85, 100]);
    }

    #[test]
    fn validation_names_the_field() {
        let bad = ExperimentConfig { k1: 0.0, ..Default::default() };
        assert!(bad.validate().unwrap_err().to_string().contains("k1"));
        let bad = ExperimentConfig { p: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { d: 1, ..Default::default() };
        assert!(bad.validate().unwrap_err().to_string().contains("D"));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig { n: 77, delta: Some(0.1), ..Default::default() };
        let text = toml::to_string(&cfg).unwrap();
        assert!(text.contains("D = 15"));
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: ExperimentConfig = toml::from_str("n = 9\nmode = \"full-uniform\"").unwrap();
        assert_eq!((partial.n, partial.mode), (9, InsertionMode::FullUniform));
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
    }
}
