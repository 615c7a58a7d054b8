//! Per-replication evaluation of the proof events and the two deterministic
//! inclusions between them.
//!
//! One replication draws `N^a`, `Y` and a drop history from its own stream
//! (the same draws as [`crate::drop_scheme::simulate_ln_coupled`], so `L_n`
//! agrees), grows `Z` and records everything the events need on the way.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Resolved};
use crate::drop_scheme::CurveRun;
use crate::error::{Error, Result};
use crate::matchings::{check_single_color, classify_matches, count_nd, minimal_matching, summarize};
use crate::sequences::{labels, BinarySequence, RngStream};
use crate::stats::{clopper_pearson, mean, variance, Interval};

/// Slack for comparisons of integer counts against real thresholds.
const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    #[serde(rename = "Eslope")]
    Slope,
}

impl EventId {
    pub const ALL: [EventId; 7] = [
        EventId::E1,
        EventId::E2,
        EventId::E3,
        EventId::E4,
        EventId::E5,
        EventId::E6,
        EventId::Slope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventId::E1 => "E1",
            EventId::E2 => "E2",
            EventId::E3 => "E3",
            EventId::E4 => "E4",
            EventId::E5 => "E5",
            EventId::E6 => "E6",
            EventId::Slope => "Eslope",
        }
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventId::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("slope") && *e == EventId::Slope))
            .ok_or_else(|| Error::Config(format!("unknown event {s:?}")))
    }
}

/// Indicators of one replication; `None` for events that were not evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFlags {
    pub e1: Option<bool>,
    pub e2: Option<bool>,
    pub e3: Option<bool>,
    pub e4: Option<bool>,
    pub e5: Option<bool>,
    pub e6: Option<bool>,
    pub slope: Option<bool>,
}

impl EventFlags {
    pub fn get(&self, id: EventId) -> Option<bool> {
        match id {
            EventId::E1 => self.e1,
            EventId::E2 => self.e2,
            EventId::E3 => self.e3,
            EventId::E4 => self.e4,
            EventId::E5 => self.e5,
            EventId::E6 => self.e6,
            EventId::Slope => self.slope,
        }
    }
}

/// Census of the canonical minimal matching of `Z^k` against `Y` at one
/// grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub k: usize,
    /// `L(k)`, the matching length.
    pub score: usize,
    /// `eta(L(k))`, or 0 for the empty matching.
    pub eta_last: usize,
    pub nonempty: usize,
    pub free_bits: usize,
    pub leading_free: usize,
    pub single_color: bool,
    pub e4k: bool,
    pub e6k: bool,
    pub e2k: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub rep: u64,
    /// `L^a(n - N^a)`.
    pub ln: usize,
    pub na: usize,
    pub flags: EventFlags,
    /// `N_D` of `Y`.
    pub n_d: usize,
    /// Curve values at [`ExperimentConfig::k_grid`].
    pub checkpoints: Vec<u32>,
    /// Matching census, filled when E2 or E6 is evaluated.
    pub grid: Vec<GridPoint>,
}

/// `g(j) >= g(i)` for all `i <= j - w`, where `g(k) = values[k] - k1 k`.
pub fn slope_holds(values: &[u32], k1: f64, w: usize) -> bool {
    let g = |k: usize| values[k] as f64 - k1 * k as f64;
    let mut best = f64::NEG_INFINITY;
    for j in w..values.len() {
        best = best.max(g(j - w));
        if g(j) < best - TOL {
            return false;
        }
    }
    true
}

fn grid_point(cfg: &ExperimentConfig, res: &Resolved, k: usize, z: &BinarySequence, y: &BinarySequence) -> GridPoint {
    let mt = minimal_matching(z, y);
    let recs = classify_matches(&mt, z, y);
    let s = summarize(&mt, &recs);
    let score = mt.m();
    let eta_last = mt.eta.last().copied().unwrap_or(0);
    GridPoint {
        k,
        score,
        eta_last,
        nonempty: s.nonempty,
        free_bits: s.free_bits,
        leading_free: s.leading_free,
        single_color: check_single_color(&recs),
        e4k: score as f64 + TOL >= cfg.thresholds.mid * k as f64,
        e6k: score as f64 <= (1.0 - cfg.epsilon) * eta_last as f64 + TOL,
        e2k: s.nonempty as f64 >= res.gamma_match * cfg.n as f64,
    }
}

/// Evaluates the requested events on replication `rep`.
pub fn evaluate_replication(cfg: &ExperimentConfig, res: &Resolved, rep: u64, events: &[EventId]) -> Replication {
    let n = cfg.n;
    let want = |e: EventId| events.contains(&e);
    let stream = RngStream::new(cfg.seed, rep);
    let binom = Binomial::new(n as u64, cfg.p).expect("p validated");
    let na = binom.sample(&mut stream.fork(labels::NA).rng()) as usize;
    let y = BinarySequence::random(n, &mut stream.fork(labels::Y).rng());
    let mut rng = stream.fork(labels::DROP).rng();

    // Non-containment checks: Z^kk against Y^l for kk = floor(2 l (1 - delta)).
    let need_e3 = want(EventId::E3);
    let span = 2.0 * (1.0 - res.delta);
    let big_k = if need_e3 { n.max((span * n as f64).floor() as usize) } else { n };
    let mut targets: Vec<Vec<usize>> = Vec::new();
    if need_e3 {
        targets = vec![Vec::new(); big_k + 1];
        let l0 = ((cfg.thresholds.e3_start * n as f64).ceil() as usize).max(1);
        for l in l0..=n {
            targets[(span * l as f64).floor() as usize].push(l);
        }
    }
    let limit = |l: usize| (1.0 - cfg.epsilon) * l as f64 + TOL;
    let mut e3 = true;

    let need_grid = want(EventId::E2) || want(EventId::E6);
    let grid_ks = if need_grid { cfg.k_grid() } else { Vec::new() };
    let mut grid = Vec::with_capacity(grid_ks.len());
    let mut next_grid = 0;

    let mut run = CurveRun::start(&y, cfg.mode, &mut rng);
    let v1 = run.state.initial_bits().0;
    let z1 = BinarySequence::from_bits([v1]);
    // k = 1 and k = 2 are already behind us once the run has started.
    if need_e3 {
        for &l in targets.iter().take(2).flatten() {
            let score = if targets[1].contains(&l) {
                usize::from(y.prefix(l).iter().any(|b| b == v1))
            } else {
                0
            };
            e3 &= score as f64 <= limit(l);
        }
        if big_k >= 2 {
            for &l in &targets[2] {
                e3 &= run.engine.lcs_prefix(l) as f64 <= limit(l);
            }
        }
    }
    while next_grid < grid_ks.len() && grid_ks[next_grid] <= 2 {
        let k = grid_ks[next_grid];
        let zk = if k == 1 { z1.clone() } else { BinarySequence::from_bits(run.engine.z().iter().copied()) };
        grid.push(grid_point(cfg, res, k, &zk, &y));
        next_grid += 1;
    }
    while run.k() < big_k {
        run.step(&mut rng);
        let k = run.k();
        if need_e3 {
            for &l in &targets[k] {
                e3 &= run.engine.lcs_prefix(l) as f64 <= limit(l);
            }
        }
        if next_grid < grid_ks.len() && grid_ks[next_grid] == k {
            let zk = BinarySequence::from_bits(run.engine.z().iter().copied());
            grid.push(grid_point(cfg, res, k, &zk, &y));
            next_grid += 1;
        }
    }

    let values = &run.values()[..=n];
    let (n_d, _) = count_nd(&y, cfg.d).expect("D validated");
    let low_end = (cfg.thresholds.low * n as f64).floor() as usize;
    let mut flags = EventFlags::default();
    if want(EventId::E1) {
        flags.e1 = Some((0..=low_end.min(n)).all(|k| values[k] as usize == k));
    }
    if want(EventId::E4) {
        flags.e4 = Some((cfg.k_low()..=n).all(|k| values[k] as f64 + TOL >= cfg.thresholds.mid * k as f64));
    }
    if want(EventId::E5) {
        flags.e5 = Some(n_d as f64 <= cfg.epsilon * n as f64 / 4.0);
    }
    if need_e3 {
        flags.e3 = Some(e3);
    }
    if want(EventId::E6) {
        flags.e6 = Some(grid.iter().all(|g| g.e6k));
    }
    if want(EventId::E2) {
        flags.e2 = Some(grid.iter().all(|g| g.e2k));
    }
    if want(EventId::Slope) {
        flags.slope = Some(slope_holds(values, cfg.k1, cfg.slope_window()));
    }
    Replication {
        rep,
        ln: values[n - na] as usize,
        na,
        flags,
        n_d,
        checkpoints: cfg.k_grid().iter().map(|&k| values[k]).collect(),
        grid,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub event: EventId,
    pub successes: u64,
    pub reps: u64,
    /// Frequency with a 95% Clopper-Pearson interval.
    pub frequency: Interval,
}

fn estimates(reps: &[Replication], events: &[EventId]) -> Vec<EventEstimate> {
    events
        .iter()
        .map(|&event| {
            let successes = reps.iter().filter(|r| r.flags.get(event) == Some(true)).count() as u64;
            EventEstimate {
                event,
                successes,
                reps: reps.len() as u64,
                frequency: clopper_pearson(successes, reps.len() as u64, 0.05),
            }
        })
        .collect()
}

/// All replications of `cfg`, in replication order.
pub fn run_replications(cfg: &ExperimentConfig, events: &[EventId]) -> Result<(Resolved, Vec<Replication>)> {
    cfg.validate()?;
    let res = cfg.resolved();
    let reps = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| evaluate_replication(cfg, &res, r, events))
        .collect();
    Ok((res, reps))
}

pub fn estimate_event(cfg: &ExperimentConfig, which: EventId) -> Result<EventEstimate> {
    let (_, reps) = run_replications(cfg, &[which])?;
    Ok(estimates(&reps, &[which]).remove(0))
}

/// Violation counts of the two inclusions over all replications and grid
/// points, with how often each premise held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    /// Set when `low * n < 10`; nothing is checked.
    pub vacuous: bool,
    pub resolved: Resolved,
    pub reps: usize,
    pub grid: Vec<usize>,
    /// `E3 and E4k` held.
    pub premise_346: u64,
    /// `E3 and E4k` held but `E6k` failed.
    pub violations_346: u64,
    /// `E4 and E5 and E6k` held.
    pub premise_123: u64,
    /// `E4 and E5 and E6k` held but `E2k` failed.
    pub violations_123: u64,
    /// Grid points whose minimal matching mixed colors inside a match.
    pub single_color_failures: u64,
    pub events: Vec<EventEstimate>,
}

pub fn check_inclusions(cfg: &ExperimentConfig) -> Result<InclusionReport> {
    cfg.validate()?;
    let resolved = cfg.resolved();
    if !resolved.numbers_condition {
        return Err(Error::Precondition(format!(
            "0.5 / (1 - delta) = {:.4} is not below {}; lower epsilon or delta",
            0.5 / (1.0 - resolved.delta),
            cfg.thresholds.mid
        )));
    }
    let mut report = InclusionReport {
        vacuous: cfg.thresholds.low * (cfg.n as f64) < 10.0,
        resolved,
        reps: cfg.reps,
        grid: cfg.k_grid(),
        premise_346: 0,
        violations_346: 0,
        premise_123: 0,
        violations_123: 0,
        single_color_failures: 0,
        events: Vec::new(),
    };
    if report.vacuous {
        report.grid.clear();
        return Ok(report);
    }
    let events = [EventId::E2, EventId::E3, EventId::E4, EventId::E5, EventId::E6];
    let (_, reps) = run_replications(cfg, &events)?;
    for r in &reps {
        let f = r.flags;
        for g in &r.grid {
            if f.e3 == Some(true) && g.e4k {
                report.premise_346 += 1;
                report.violations_346 += u64::from(!g.e6k);
            }
            if f.e4 == Some(true) && f.e5 == Some(true) && g.e6k {
                report.premise_123 += 1;
                report.violations_123 += u64::from(!g.e2k);
            }
            report.single_color_failures += u64::from(!g.single_color);
        }
    }
    report.events = estimates(&reps, &events);
    Ok(report)
}

/// Per-replication table plus aggregates for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub version: String,
    pub config: ExperimentConfig,
    pub resolved: Resolved,
    pub k_grid: Vec<usize>,
    pub replications: Vec<Replication>,
    pub mean: f64,
    /// Unbiased; absent below two replications.
    pub variance: Option<f64>,
    pub insufficient_sample: bool,
    /// `(L_n - mean) / sqrt(n)` with the final sample mean.
    pub dn: Vec<f64>,
    pub events: Vec<EventEstimate>,
}

pub fn simulate(cfg: &ExperimentConfig, events: &[EventId]) -> Result<RunSummary> {
    let (resolved, reps) = run_replications(cfg, events)?;
    let ln: Vec<f64> = reps.iter().map(|r| r.ln as f64).collect();
    let m = mean(&ln);
    let var = variance(&ln);
    let sqrt_n = (cfg.n as f64).sqrt();
    Ok(RunSummary {
        version: crate::VERSION.to_string(),
        config: cfg.clone(),
        resolved,
        k_grid: cfg.k_grid(),
        mean: m,
        insufficient_sample: var.is_none(),
        variance: var,
        dn: ln.iter().map(|x| (x - m) / sqrt_n).collect(),
        events: estimates(&reps, events),
        replications: reps,
    })
}
