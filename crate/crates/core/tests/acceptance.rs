//! Acceptance criteria 1-11, one test each. Every test prints a single
//! `[criterion N] PASS|FAIL ...` line with the measured values; tolerances
//! and pilot-pinned thresholds are the constants next to each test.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use lcsfluct::drop_scheme::{DropState, InsertionMode};
use lcsfluct::experiments::{
    check_inclusions, distribution_equality_check, estimate_gamma, exact_e_l10, exact_increment, exact_law_case1,
    increment_probability_check, run_replications, run_variance_scaling, EventId, ExperimentConfig, Route,
};
use lcsfluct::lcs::{align_score, lcs_bitparallel, lcs_length, SubstitutionMatrix};
use lcsfluct::matchings::{check_single_color, classify_matches, count_nd, has_smaller_matching, minimal_matching, renewal_embed};
use lcsfluct::sequences::{labels, BinarySequence, Bit, RngStream, TriSequence};
use lcsfluct::stats::{chi_square_pvalue, mean, variance};

fn report(id: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[criterion {id}] {verdict} {detail}");
    eprintln!("[criterion {id}] {verdict} {detail}");
    assert!(pass, "criterion {id} failed: {detail}");
}

fn bs(s: &str) -> BinarySequence {
    s.parse().unwrap()
}

fn ts(s: &str) -> TriSequence {
    s.parse().unwrap()
}

const C1_BUDGET: Duration = Duration::from_secs(1);

#[test]
fn criterion_01_worked_example_values() {
    let t = Instant::now();
    let l1 = lcs_length(&ts("a11a1000"), &ts("00110011"));
    let l2 = lcs_length(&ts("011a0a"), &bs("101011"));
    let m = SubstitutionMatrix::binary([[2, 1], [1, 3]], 0);
    let score = align_score(&bs("0101"), &bs("1100"), &m).unwrap();
    let nu = renewal_embed(&bs("001"), &bs("10101000111"));
    let elapsed = t.elapsed();
    let pass = l1 == 4 && l2 == 3 && score == 6 && nu == vec![2, 4, 5] && elapsed < C1_BUDGET;
    report(1, pass, format!("lcs {l1}, {l2}; align {score}; renewal {nu:?}; {elapsed:?}"));
}

const C2_TARGET: f64 = 6.97844;
const C2_TOL: f64 = 5e-4;
const C2_BUDGET: Duration = Duration::from_secs(60);

#[test]
fn criterion_02_exact_ten_bit_mean() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t = Instant::now();
    let e = pool.install(exact_e_l10);
    let elapsed = t.elapsed();
    let gap = (e.value() - C2_TARGET).abs();
    let pass = gap <= C2_TOL && elapsed < C2_BUDGET;
    report(
        2,
        pass,
        format!("E = {} = {}/2^{}, |E - {C2_TARGET}| = {gap:.2e}; single thread {elapsed:?}", e.decimal(), e.numerator, e.log2_denominator),
    );
}

const C3_TV: f64 = 0.01;
const C3_BUDGET: Duration = Duration::from_secs(300);

#[test]
fn criterion_03_representation_in_law() {
    let t = Instant::now();
    let chk = distribution_equality_check(8, 0.25, 1_000_000, 3, InsertionMode::PaperInterior).unwrap();
    let elapsed = t.elapsed();
    let exact_total: f64 = exact_law_case1(8, 0.25).unwrap().iter().sum();
    let pass = chk.tv < C3_TV && (exact_total - 1.0).abs() < 1e-12 && elapsed < C3_BUDGET;
    report(3, pass, format!("n = 8, p = 0.25, 10^6 coupled draws: TV = {:.5}; {elapsed:?}", chk.tv));
}

const C4_TRIALS: usize = 1_000_000;
const C4_ALPHA: f64 = 1e-3;

#[test]
fn criterion_04_uniform_drop_strings() {
    let mut worst = 1.0f64;
    let mut lines = Vec::new();
    for mode in [InsertionMode::PaperInterior, InsertionMode::FullUniform] {
        for k in 2..=4usize {
            let mut rng = RngStream::new(40 + k as u64, mode as u64).fork(labels::DROP).rng();
            let mut counts = vec![0u64; 1 << k];
            for _ in 0..C4_TRIALS {
                let mut st = DropState::init(&mut rng, mode);
                while st.k() < k {
                    st.step(&mut rng);
                }
                let code = (0..k).fold(0usize, |acc, i| acc << 1 | st.get(i).index());
                counts[code] += 1;
            }
            let expected = vec![C4_TRIALS as f64 / (1 << k) as f64; 1 << k];
            let p = chi_square_pvalue(&counts, &expected);
            worst = worst.min(p);
            lines.push(format!("{}/k={k}: p={p:.4}", mode.name()));
        }
    }
    report(4, worst > C4_ALPHA, format!("chi-square over 10^6 draws, {}", lines.join(", ")));
}

const C5_NS: [usize; 4] = [100, 400, 1600, 6400];
const C5_REPS: usize = 10_000;
const C5_MIN_RATIO: f64 = 1.0 / 3.0;
const C5_BUDGET: Duration = Duration::from_secs(30 * 60);

#[test]
fn criterion_05_variance_grows_linearly() {
    let t = Instant::now();
    let rows = run_variance_scaling(&C5_NS, 0.5, C5_REPS, 5, Route::Direct).unwrap();
    let elapsed = t.elapsed();
    let v: Vec<f64> = rows.iter().map(|r| r.var_over_n).collect();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cells: Vec<String> = rows
        .iter()
        .map(|r| format!("n={} var/n={:.4} [{:.4}, {:.4}]", r.n, r.var_over_n, r.ci.lo, r.ci.hi))
        .collect();
    let pass = lo > 0.0 && lo / hi >= C5_MIN_RATIO && elapsed < C5_BUDGET;
    report(5, pass, format!("{}; min/max = {:.3}; {elapsed:?}", cells.join("; "), lo / hi));
}

const C6_RANDOM_PAIRS: u64 = 10_000;
const C6_MAX_LEN: usize = 200;
const C6_EXHAUSTIVE_LEN: usize = 10;

fn all_strings(max_len: usize) -> Vec<BinarySequence> {
    (0..=max_len)
        .flat_map(|len| {
            (0..1u32 << len).map(move |code| BinarySequence::from_bits((0..len).map(|i| Bit::from_bool(code >> i & 1 == 1))))
        })
        .collect()
}

#[test]
fn criterion_06_minimal_matching_invariants() {
    let random_violations: u64 = (0..C6_RANDOM_PAIRS)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(66, r).rng();
            use rand::Rng;
            let z = BinarySequence::random(rng.random_range(0..=C6_MAX_LEN), &mut rng);
            let y = BinarySequence::random(rng.random_range(0..=C6_MAX_LEN), &mut rng);
            let mt = minimal_matching(&z, &y);
            let ok = mt.validate(&z, &y).is_ok()
                && mt.m() == lcs_bitparallel(&z, &y)
                && check_single_color(&classify_matches(&mt, &z, &y));
            u64::from(!ok)
        })
        .sum();
    let strings = all_strings(C6_EXHAUSTIVE_LEN);
    let (pairs, exhaustive_violations) = strings
        .par_iter()
        .map(|z| {
            let mut bad = 0u64;
            for y in &strings {
                let mt = minimal_matching(z, y);
                bad += u64::from(mt.m() != lcs_length(z, y) || has_smaller_matching(&mt, z, y));
            }
            (strings.len() as u64, bad)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let pass = random_violations == 0 && exhaustive_violations == 0;
    report(
        6,
        pass,
        format!(
            "{C6_RANDOM_PAIRS} random pairs: {random_violations} violations; {pairs} exhaustive pairs (lengths <= {C6_EXHAUSTIVE_LEN}): {exhaustive_violations} non-minimal"
        ),
    );
}

#[test]
fn criterion_07_event_inclusions() {
    let cfg = ExperimentConfig {
        n: 500,
        reps: 1000,
        seed: 7,
        ..Default::default()
    };
    let res = cfg.resolved();
    let gamma_formula = 0.0425 * cfg.epsilon / (cfg.d as f64 - 1.0);
    let rep = check_inclusions(&cfg).unwrap();
    let pass = res.numbers_condition
        && (res.gamma_match - gamma_formula).abs() < 1e-15
        && !rep.vacuous
        && rep.violations_346 == 0
        && rep.violations_123 == 0;
    report(
        7,
        pass,
        format!(
            "eps = {}, delta = {:.4}, 0.5/(1-delta) = {:.4}, gamma = {:.3e}; over {} reps x {} grid points: 346 premise {} violations {}, 123 premise {} violations {}",
            cfg.epsilon,
            res.delta,
            0.5 / (1.0 - res.delta),
            res.gamma_match,
            rep.reps,
            rep.grid.len(),
            rep.premise_346,
            rep.violations_346,
            rep.premise_123,
            rep.violations_123
        ),
    );
}

const C8_STATES: usize = 100;
const C8_DRAWS: usize = 4000;

#[test]
fn criterion_08_increment_bound() {
    let worked = exact_increment(&bs("101011"), &bs("111000111"), InsertionMode::PaperInterior).unwrap();
    let worked_ok = worked.nonempty == 2 && worked.probability >= 0.5 * 2.0 / 6.0;
    let cfg = ExperimentConfig { n: 200, seed: 8, ..Default::default() };
    let rows = increment_probability_check(&cfg, C8_STATES, C8_DRAWS).unwrap();
    let violations = rows.iter().filter(|r| r.violation).count();
    let exact_below_k = rows.iter().filter(|r| r.exact.probability < r.exact.bound_k).count();
    let exact_below_k1 = rows.iter().filter(|r| r.exact.probability < r.exact.bound_k_minus_1).count();
    let pass = worked_ok && violations == 0;
    report(
        8,
        pass,
        format!(
            "worked state: exact {:.4} >= {:.4} with {} non-empty matches; {} frozen states at n = 200: {violations} replay violations beyond 3 sigma, exact below the /k bound {exact_below_k}, below the /(k-1) bound {exact_below_k1}",
            worked.probability,
            0.5 * 2.0 / 6.0,
            worked.nonempty,
            rows.len()
        ),
    );
}

const C9_N: usize = 100_000;
const C9_REPS: u64 = 1000;

#[test]
fn criterion_09_block_statistics() {
    let mut parts = Vec::new();
    let mut pass = true;
    for d in [5usize, 10] {
        let stats: Vec<(usize, usize, usize)> = (0..C9_REPS)
            .into_par_iter()
            .map(|r| {
                let y = BinarySequence::random(C9_N, &mut RngStream::new(9, r).fork(labels::Y).rng());
                let (nd, tilde) = count_nd(&y, d).unwrap();
                let (_, tilde_prev) = count_nd(&y, d - 1).unwrap();
                (nd, tilde, tilde_prev)
            })
            .collect();
        let sure_failures = stats.iter().filter(|s| s.0 > d * s.1).count();
        let corrected_failures = stats.iter().filter(|s| s.0 > d * s.2).count();
        let tilde: Vec<f64> = stats.iter().map(|s| s.1 as f64).collect();
        let m = mean(&tilde);
        let se = (variance(&tilde).unwrap() / tilde.len() as f64).sqrt();
        let expect = (C9_N - d) as f64 * 2f64.powi(-(d as i32));
        let within = (m - expect).abs() <= 3.0 * se;
        pass &= sure_failures == 0 && within;
        parts.push(format!(
            "D={d}: N_D > D*Ntilde_D in {sure_failures}/{C9_REPS} samples (with runs of D letters instead: {corrected_failures}), mean Ntilde_D {m:.2} vs {expect:.2} +- 3*{se:.2} {}",
            if within { "ok" } else { "off" }
        ));
    }
    report(9, pass, parts.join("; "));
}

const C10_N: usize = 2000;
const C10_REPS: usize = 1000;
const C10_MIN_FREQ: f64 = 0.99;
// Pilot (n = 2000, 1000 reps, seed 2024): E1, E4 and the slope event held in
// 1000/1000; the slope event stays at 200/200 with k1 = 0.2 and drops to
// 96% at k1 = 0.3.
const C10_K1: f64 = 0.1;
const C10_K2: f64 = 10.0;

#[test]
fn criterion_10_event_frequencies() {
    let cfg = ExperimentConfig {
        n: C10_N,
        reps: C10_REPS,
        seed: 10,
        k1: C10_K1,
        k2: C10_K2,
        ..Default::default()
    };
    let events = [EventId::E1, EventId::E4, EventId::Slope];
    let (_, reps) = run_replications(&cfg, &events).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for e in events {
        let freq = reps.iter().filter(|r| r.flags.get(e) == Some(true)).count() as f64 / reps.len() as f64;
        pass &= freq >= C10_MIN_FREQ;
        parts.push(format!("{} {freq:.3}", e.name()));
    }
    report(10, pass, format!("n = {C10_N}, {C10_REPS} reps, k1 = {C10_K1}, k2 = {C10_K2}: {}", parts.join(", ")));
}

const C11_RANGE: (f64, f64) = (0.80, 0.83);

#[test]
fn criterion_11_binary_gamma() {
    let g = estimate_gamma(10_000, 100, 11, None).unwrap();
    let m = g.ratio.estimate;
    let pass = (C11_RANGE.0..=C11_RANGE.1).contains(&m);
    report(11, pass, format!("n = 10^4, 100 reps: mean L_n/n = {m:.5} [{:.5}, {:.5}]", g.ratio.lo, g.ratio.hi));
}
