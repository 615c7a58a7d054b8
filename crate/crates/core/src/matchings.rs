//! Matching subsequences `(pi, eta)` of `Z` and `Y`, the canonical minimal
//! element of the maximal-length matchings, match census, blocks of `Y`,
//! the renewal embedding and the containment probability.
//!
//! All positions in this module are 1-based, as in the alignment pictures.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::lcs::{advance_row, zeros_in_prefix, ColumnMasks};
use crate::sequences::{BinarySequence, Bit};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub pi: Vec<usize>,
    pub eta: Vec<usize>,
}

impl Matching {
    pub fn m(&self) -> usize {
        self.pi.len()
    }

    /// Checks strict monotonicity, bounds and letter agreement.
    pub fn validate(&self, z: &BinarySequence, y: &BinarySequence) -> Result<()> {
        if self.pi.len() != self.eta.len() {
            return Err(Error::Precondition("pi and eta differ in length".into()));
        }
        for idx in [&self.pi, &self.eta] {
            if idx.first() == Some(&0) || idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Precondition("indices must be 1-based and strictly increasing".into()));
            }
        }
        if self.pi.last().is_some_and(|&p| p > z.len()) || self.eta.last().is_some_and(|&e| e > y.len()) {
            return Err(Error::Precondition("index beyond sequence end".into()));
        }
        for (&p, &e) in self.pi.iter().zip(&self.eta) {
            if z.get(p - 1) != y.get(e - 1) {
                return Err(Error::Precondition(format!("Z[{p}] != Y[{e}]")));
            }
        }
        Ok(())
    }

    /// Coordinatewise `self <= other` on both index maps.
    pub fn le(&self, other: &Matching) -> bool {
        self.m() == other.m()
            && self.pi.iter().zip(&other.pi).all(|(a, b)| a <= b)
            && self.eta.iter().zip(&other.eta).all(|(a, b)| a <= b)
    }

    /// Two-row alignment picture with `_` for gaps. Between consecutive
    /// matched columns, unmatched letters of `Z` come before those of `Y`.
    pub fn render(&self, z: &BinarySequence, y: &BinarySequence) -> (String, String) {
        let (mut top, mut bottom) = (String::new(), String::new());
        let (mut zi, mut yi) = (1, 1);
        let anchors = self
            .pi
            .iter()
            .zip(&self.eta)
            .map(|(&p, &e)| (p, e))
            .chain(std::iter::once((z.len() + 1, y.len() + 1)));
        for (p, e) in anchors {
            while zi < p {
                top.push(z.get(zi - 1).to_char());
                bottom.push('_');
                zi += 1;
            }
            while yi < e {
                top.push('_');
                bottom.push(y.get(yi - 1).to_char());
                yi += 1;
            }
            if p <= z.len() {
                top.push(z.get(p - 1).to_char());
                bottom.push(y.get(e - 1).to_char());
                zi += 1;
                yi += 1;
            }
        }
        (top, bottom)
    }

    /// CSV rows `i,pi,eta`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "pi", "eta"])?;
        for (i, (p, e)) in self.pi.iter().zip(&self.eta).enumerate() {
            w.write_record([(i + 1).to_string(), p.to_string(), e.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `next[b][j]`: smallest 1-based `e >= j` with `Y[e] = b`, or `usize::MAX`.
fn next_occurrence(y: &BinarySequence) -> [Vec<usize>; 2] {
    let n = y.len();
    let mut next = [vec![usize::MAX; n + 2], vec![usize::MAX; n + 2]];
    for j in (1..=n).rev() {
        for b in 0..2 {
            next[b][j] = next[b][j + 1];
        }
        next[y.get(j - 1).index()][j] = j;
    }
    next
}

/// Bit-parallel rows for suffix LCS: `suffix_lcs(i, j) = LCS(Z[i..], Y[j..])`.
struct SuffixTable {
    rows: Vec<u64>,
    words: usize,
    k: usize,
    n: usize,
}

impl SuffixTable {
    fn new(z: &BinarySequence, y: &BinarySequence) -> Self {
        let ry = y.reversed();
        let masks = ColumnMasks::new(&ry);
        let words = masks.words();
        let k = z.len();
        let mut rows = Vec::with_capacity((k + 1) * words);
        rows.extend(masks.initial_row());
        let mut dst = vec![0u64; words];
        for t in 0..k {
            let bit = z.get(k - 1 - t);
            advance_row(&rows[t * words..(t + 1) * words], masks.mask(bit), &mut dst);
            rows.extend_from_slice(&dst);
        }
        Self { rows, words, k, n: y.len() }
    }

    fn get(&self, i: usize, j: usize) -> usize {
        if i > self.k || j > self.n {
            return 0;
        }
        let t = self.k + 1 - i;
        zeros_in_prefix(&self.rows[t * self.words..(t + 1) * self.words], self.n + 1 - j)
    }
}

/// Lexicographically smallest `(pi(1), eta(1), pi(2), ...)` among matchings
/// of maximal length. Lexicographic minimality implies minimality in the
/// coordinatewise order.
pub fn minimal_matching(z: &BinarySequence, y: &BinarySequence) -> Matching {
    let table = SuffixTable::new(z, y);
    let next = next_occurrence(y);
    let total = table.get(1, 1);
    let mut out = Matching {
        pi: Vec::with_capacity(total),
        eta: Vec::with_capacity(total),
    };
    let (mut p, mut e) = (1, 1);
    let mut rem = total;
    while rem > 0 {
        let b = z.get(p - 1).index();
        let cand = next[b][e];
        if cand != usize::MAX && 1 + table.get(p + 1, cand + 1) >= rem {
            out.pi.push(p);
            out.eta.push(cand);
            e = cand + 1;
            rem -= 1;
        }
        p += 1;
    }
    out
}

/// One match: the stretch between consecutive matched pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub pi_i: usize,
    pub pi_next: usize,
    pub eta_i: usize,
    pub eta_next: usize,
    pub is_empty: bool,
    pub contains_zero: bool,
    pub contains_one: bool,
    pub free_bits: usize,
}

/// One record for each `i in 1..m`. Bits of `Y` before `eta(1)` and after
/// `eta(m)` belong to no match.
pub fn classify_matches(mt: &Matching, _z: &BinarySequence, y: &BinarySequence) -> Vec<MatchRecord> {
    let mut ones = vec![0usize; y.len() + 1];
    for (j, b) in y.iter().enumerate() {
        ones[j + 1] = ones[j] + b.index();
    }
    (1..mt.m())
        .map(|i| {
            let (a, b) = (mt.eta[i - 1], mt.eta[i]);
            let free = b - a - 1;
            let one_count = ones[b - 1] - ones[a];
            MatchRecord {
                pi_i: mt.pi[i - 1],
                pi_next: mt.pi[i],
                eta_i: a,
                eta_next: b,
                is_empty: free == 0,
                contains_zero: free > one_count,
                contains_one: one_count > 0,
                free_bits: free,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub matches: usize,
    pub nonempty: usize,
    pub free_bits: usize,
    /// Unmatched `Y` bits before `eta(1)`, reported apart from the matches.
    pub leading_free: usize,
}

pub fn summarize(mt: &Matching, records: &[MatchRecord]) -> MatchSummary {
    MatchSummary {
        matches: records.len(),
        nonempty: records.iter().filter(|r| !r.is_empty).count(),
        free_bits: records.iter().map(|r| r.free_bits).sum(),
        leading_free: mt.eta.first().map_or(0, |&e| e - 1),
    }
}

/// True when no match holds free bits of both colors.
pub fn check_single_color(records: &[MatchRecord]) -> bool {
    records.iter().all(|r| !(r.contains_zero && r.contains_one))
}

/// Whether some other maximal-length matching lies coordinatewise below `mt`.
///
/// Exact search over all matchings `(pi', eta')` with `pi' <= pi` and
/// `eta' <= eta`. Level `i` keeps, for each `a = pi'(i)`, the smallest
/// reachable `eta'(i)` overall and the smallest one reached after some
/// strict decrease; a prefix minimum over `a` answers "is there a previous
/// pair strictly to the lower left".
pub fn has_smaller_matching(mt: &Matching, z: &BinarySequence, y: &BinarySequence) -> bool {
    const NONE: usize = usize::MAX;
    let m = mt.m();
    if m == 0 {
        return false;
    }
    let next = next_occurrence(y);
    let k = z.len();
    // Level 0 is the virtual pair (0, 0), reached without a strict step.
    let mut any_prev = vec![NONE; k + 1];
    let mut strict_prev = vec![NONE; k + 1];
    any_prev[0] = 0;
    let mut any_cur = vec![NONE; k + 1];
    let mut strict_cur = vec![NONE; k + 1];
    for i in 0..m {
        let (pi_i, eta_i) = (mt.pi[i], mt.eta[i]);
        any_cur.fill(NONE);
        strict_cur.fill(NONE);
        let (mut lo_any, mut lo_strict) = (NONE, NONE);
        for a in 1..=pi_i {
            lo_any = lo_any.min(any_prev[a - 1]);
            lo_strict = lo_strict.min(strict_prev[a - 1]);
            let occ = &next[z.get(a - 1).index()];
            let after = |lo: usize| if lo == NONE { NONE } else { occ[lo + 1] };
            let first = after(lo_any);
            if first == NONE || first > eta_i {
                continue;
            }
            any_cur[a] = first;
            let mut best = after(lo_strict);
            if a < pi_i || first < eta_i {
                best = best.min(first);
            }
            if best <= eta_i {
                strict_cur[a] = best;
            }
        }
        std::mem::swap(&mut any_prev, &mut any_cur);
        std::mem::swap(&mut strict_prev, &mut strict_cur);
    }
    strict_prev.iter().any(|&b| b != NONE)
}

/// Maximal run of one color in `Y`, 1-based and inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    pub color: Bit,
}

impl Block {
    pub fn length(&self) -> usize {
        self.end - self.start + 1
    }
}

pub fn blocks(y: &BinarySequence) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    for (j, b) in y.iter().enumerate() {
        match out.last_mut() {
            Some(last) if last.color == b => last.end = j + 1,
            _ => out.push(Block { start: j + 1, end: j + 1, color: b }),
        }
    }
    out
}

/// `(N_D, Ntilde_D)`: points of `Y` in blocks of length at least `D`, and
/// starting points `s` with `Y_s = Y_{s+1} = ... = Y_{s+D}` (runs of `D + 1`
/// equal letters, `1 <= s <= n - D`).
pub fn count_nd(y: &BinarySequence, d: usize) -> Result<(usize, usize)> {
    if d == 0 {
        return Err(Error::OutOfRange {
            what: "D",
            value: 0,
            range: ">= 1".into(),
        });
    }
    let mut n_d = 0;
    let mut tilde = 0;
    for b in blocks(y) {
        let len = b.length();
        if len >= d {
            n_d += len;
        }
        tilde += len.saturating_sub(d);
    }
    Ok((n_d, tilde))
}

/// `nu(i)`: smallest `l` with `Z[1..i]` a subsequence of `Y[1..l]`, for the
/// longest embeddable prefix of `Z`.
pub fn renewal_embed(z: &BinarySequence, y: &BinarySequence) -> Vec<usize> {
    let mut out = Vec::new();
    let mut j = 0;
    for b in z.iter() {
        while j < y.len() && y.get(j) != b {
            j += 1;
        }
        if j == y.len() {
            break;
        }
        j += 1;
        out.push(j);
    }
    out
}

/// `P(Y^l is a subsequence of Z^k)` for independent fair bits, as the
/// dyadic numerator `sum_{j=l}^k C(j-1, l-1) 2^{k-j}` over `2^k`. Needs
/// `k <= 126`.
pub fn containment_prob_dyadic(l: usize, k: usize) -> Result<u128> {
    check_lk(l, k)?;
    if k > 126 {
        return Err(Error::OutOfRange {
            what: "k",
            value: k as i64,
            range: "<= 126 for exact arithmetic".into(),
        });
    }
    // C(j-1, l-1) for j = l.. by the recurrence C(j, l-1) = C(j-1, l-1) * j / (j-l+1).
    let mut c: u128 = 1;
    let mut num: u128 = 0;
    for j in l..=k {
        num += c << (k - j);
        c = c * j as u128 / (j + 1 - l) as u128;
    }
    Ok(num)
}

/// Exact value for `k <= 126`, log-space summation above.
pub fn containment_prob_exact(l: usize, k: usize) -> Result<f64> {
    if k <= 126 {
        let num = containment_prob_dyadic(l, k)?;
        return Ok(num as f64 / 2f64.powi(k as i32));
    }
    Ok(containment_ln_prob(l, k)?.exp())
}

/// Natural log of the containment probability, summed in log space.
pub fn containment_ln_prob(l: usize, k: usize) -> Result<f64> {
    check_lk(l, k)?;
    let ln2 = std::f64::consts::LN_2;
    let terms: Vec<f64> = (l..=k)
        .map(|j| ln_choose(j - 1, l - 1) - j as f64 * ln2)
        .collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    Ok(top + s.ln())
}

fn ln_choose(n: usize, r: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)
}

fn check_lk(l: usize, k: usize) -> Result<()> {
    if l == 0 || k < l {
        return Err(Error::Precondition(format!("need 1 <= l <= k, got l = {l}, k = {k}")));
    }
    if k > 100_000 {
        return Err(Error::OutOfRange {
            what: "k",
            value: k as i64,
            range: "<= 100000".into(),
        });
    }
    Ok(())
}
