//! Exact LCS and alignment scoring.
//!
//! Three routes to the same numbers:
//! * [`lcs_length`]: the textbook dynamic program with a rolling row,
//! * [`lcs_bitparallel`]: the bit-vector recurrence
//!   `V' = (V + (V & M_c)) | (V & !M_c)` where bit `j` of `V` is clear exactly
//!   when the DP row steps up at column `j`,
//! * [`IncrementalLcs`]: the same recurrence with every intermediate row kept,
//!   so inserting one letter into the row string only replays rows from the
//!   insertion point on.

use serde::{Deserialize, Serialize};

use crate::drop_scheme::DropState;
use crate::error::{Error, Result};
use crate::sequences::{BinarySequence, Bit, Letters, Symbol3};

fn codes<L: Letters + ?Sized>(s: &L) -> Vec<u8> {
    (0..s.len()).map(|i| s.symbol(i) as u8).collect()
}

/// Length of a longest common subsequence. The letter `a` never matches a bit.
pub fn lcs_length<A: Letters + ?Sized, B: Letters + ?Sized>(a: &A, b: &B) -> usize {
    let (mut a, mut b) = (codes(a), codes(b));
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    // `b` is the shorter one; the row runs over it.
    let mut row = vec![0u32; b.len() + 1];
    for &x in &a {
        let mut diag = 0u32;
        for j in 1..=b.len() {
            let up = row[j];
            row[j] = if x == b[j - 1] {
                diag + 1
            } else {
                up.max(row[j - 1])
            };
            diag = up;
        }
    }
    row[b.len()] as usize
}

/// Advances a bit-parallel LCS row by one letter whose match mask is `mask`.
#[inline]
pub(crate) fn advance_row(src: &[u64], mask: &[u64], dst: &mut [u64]) {
    let mut carry = 0u64;
    for i in 0..src.len() {
        let v = src[i];
        let u = v & mask[i];
        let (s1, c1) = v.overflowing_add(u);
        let (s2, c2) = s1.overflowing_add(carry);
        carry = (c1 | c2) as u64;
        dst[i] = s2 | (v & !u);
    }
}

#[inline]
pub(crate) fn advance_in_place(v: &mut [u64], mask: &[u64]) {
    let mut carry = 0u64;
    for i in 0..v.len() {
        let x = v[i];
        let u = x & mask[i];
        let (s1, c1) = x.overflowing_add(u);
        let (s2, c2) = s1.overflowing_add(carry);
        carry = (c1 | c2) as u64;
        v[i] = s2 | (x & !u);
    }
}

/// Number of clear bits among the low `cols` bits of `row`, i.e. the LCS of
/// the processed letters against the first `cols` column letters.
#[inline]
pub(crate) fn zeros_in_prefix(row: &[u64], cols: usize) -> usize {
    let full = cols / 64;
    let mut ones: usize = row[..full].iter().map(|w| w.count_ones() as usize).sum();
    let rest = cols % 64;
    if rest != 0 {
        ones += (row[full] & ((1u64 << rest) - 1)).count_ones() as usize;
    }
    cols - ones
}

/// Match masks of a binary column string, indexed by letter.
#[derive(Clone, Debug)]
pub(crate) struct ColumnMasks {
    masks: [Vec<u64>; 2],
    cols: usize,
}

impl ColumnMasks {
    pub(crate) fn new(col: &BinarySequence) -> Self {
        let cols = col.len();
        let words = cols.div_ceil(64).max(1);
        let mut ones = col.words().to_vec();
        ones.resize(words, 0);
        let mut zeros: Vec<u64> = ones.iter().map(|w| !w).collect();
        if cols % 64 != 0 {
            zeros[cols / 64] &= (1u64 << (cols % 64)) - 1;
        }
        if cols == 0 {
            zeros[0] = 0;
        }
        Self {
            masks: [zeros, ones],
            cols,
        }
    }

    #[inline]
    pub(crate) fn mask(&self, b: Bit) -> &[u64] {
        &self.masks[b.index()]
    }

    #[inline]
    pub(crate) fn words(&self) -> usize {
        self.masks[0].len()
    }

    #[inline]
    pub(crate) fn cols(&self) -> usize {
        self.cols
    }

    pub(crate) fn initial_row(&self) -> Vec<u64> {
        vec![u64::MAX; self.words()]
    }
}

/// Bit-parallel LCS of two binary strings; same result as [`lcs_length`].
pub fn lcs_bitparallel(a: &BinarySequence, b: &BinarySequence) -> usize {
    let (rows, cols) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if cols.is_empty() {
        return 0;
    }
    let masks = ColumnMasks::new(cols);
    let mut v = masks.initial_row();
    for bit in rows.iter() {
        advance_in_place(&mut v, masks.mask(bit));
    }
    zeros_in_prefix(&v, cols.len())
}

/// Which letter pairs may share an alignment column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PairingRule {
    /// Only identical letters are stacked; every other letter faces a gap.
    #[default]
    IdenticalOnly,
    /// Any two letters may be stacked and scored by the matrix.
    AnyPair,
}

/// Pair scores over `{0, 1, a}` plus a per-gap penalty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionMatrix {
    scores: [[Option<i64>; 3]; 3],
    pub gap: i64,
    pub pairing: PairingRule,
}

impl SubstitutionMatrix {
    /// An empty table; every pair must be set before use.
    pub fn empty(gap: i64) -> Self {
        Self {
            scores: [[None; 3]; 3],
            gap,
            pairing: PairingRule::default(),
        }
    }

    /// Identity scores over the whole alphabet with zero gap: reproduces LCS.
    pub fn identity() -> Self {
        let mut m = Self::empty(0);
        for x in Symbol3::ALL {
            for y in Symbol3::ALL {
                m.set(x, y, i64::from(x == y));
            }
        }
        m
    }

    /// A symmetric-or-not binary table `[[s00, s01], [s10, s11]]`.
    pub fn binary(table: [[i64; 2]; 2], gap: i64) -> Self {
        let mut m = Self::empty(gap);
        for (i, x) in [Symbol3::Zero, Symbol3::One].into_iter().enumerate() {
            for (j, y) in [Symbol3::Zero, Symbol3::One].into_iter().enumerate() {
                m.set(x, y, table[i][j]);
            }
        }
        m
    }

    pub fn set(&mut self, x: Symbol3, y: Symbol3, score: i64) -> &mut Self {
        self.scores[x.index()][y.index()] = Some(score);
        self
    }

    pub fn with_pairing(mut self, pairing: PairingRule) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn score(&self, x: Symbol3, y: Symbol3) -> Option<i64> {
        self.scores[x.index()][y.index()]
    }

    fn pair(&self, x: Symbol3, y: Symbol3) -> Option<i64> {
        match self.pairing {
            PairingRule::AnyPair => self.score(x, y),
            PairingRule::IdenticalOnly if x == y => self.score(x, y),
            PairingRule::IdenticalOnly => None,
        }
    }

    fn check_covers(&self, a: &[u8], b: &[u8]) -> Result<()> {
        let seen = |s: &[u8]| {
            let mut f = [false; 3];
            for &c in s {
                f[c as usize] = true;
            }
            f
        };
        let (fa, fb) = (seen(a), seen(b));
        for x in Symbol3::ALL {
            for y in Symbol3::ALL {
                // Identical-only pairing still needs a diagonal entry for
                // every letter seen on either side.
                let needed = match self.pairing {
                    PairingRule::AnyPair => fa[x.index()] && fb[y.index()],
                    PairingRule::IdenticalOnly => x == y && (fa[x.index()] || fb[x.index()]),
                };
                if needed && self.score(x, y).is_none() {
                    return Err(Error::UncoveredLetter(x.to_char(), y.to_char()));
                }
            }
        }
        Ok(())
    }
}

/// Best global alignment score: pair scores plus `gap` for every letter
/// facing a gap.
pub fn align_score<A: Letters + ?Sized, B: Letters + ?Sized>(
    a: &A,
    b: &B,
    m: &SubstitutionMatrix,
) -> Result<i64> {
    let (a, b) = (codes(a), codes(b));
    m.check_covers(&a, &b)?;
    let sym = |c: u8| Symbol3::ALL[c as usize];
    let mut row: Vec<i64> = (0..=b.len() as i64).map(|j| j * m.gap).collect();
    for (i, &x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = (i as i64 + 1) * m.gap;
        for j in 1..=b.len() {
            let up = row[j];
            let mut best = (up + m.gap).max(row[j - 1] + m.gap);
            if let Some(s) = m.pair(sym(x), sym(b[j - 1])) {
                best = best.max(diag + s);
            }
            row[j] = best;
            diag = up;
        }
    }
    Ok(row[b.len()])
}

/// `values[k] = L_l(k)`, the LCS of `Z^k` against the first `y_length`
/// letters of `Y`, for `k = 0..=K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreCurve {
    pub values: Vec<u32>,
    pub y_length: usize,
}

impl ScoreCurve {
    pub fn max_k(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn get(&self, k: usize) -> u32 {
        self.values[k]
    }

    /// Non-decreasing with unit steps and bounded by `min(k, y_length)`.
    pub fn is_well_formed(&self) -> bool {
        self.values.first().is_none_or(|&v| v == 0)
            && self.values.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1)
            && self
                .values
                .iter()
                .enumerate()
                .all(|(k, &v)| v as usize <= k.min(self.y_length))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([k.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Bit-parallel LCS rows of a growing row string against a fixed binary
/// column string, supporting insertion at any position.
///
/// Row `r` is the state after the first `r` letters. An insertion at
/// position `t` keeps rows `0..=t`, computes the new row `t + 1`, then replays
/// later rows until one coincides with the old row it replaces; from there on
/// every row is unchanged.
#[derive(Clone, Debug)]
pub struct IncrementalLcs {
    masks: ColumnMasks,
    z: Vec<Bit>,
    rows: Vec<u64>,
    verify: bool,
    fallbacks: usize,
}

impl IncrementalLcs {
    pub fn new(columns: &BinarySequence) -> Self {
        let masks = ColumnMasks::new(columns);
        let rows = masks.initial_row();
        Self {
            masks,
            z: Vec::new(),
            rows,
            verify: false,
            fallbacks: 0,
        }
    }

    pub fn with_rows(columns: &BinarySequence, z: &[Bit]) -> Self {
        let mut inc = Self::new(columns);
        for &b in z {
            inc.push(b);
        }
        inc
    }

    /// Cross-check every insertion against a full recompute; on mismatch the
    /// recomputed rows replace the incremental ones and the fallback counter
    /// is bumped.
    pub fn set_verify(&mut self, verify: bool) {
        self.verify = verify;
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    #[inline]
    fn w(&self) -> usize {
        self.masks.words()
    }

    pub fn columns(&self) -> usize {
        self.masks.cols()
    }

    pub fn z(&self) -> &[Bit] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn row(&self, r: usize) -> &[u64] {
        let w = self.w();
        &self.rows[r * w..(r + 1) * w]
    }

    pub fn push(&mut self, bit: Bit) {
        self.insert(self.z.len(), bit);
    }

    /// Inserts `bit` at 0-based position `pos` of the row string.
    pub fn insert(&mut self, pos: usize, bit: Bit) {
        assert!(pos <= self.z.len());
        let w = self.w();
        self.z.insert(pos, bit);
        let mut fresh = vec![0u64; w];
        advance_row(self.row(pos), self.masks.mask(bit), &mut fresh);
        let at = (pos + 1) * w;
        self.rows.splice(at..at, fresh);
        let mut scratch = vec![0u64; w];
        for r in pos + 2..=self.z.len() {
            advance_row(self.row(r - 1), self.masks.mask(self.z[r - 1]), &mut scratch);
            let slot = &mut self.rows[r * w..(r + 1) * w];
            if *slot == scratch[..] {
                break;
            }
            slot.copy_from_slice(&scratch);
        }
        if self.verify {
            let full = self.recompute();
            if full != self.rows {
                self.rows = full;
                self.fallbacks += 1;
            }
        }
    }

    fn recompute(&self) -> Vec<u64> {
        let w = self.w();
        let mut rows = Vec::with_capacity((self.z.len() + 1) * w);
        let mut v = self.masks.initial_row();
        rows.extend_from_slice(&v);
        for &b in &self.z {
            advance_in_place(&mut v, self.masks.mask(b));
            rows.extend_from_slice(&v);
        }
        rows
    }

    /// LCS of the whole row string against all columns.
    pub fn lcs(&self) -> usize {
        self.lcs_prefix(self.columns())
    }

    /// LCS of the whole row string against the first `cols` columns.
    pub fn lcs_prefix(&self, cols: usize) -> usize {
        zeros_in_prefix(self.row(self.z.len()), cols.min(self.columns()))
    }

    /// LCS of the first `r` row letters against the first `cols` columns.
    pub fn lcs_at(&self, r: usize, cols: usize) -> usize {
        zeros_in_prefix(self.row(r), cols.min(self.columns()))
    }

    /// LCS after hypothetically inserting `bit` at `pos`, without mutating.
    pub fn lcs_if_inserted(&self, pos: usize, bit: Bit) -> usize {
        let mut v = self.row(pos).to_vec();
        advance_in_place(&mut v, self.masks.mask(bit));
        for &b in &self.z[pos..] {
            advance_in_place(&mut v, self.masks.mask(b));
        }
        zeros_in_prefix(&v, self.columns())
    }
}

/// The curve `k -> L_l(k)` along a recorded drop history, `k = 0..=state.k()`.
pub fn lcs_prefix_curve(history: &DropState, y: &BinarySequence, l: usize) -> Result<ScoreCurve> {
    if l > y.len() {
        return Err(Error::OutOfRange {
            what: "l",
            value: l as i64,
            range: format!("0..={}", y.len()),
        });
    }
    let mut inc = IncrementalLcs::new(&y.prefix(l));
    let (v1, v2) = history.initial_bits();
    let mut values = Vec::with_capacity(history.k() + 1);
    values.push(0);
    inc.push(v1);
    values.push(inc.lcs() as u32);
    inc.push(v2);
    values.push(inc.lcs() as u32);
    for ins in history.history() {
        inc.insert(ins.position - 1, ins.bit);
        values.push(inc.lcs() as u32);
    }
    Ok(ScoreCurve { values, y_length: l })
}
