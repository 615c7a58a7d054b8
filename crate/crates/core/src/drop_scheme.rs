//! The bit-drop construction of `Z^2, Z^3, ...` and the coupling that reads
//! `L_n` off the curve `k -> L^a(k)` at `k = n - N^a`.
//!
//! `Z^2 = V_1 V_2`; `Z^{k+1}` is `Z^k` with a fresh fair bit `V_{k+1}` placed
//! at 1-based position `T_{k+1}`: letters before `T_{k+1}` stay put, letters
//! from `T_{k+1}` on shift right by one.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lcs::{IncrementalLcs, ScoreCurve};
use crate::rope::BitRope;
use crate::sequences::{check_probability, labels, BinarySequence, Bit, RngStream};

/// Law of the insertion position `T_{k+1}` for a string of length `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InsertionMode {
    /// Uniform over `{2, ..., k}`: the `k - 1` interior gaps. The first and
    /// last letters of `Z^2` are never displaced from the ends.
    #[default]
    PaperInterior,
    /// Uniform over `{1, ..., k + 1}`: every gap including both ends.
    FullUniform,
}

impl InsertionMode {
    /// Inclusive range of legal 1-based positions when growing from length `k`.
    pub fn slots(self, k: usize) -> (usize, usize) {
        match self {
            InsertionMode::PaperInterior => (2, k),
            InsertionMode::FullUniform => (1, k + 1),
        }
    }

    pub fn slot_count(self, k: usize) -> usize {
        let (lo, hi) = self.slots(k);
        hi + 1 - lo
    }

    pub fn name(self) -> &'static str {
        match self {
            InsertionMode::PaperInterior => "paper-interior",
            InsertionMode::FullUniform => "full-uniform",
        }
    }
}

impl std::str::FromStr for InsertionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-interior" => Ok(InsertionMode::PaperInterior),
            "full-uniform" => Ok(InsertionMode::FullUniform),
            other => Err(Error::Config(format!("unknown insertion mode {other:?}"))),
        }
    }
}

/// One recorded drop: `V_j` placed at 1-based position `T_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Insertion {
    pub position: usize,
    pub bit: Bit,
}

#[derive(Clone, Debug)]
pub struct DropState {
    current: BitRope,
    initial: (Bit, Bit),
    history: Vec<Insertion>,
    mode: InsertionMode,
}

impl DropState {
    /// `Z^2 = V_1 V_2` from two fair coins.
    pub fn init<R: Rng + ?Sized>(rng: &mut R, mode: InsertionMode) -> Self {
        let v1 = Bit::from_bool(rng.random());
        let v2 = Bit::from_bool(rng.random());
        Self::from_initial(v1, v2, mode)
    }

    pub fn from_initial(v1: Bit, v2: Bit, mode: InsertionMode) -> Self {
        Self {
            current: BitRope::from_bits(&[v1, v2]),
            initial: (v1, v2),
            history: Vec::new(),
            mode,
        }
    }

    /// Rebuilds a state from `V_1`, `V_2` and the recorded drops.
    pub fn replay(v1: Bit, v2: Bit, history: &[Insertion], mode: InsertionMode) -> Result<Self> {
        let mut s = Self::from_initial(v1, v2, mode);
        for ins in history {
            s.step_forced(ins.position, ins.bit)?;
        }
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.current.len()
    }

    pub fn mode(&self) -> InsertionMode {
        self.mode
    }

    pub fn initial_bits(&self) -> (Bit, Bit) {
        self.initial
    }

    /// Drops for `j = 3..=k`.
    pub fn history(&self) -> &[Insertion] {
        &self.history
    }

    pub fn current(&self) -> BinarySequence {
        self.current.to_sequence()
    }

    pub fn get(&self, i: usize) -> Bit {
        self.current.get(i)
    }

    /// Draws `T_{k+1}` and then `V_{k+1}`, and applies the drop.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Insertion {
        let (lo, hi) = self.mode.slots(self.k());
        let position = rng.random_range(lo..=hi);
        let bit = Bit::from_bool(rng.random());
        self.apply(Insertion { position, bit });
        Insertion { position, bit }
    }

    /// Applies a drop chosen by the caller after checking it is legal.
    pub fn step_forced(&mut self, position: usize, bit: Bit) -> Result<()> {
        let (lo, hi) = self.mode.slots(self.k());
        if position < lo || position > hi {
            return Err(Error::IllegalInsertion {
                pos: position,
                len: self.k(),
                mode: self.mode.name(),
            });
        }
        self.apply(Insertion { position, bit });
        Ok(())
    }

    fn apply(&mut self, ins: Insertion) {
        self.current.insert(ins.position - 1, ins.bit);
        self.history.push(ins);
    }

    /// `Z^k` for any `k <= self.k()`, rebuilt from the history. `Z^1 = V_1`
    /// and `Z^0` is empty.
    pub fn prefix_state(&self, k: usize) -> Result<BinarySequence> {
        if k > self.k() {
            return Err(Error::OutOfRange {
                what: "k",
                value: k as i64,
                range: format!("0..={}", self.k()),
            });
        }
        Ok(match k {
            0 => BinarySequence::new(),
            1 => BinarySequence::from_bits([self.initial.0]),
            _ => {
                let mut rope = BitRope::from_bits(&[self.initial.0, self.initial.1]);
                for ins in &self.history[..k - 2] {
                    rope.insert(ins.position - 1, ins.bit);
                }
                rope.to_sequence()
            }
        })
    }

    /// CSV rows `j,T_j,V_j`; rows 1 and 2 carry `V_1`, `V_2` with empty `T`.
    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "T_j", "V_j"])?;
        w.write_record(["1", "", &bit_str(self.initial.0)])?;
        w.write_record(["2", "", &bit_str(self.initial.1)])?;
        for (i, ins) in self.history.iter().enumerate() {
            w.write_record([(i + 3).to_string(), ins.position.to_string(), bit_str(ins.bit)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_history_csv<R: Read>(input: R, mode: InsertionMode) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["j", "T_j", "V_j"] {
            return Err(Error::History(format!("unexpected header {headers:?}")));
        }
        let mut bits = Vec::new();
        let mut drops = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
            let j: usize = field(0)
                .parse()
                .map_err(|_| Error::History(format!("row {}: bad j", row + 1)))?;
            if j != row + 1 {
                return Err(Error::History(format!("row {}: expected j = {}", row + 1, row + 1)));
            }
            let bit = match field(2).as_str() {
                "0" => Bit::Zero,
                "1" => Bit::One,
                other => return Err(Error::History(format!("row {j}: bad bit {other:?}"))),
            };
            if j <= 2 {
                if !field(1).is_empty() {
                    return Err(Error::History(format!("row {j}: initial bits carry no position")));
                }
                bits.push(bit);
            } else {
                let position = field(1)
                    .parse()
                    .map_err(|_| Error::History(format!("row {j}: bad position")))?;
                drops.push(Insertion { position, bit });
            }
        }
        if bits.len() != 2 {
            return Err(Error::History("missing V_1/V_2 rows".into()));
        }
        Self::replay(bits[0], bits[1], &drops, mode)
    }
}

fn bit_str(b: Bit) -> String {
    (b as u8).to_string()
}

/// A drop-scheme run that tracks `k -> L_l(k)` against a fixed `Y` prefix.
#[derive(Clone, Debug)]
pub struct CurveRun {
    pub state: DropState,
    pub engine: IncrementalLcs,
    values: Vec<u32>,
}

impl CurveRun {
    /// Starts at `k = 2`, recording `L(0)`, `L(1)` and `L(2)`.
    pub fn start<R: Rng + ?Sized>(columns: &BinarySequence, mode: InsertionMode, rng: &mut R) -> Self {
        let state = DropState::init(rng, mode);
        let (v1, v2) = state.initial_bits();
        let mut engine = IncrementalLcs::new(columns);
        let mut values = vec![0];
        engine.push(v1);
        values.push(engine.lcs() as u32);
        engine.push(v2);
        values.push(engine.lcs() as u32);
        Self { state, engine, values }
    }

    pub fn k(&self) -> usize {
        self.state.k()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Insertion {
        let ins = self.state.step(rng);
        self.engine.insert(ins.position - 1, ins.bit);
        self.values.push(self.engine.lcs() as u32);
        ins
    }

    pub fn grow_to<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) {
        while self.k() < k {
            self.step(rng);
        }
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn curve(&self) -> ScoreCurve {
        ScoreCurve {
            values: self.values.clone(),
            y_length: self.engine.columns(),
        }
    }
}

/// One coupled draw of `L_n`.
#[derive(Clone, Debug)]
pub struct CoupledSample {
    /// `L^a(n - N^a)`.
    pub ln: usize,
    pub na: usize,
    /// `k -> L^a_n(k)` for `k = 0..=n`.
    pub curve: ScoreCurve,
}

/// Draws `N^a ~ Binomial(n, p)` first, then grows `Z` to length `n` against
/// an independent fair `Y` of length `n`, and reads `L^a(n - N^a)`.
pub fn simulate_ln_coupled(n: usize, p: f64, stream: RngStream, mode: InsertionMode) -> Result<CoupledSample> {
    check_probability(p)?;
    let binom = Binomial::new(n as u64, p).map_err(|e| Error::Config(e.to_string()))?;
    let na = binom.sample(&mut stream.fork(labels::NA).rng()) as usize;
    simulate_ln_coupled_with_na(n, na, stream, mode)
}

/// [`simulate_ln_coupled`] with `N^a` fixed by the caller.
pub fn simulate_ln_coupled_with_na(
    n: usize,
    na: usize,
    stream: RngStream,
    mode: InsertionMode,
) -> Result<CoupledSample> {
    if n == 0 {
        return Err(Error::InvalidLength { min: 1, got: 0 });
    }
    if na > n {
        return Err(Error::OutOfRange {
            what: "N^a",
            value: na as i64,
            range: format!("0..={n}"),
        });
    }
    let y = BinarySequence::random(n, &mut stream.fork(labels::Y).rng());
    let mut rng = stream.fork(labels::DROP).rng();
    let mut run = CurveRun::start(&y, mode, &mut rng);
    run.grow_to(n, &mut rng);
    let mut curve = run.curve();
    curve.values.truncate(n + 1);
    Ok(CoupledSample {
        ln: curve.values[n - na] as usize,
        na,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcs::{lcs_length, lcs_prefix_curve};
    use proptest::prelude::*;

    fn bs(s: &str) -> BinarySequence {
        s.parse().unwrap()
    }

    fn state_from(s: &str, mode: InsertionMode) -> DropState {
        let bits: Vec<Bit> = bs(s).to_vec();
        let mut st = DropState::from_initial(bits[0], *bits.last().unwrap(), mode);
        // Rebuild the middle letters with legal interior drops.
        for (i, &b) in bits[1..bits.len() - 1].iter().enumerate() {
            st.step_forced(i + 2, b).unwrap();
        }
        assert_eq!(st.current().to_string(), s);
        st
    }

    #[test]
    fn worked_drop_example() {
        // 00010 with the new 1 in the second interior gap gives 001010.
        let mut st = state_from("00010", InsertionMode::PaperInterior);
        st.step_forced(3, Bit::One).unwrap();
        assert_eq!(st.current().to_string(), "001010");
    }

    #[test]
    fn paper_interior_slot_range() {
        let mut st = state_from("00010", InsertionMode::PaperInterior);
        assert_eq!(InsertionMode::PaperInterior.slot_count(5), 4);
        assert!(st.step_forced(1, Bit::One).is_err());
        assert!(st.step_forced(6, Bit::One).is_err());
        assert!(st.step_forced(5, Bit::One).is_ok());
        let mut full = state_from("00010", InsertionMode::FullUniform);
        assert!(full.step_forced(1, Bit::One).is_ok());
        assert!(full.step_forced(7, Bit::One).is_ok());
        assert_eq!(full.current().to_string(), "1000101");
    }

    #[test]
    fn same_bit_insert_keeps_letter_counts() {
        let mut st = state_from("0110", InsertionMode::PaperInterior);
        let before = st.current();
        st.step_forced(2, before.get(1)).unwrap();
        let after = st.current();
        assert_eq!(after.len(), 5);
        assert_eq!(after.count_ones(), before.count_ones() + 1);
        assert_eq!(after.to_string(), "01110");
    }

    #[test]
    fn init_is_deterministic_with_empty_history() {
        let s = RngStream::new(3, 3);
        let a = DropState::init(&mut s.rng(), InsertionMode::PaperInterior);
        let b = DropState::init(&mut s.rng(), InsertionMode::PaperInterior);
        assert_eq!(a.current(), b.current());
        assert!(a.history().is_empty());
        assert_eq!(a.k(), 2);
    }

    #[test]
    fn worked_curve_value() {
        // Z^6 = 101011 against Y = 111000111 has L(6) = 5.
        let st = state_from("101011", InsertionMode::PaperInterior);
        let curve = lcs_prefix_curve(&st, &bs("111000111"), 9).unwrap();
        assert_eq!(curve.get(6), 5);
        assert!(curve.is_well_formed());
        assert!(lcs_prefix_curve(&st, &bs("111000111"), 10).is_err());
    }

    #[test]
    fn curve_endpoint_matches_full_dp() {
        let s = RngStream::new(10, 0);
        let mut rng = s.rng();
        let y = BinarySequence::random(200, &mut rng);
        let mut st = DropState::init(&mut rng, InsertionMode::PaperInterior);
        while st.k() < 200 {
            st.step(&mut rng);
        }
        let curve = lcs_prefix_curve(&st, &y, 150).unwrap();
        assert_eq!(curve.get(200) as usize, lcs_length(&st.current(), &y.prefix(150)));
        for k in [0, 1, 2, 17, 99, 150] {
            let zk = st.prefix_state(k).unwrap();
            assert_eq!(curve.get(k) as usize, lcs_length(&zk, &y.prefix(150)));
        }
        assert!(curve.is_well_formed());
    }

    #[test]
    fn zero_na_reads_the_endpoint() {
        let s = RngStream::new(99, 5);
        let out = simulate_ln_coupled_with_na(60, 0, s, InsertionMode::PaperInterior).unwrap();
        let y = BinarySequence::random(60, &mut s.fork(labels::Y).rng());
        let mut rng = s.fork(labels::DROP).rng();
        let mut st = DropState::init(&mut rng, InsertionMode::PaperInterior);
        while st.k() < 60 {
            st.step(&mut rng);
        }
        assert_eq!(out.ln, lcs_length(&st.current(), &y));
        assert_eq!(out.curve.values.len(), 61);
    }

    #[test]
    fn coupled_bookkeeping() {
        for r in 0..50 {
            let out = simulate_ln_coupled(40, 0.3, RngStream::new(1, r), InsertionMode::FullUniform).unwrap();
            assert_eq!(out.ln, out.curve.get(40 - out.na) as usize);
        }
        assert!(simulate_ln_coupled(10, 1.5, RngStream::new(1, 0), InsertionMode::FullUniform).is_err());
        assert!(simulate_ln_coupled_with_na(10, 11, RngStream::new(1, 0), InsertionMode::FullUniform).is_err());
    }

    #[test]
    fn small_k_law_is_uniform() {
        // Z^4 over 1e5 runs in each mode: chi-square against 1/16 per cell.
        for mode in [InsertionMode::PaperInterior, InsertionMode::FullUniform] {
            let mut counts = [0u64; 16];
            let mut rng = RngStream::new(8, mode as u64).rng();
            for _ in 0..100_000 {
                let mut st = DropState::init(&mut rng, mode);
                st.step(&mut rng);
                st.step(&mut rng);
                let z = st.current();
                let idx = z.iter().fold(0usize, |acc, b| acc * 2 + b.index());
                counts[idx] += 1;
            }
            let expected = [100_000.0 / 16.0; 16];
            assert!(crate::stats::chi_square_pvalue(&counts, &expected) > 1e-3);
        }
    }

    #[test]
    fn history_csv_round_trip_and_errors() {
        let mut rng = RngStream::new(4, 4).rng();
        let mut st = DropState::init(&mut rng, InsertionMode::PaperInterior);
        for _ in 0..30 {
            st.step(&mut rng);
        }
        let mut buf = Vec::new();
        st.write_history_csv(&mut buf).unwrap();
        let back = DropState::read_history_csv(buf.as_slice(), InsertionMode::PaperInterior).unwrap();
        assert_eq!(back.current(), st.current());
        assert_eq!(back.history(), st.history());

        let bad = "j,T_j,V_j\n1,,0\n2,,1\n3,1,0\n";
        assert!(DropState::read_history_csv(bad.as_bytes(), InsertionMode::PaperInterior).is_err());
        assert!(DropState::read_history_csv(bad.as_bytes(), InsertionMode::FullUniform).is_ok());
        let short = "j,T_j,V_j\n1,,0\n";
        assert!(DropState::read_history_csv(short.as_bytes(), InsertionMode::FullUniform).is_err());
    }

    proptest! {
        #[test]
        fn replay_reproduces_every_prefix(seed in any::<u64>(), steps in 0usize..120, full in any::<bool>()) {
            let mode = if full { InsertionMode::FullUniform } else { InsertionMode::PaperInterior };
            let mut rng = RngStream::new(seed, 0).rng();
            let mut st = DropState::init(&mut rng, mode);
            let mut snapshots = vec![st.current()];
            for _ in 0..steps {
                st.step(&mut rng);
                snapshots.push(st.current());
            }
            let (v1, v2) = st.initial_bits();
            let replayed = DropState::replay(v1, v2, st.history(), mode).unwrap();
            prop_assert_eq!(replayed.current(), st.current());
            for (i, snap) in snapshots.iter().enumerate() {
                prop_assert_eq!(&st.prefix_state(i + 2).unwrap(), snap);
            }
            if mode == InsertionMode::PaperInterior {
                prop_assert_eq!(st.get(0), v1);
                prop_assert_eq!(st.get(st.k() - 1), v2);
            }
        }

        #[test]
        fn curve_increments_are_unit(seed in any::<u64>(), n in 2usize..150) {
            let out = simulate_ln_coupled(n, 0.4, RngStream::new(seed, 1), InsertionMode::PaperInterior).unwrap();
            prop_assert!(out.curve.is_well_formed());
        }
    }
}
