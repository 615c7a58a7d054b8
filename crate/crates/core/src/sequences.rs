//! Alphabets, packed sequence containers and seeded random generation.
//!
//! `X` letters live in `{0, 1, a}` and are packed two bits per symbol;
//! binary strings (`Y`, `X^{01}`, the drop-scheme strings `Z^k`) are packed
//! one bit per symbol. Both containers are immutable once built and
//! serialize to plain text (`'0'`, `'1'`, `'a'`) and to a length-prefixed
//! binary layout.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Bit {
    Zero = 0,
    One = 1,
}

impl Bit {
    #[inline]
    pub fn from_bool(b: bool) -> Self {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn flip(self) -> Self {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Bit::Zero => '0',
            Bit::One => '1',
        }
    }

    pub fn from_char(ch: char) -> Option<Self> {
        match ch {
            '0' => Some(Bit::Zero),
            '1' => Some(Bit::One),
            _ => None,
        }
    }
}

/// A letter of the three-letter alphabet `{0, 1, a}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Symbol3 {
    Zero = 0,
    One = 1,
    A = 2,
}

impl Symbol3 {
    pub const ALL: [Symbol3; 3] = [Symbol3::Zero, Symbol3::One, Symbol3::A];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// The binary letter this symbol embeds to, `None` for `a`.
    #[inline]
    pub fn as_bit(self) -> Option<Bit> {
        match self {
            Symbol3::Zero => Some(Bit::Zero),
            Symbol3::One => Some(Bit::One),
            Symbol3::A => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Symbol3::Zero => '0',
            Symbol3::One => '1',
            Symbol3::A => 'a',
        }
    }

    pub fn from_char(ch: char) -> Option<Self> {
        match ch {
            '0' => Some(Symbol3::Zero),
            '1' => Some(Symbol3::One),
            'a' => Some(Symbol3::A),
            _ => None,
        }
    }

    fn from_code(code: u64) -> Self {
        match code {
            0 => Symbol3::Zero,
            1 => Symbol3::One,
            _ => Symbol3::A,
        }
    }
}

impl From<Bit> for Symbol3 {
    fn from(b: Bit) -> Self {
        match b {
            Bit::Zero => Symbol3::Zero,
            Bit::One => Symbol3::One,
        }
    }
}

/// Read-only letter access shared by both sequence kinds.
pub trait Letters {
    fn len(&self) -> usize;
    fn symbol(&self, i: usize) -> Symbol3;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const TAG_BINARY: u8 = b'B';
const TAG_TRI: u8 = b'T';

/// A packed binary string, one bit per letter, least significant bit first.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BinarySequence {
    words: Vec<u64>,
    len: usize,
}

impl BinarySequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits<I: IntoIterator<Item = Bit>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// Builds a sequence from packed words; bits beyond `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Result<Self> {
        let need = len.div_ceil(64);
        if words.len() < need {
            return Err(Error::Decode(format!(
                "{} words cannot hold {} bits",
                words.len(),
                len
            )));
        }
        words.truncate(need);
        if len % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        Ok(Self { words, len })
    }

    /// `len` independent fair bits.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let words = (0..len.div_ceil(64)).map(|_| rng.random::<u64>()).collect();
        Self::from_words(words, len).expect("word count matches length")
    }

    pub fn push(&mut self, b: Bit) {
        let (w, o) = (self.len / 64, self.len % 64);
        if o == 0 {
            self.words.push(0);
        }
        self.words[w] |= (b as u64) << o;
        self.len += 1;
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Letter at 0-based position `i`.
    #[inline]
    pub fn get(&self, i: usize) -> Bit {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        Bit::from_bool((self.words[i / 64] >> (i % 64)) & 1 == 1)
    }

    /// Packed words; bit `i` of the sequence is bit `i % 64` of word `i / 64`.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Bit> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_vec(&self) -> Vec<Bit> {
        self.iter().collect()
    }

    /// The first `l` letters.
    pub fn prefix(&self, l: usize) -> Self {
        let l = l.min(self.len);
        Self::from_words(self.words[..l.div_ceil(64)].to_vec(), l).expect("prefix fits")
    }

    pub fn reversed(&self) -> Self {
        Self::from_bits((0..self.len).rev().map(|i| self.get(i)))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Length-prefixed binary layout: tag `b'B'`, little-endian `u64` length,
    /// then the packed words in little-endian order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + 8 * self.words.len());
        out.push(TAG_BINARY);
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (len, body) = read_header(bytes, TAG_BINARY)?;
        let words = read_words(body, len.div_ceil(64))?;
        let s = Self::from_words(words.clone(), len)?;
        if s.words != words {
            return Err(Error::Decode("set bits beyond the declared length".into()));
        }
        Ok(s)
    }
}

impl Letters for BinarySequence {
    fn len(&self) -> usize {
        self.len
    }

    fn symbol(&self, i: usize) -> Symbol3 {
        self.get(i).into()
    }
}

impl fmt::Display for BinarySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(Bit::to_char).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BinarySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinarySequence({self})")
    }
}

impl FromStr for BinarySequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Self::new();
        for (pos, ch) in s.trim().chars().enumerate() {
            out.push(Bit::from_char(ch).ok_or(Error::ParseSymbol { ch, pos })?);
        }
        Ok(out)
    }
}

/// A packed string over `{0, 1, a}`, two bits per letter.
#[derive(Clone, PartialEq, Default)]
pub struct TriSequence {
    words: Vec<u64>,
    len: usize,
    /// Probability of `a` used at generation time, when known.
    p: Option<f64>,
}

impl TriSequence {
    pub fn from_symbols<I: IntoIterator<Item = Symbol3>>(symbols: I) -> Self {
        let mut s = Self::default();
        for x in symbols {
            s.push(x);
        }
        s
    }

    fn push(&mut self, x: Symbol3) {
        let (w, o) = (self.len / 32, 2 * (self.len % 32));
        if o == 0 {
            self.words.push(0);
        }
        self.words[w] |= (x as u64) << o;
        self.len += 1;
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> Symbol3 {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        Symbol3::from_code((self.words[i / 32] >> (2 * (i % 32))) & 3)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Symbol3> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Layout: tag `b'T'`, `u64` length, `f64` generation probability
    /// (NaN when unknown), then packed words, all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(17 + 8 * self.words.len());
        out.push(TAG_TRI);
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        out.extend_from_slice(&self.p.unwrap_or(f64::NAN).to_bits().to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (len, body) = read_header(bytes, TAG_TRI)?;
        if body.len() < 8 {
            return Err(Error::Decode("missing probability field".into()));
        }
        let p = f64::from_bits(u64::from_le_bytes(body[..8].try_into().unwrap()));
        let words = read_words(&body[8..], len.div_ceil(32))?;
        let s = Self {
            words,
            len,
            p: if p.is_nan() { None } else { Some(p) },
        };
        // Reject stray codes: the reserved value 3 and bits past the end.
        for (wi, w) in s.words.iter().enumerate() {
            for slot in 0..32 {
                let code = (w >> (2 * slot)) & 3;
                let idx = wi * 32 + slot;
                if (idx >= len && code != 0) || code == 3 {
                    return Err(Error::Decode(format!("invalid symbol code at {idx}")));
                }
            }
        }
        Ok(s)
    }
}

impl Letters for TriSequence {
    fn len(&self) -> usize {
        self.len
    }

    fn symbol(&self, i: usize) -> Symbol3 {
        self.get(i)
    }
}

impl fmt::Display for TriSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(Symbol3::to_char).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for TriSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TriSequence({self})")
    }
}

impl FromStr for TriSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Self::default();
        for (pos, ch) in s.trim().chars().enumerate() {
            out.push(Symbol3::from_char(ch).ok_or(Error::ParseSymbol { ch, pos })?);
        }
        Ok(out)
    }
}

fn read_header(bytes: &[u8], tag: u8) -> Result<(usize, &[u8])> {
    if bytes.len() < 9 {
        return Err(Error::Decode("truncated header".into()));
    }
    if bytes[0] != tag {
        return Err(Error::Decode(format!("unexpected tag byte {:#04x}", bytes[0])));
    }
    let len = u64::from_le_bytes(bytes[1..9].try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| Error::Decode("length overflow".into()))?;
    Ok((len, &bytes[9..]))
}

fn read_words(body: &[u8], count: usize) -> Result<Vec<u64>> {
    if body.len() != 8 * count {
        return Err(Error::Decode(format!(
            "expected {} payload bytes, found {}",
            8 * count,
            body.len()
        )));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// A reproducible random stream identified by `(seed, stream_index)`.
///
/// Backed by ChaCha8 with the stream index mapped onto ChaCha's 64-bit stream
/// counter, so replication `r` uses `stream_index = r` and can run on any
/// worker. [`RngStream::fork`] derives labelled sub-streams that are keyed
/// independently of the parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

/// Sub-stream labels used inside one replication.
pub mod labels {
    pub const X: u64 = 1;
    pub const Y: u64 = 2;
    pub const DROP: u64 = 3;
    pub const NA: u64 = 4;
    pub const REPLAY: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// A child stream with the same index and a key derived from `label`.
    pub fn fork(&self, label: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream_index: self.stream_index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Draws `X` (i.i.d. with `P(a) = p`, `P(0) = P(1) = (1-p)/2`) and `Y`
/// (i.i.d. fair bits) from independent sub-streams of `stream`.
pub fn generate_case1(n: usize, p: f64, stream: RngStream) -> Result<(TriSequence, BinarySequence)> {
    check_probability(p)?;
    if n == 0 {
        return Err(Error::InvalidLength { min: 1, got: 0 });
    }
    let x = random_tri(n, p, &mut stream.fork(labels::X).rng());
    let y = BinarySequence::random(n, &mut stream.fork(labels::Y).rng());
    Ok((x, y))
}

pub(crate) fn random_tri<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> TriSequence {
    TriSequence::from_symbols((0..n).map(|_| {
        if rng.random_bool(p) {
            Symbol3::A
        } else if rng.random::<bool>() {
            Symbol3::One
        } else {
            Symbol3::Zero
        }
    }))
    .with_p(p)
}

/// Removes the `a` letters, returning `X^{01}` and the number `N^a` removed.
pub fn strip_a(x: &TriSequence) -> (BinarySequence, usize) {
    let mut out = BinarySequence::new();
    let mut na = 0;
    for s in x.iter() {
        match s.as_bit() {
            Some(b) => out.push(b),
            None => na += 1,
        }
    }
    (out, na)
}
