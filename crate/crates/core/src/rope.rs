//! A chunked bit rope with logarithmic position lookup.
//!
//! Leaves hold at most `MAX_LEAF` letters. A Fenwick tree over leaf lengths
//! locates the leaf for a position in `O(log #leaves)`; the insert itself
//! touches one leaf. A leaf split rebuilds the Fenwick tree, which happens
//! once every `MAX_LEAF / 2` inserts into that leaf.

use crate::sequences::{BinarySequence, Bit};

const MAX_LEAF: usize = 1024;

#[derive(Clone, Debug, Default)]
pub struct BitRope {
    leaves: Vec<Vec<Bit>>,
    fenwick: Vec<usize>,
    len: usize,
}

impl BitRope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: &[Bit]) -> Self {
        let leaves: Vec<Vec<Bit>> = bits.chunks(MAX_LEAF / 2).map(<[Bit]>::to_vec).collect();
        let mut rope = Self {
            leaves,
            fenwick: Vec::new(),
            len: bits.len(),
        };
        rope.rebuild();
        rope
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn rebuild(&mut self) {
        let n = self.leaves.len();
        self.fenwick = vec![0; n + 1];
        for i in 0..n {
            self.fenwick[i + 1] += self.leaves[i].len();
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                self.fenwick[parent] += self.fenwick[i + 1];
            }
        }
    }

    fn fenwick_add(&mut self, leaf: usize, delta: usize) {
        let mut i = leaf + 1;
        while i < self.fenwick.len() {
            self.fenwick[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Leaf holding position `pos` (`pos < len`) and the offset inside it.
    fn locate(&self, mut pos: usize) -> (usize, usize) {
        let n = self.leaves.len();
        let mut idx = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = idx + step;
            if next <= n && self.fenwick[next] <= pos {
                idx = next;
                pos -= self.fenwick[next];
            }
            step >>= 1;
        }
        (idx, pos)
    }

    /// Inserts `bit` so that it ends up at 0-based position `pos` (`pos <= len`).
    pub fn insert(&mut self, pos: usize, bit: Bit) {
        assert!(pos <= self.len, "insert position {pos} beyond length {}", self.len);
        if self.leaves.is_empty() {
            self.leaves.push(vec![bit]);
            self.len = 1;
            self.rebuild();
            return;
        }
        let (leaf, off) = if pos == self.len {
            let last = self.leaves.len() - 1;
            (last, self.leaves[last].len())
        } else {
            self.locate(pos)
        };
        self.leaves[leaf].insert(off, bit);
        self.len += 1;
        if self.leaves[leaf].len() > MAX_LEAF {
            let tail = self.leaves[leaf].split_off(MAX_LEAF / 2);
            self.leaves.insert(leaf + 1, tail);
            self.rebuild();
        } else {
            self.fenwick_add(leaf, 1);
        }
    }

    pub fn get(&self, pos: usize) -> Bit {
        assert!(pos < self.len, "index {pos} out of range for length {}", self.len);
        let (leaf, off) = self.locate(pos);
        self.leaves[leaf][off]
    }

    pub fn iter(&self) -> impl Iterator<Item = Bit> + '_ {
        self.leaves.iter().flatten().copied()
    }

    pub fn to_vec(&self) -> Vec<Bit> {
        self.iter().collect()
    }

    pub fn to_sequence(&self) -> BinarySequence {
        BinarySequence::from_bits(self.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_vec_model(ops in prop::collection::vec((0usize..10_000, any::<bool>()), 1..3000)) {
            let mut rope = BitRope::new();
            let mut model: Vec<Bit> = Vec::new();
            for (raw, b) in ops {
                let pos = raw % (model.len() + 1);
                rope.insert(pos, Bit::from_bool(b));
                model.insert(pos, Bit::from_bool(b));
            }
            prop_assert_eq!(rope.len(), model.len());
            prop_assert_eq!(rope.to_vec(), model.clone());
            for (i, b) in model.iter().enumerate().step_by(37) {
                prop_assert_eq!(rope.get(i), *b);
            }
        }
    }

    #[test]
    fn many_front_inserts_split_leaves() {
        let mut rope = BitRope::from_bits(&[Bit::One; 5]);
        for _ in 0..5000 {
            rope.insert(1, Bit::Zero);
        }
        assert_eq!(rope.len(), 5005);
        assert_eq!(rope.get(0), Bit::One);
        assert_eq!(rope.get(5000), Bit::Zero);
        assert_eq!(rope.get(5001), Bit::One);
        assert!(rope.leaves.len() > 5);
    }
}
