//! Dense fixed-width membership sets over item indices.

use std::fmt;

const WORD_BITS: usize = 64;

/// A subset of `{0, .., universe - 1}` stored as a packed bit vector.
///
/// All binary operations require both operands to share the same universe;
/// mixing universes is a programming error and panics.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MemberSet {
    words: Vec<u64>,
    universe: usize,
}

impl MemberSet {
    pub fn empty(universe: usize) -> Self {
        Self { words: vec![0; universe.div_ceil(WORD_BITS)], universe }
    }

    pub fn full(universe: usize) -> Self {
        let mut set = Self { words: vec![u64::MAX; universe.div_ceil(WORD_BITS)], universe };
        set.clear_tail();
        set
    }

    /// Builds a set from item indices; duplicates are ignored.
    ///
    /// Panics if any index is outside the universe.
    pub fn from_indices<I: IntoIterator<Item = usize>>(universe: usize, indices: I) -> Self {
        let mut set = Self::empty(universe);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn from_bools(flags: &[bool]) -> Self {
        Self::from_indices(flags.len(), flags.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| i))
    }

    #[inline]
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, index: usize) {
        assert!(index < self.universe, "index {index} outside universe of {}", self.universe);
        self.words[index / WORD_BITS] |= 1 << (index % WORD_BITS);
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        index < self.universe && self.words[index / WORD_BITS] & (1 << (index % WORD_BITS)) != 0
    }

    /// Number of members.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &MemberSet) -> bool {
        self.check_universe(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersection(&self, other: &MemberSet) -> MemberSet {
        self.check_universe(other);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        MemberSet { words, universe: self.universe }
    }

    pub fn union(&self, other: &MemberSet) -> MemberSet {
        self.check_universe(other);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        MemberSet { words, universe: self.universe }
    }

    pub fn intersect_with(&mut self, other: &MemberSet) {
        self.check_universe(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &MemberSet) {
        self.check_universe(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// `|self ∩ other|` without materializing the intersection.
    pub fn intersection_count(&self, other: &MemberSet) -> usize {
        self.check_universe(other);
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Member indices in increasing order.
    pub fn iter(&self) -> Ones<'_> {
        Ones { words: &self.words, word_index: 0, current: self.words.first().copied().unwrap_or(0) }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.universe % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    fn check_universe(&self, other: &MemberSet) {
        assert_eq!(self.universe, other.universe, "member sets over different universes");
    }
}

impl fmt::Debug for MemberSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_index * WORD_BITS + bit);
            }
            self.word_index += 1;
            self.current = *self.words.get(self.word_index)?;
        }
    }
}
