//! Dense bit-indexed job sets.
//!
//! All inner loops of the solvers are set algebra over jobs `0..n`, so the
//! set is a fixed-width array of machine words with `Copy` semantics.

use std::fmt;

/// Hard capacity of a [`JobSet`]. Instances are rejected at graph
/// construction when they exceed it.
pub const MAX_JOBS: usize = 256;

const WORDS: usize = MAX_JOBS / 64;

/// A set of job IDs in `0..MAX_JOBS`, stored as a fixed-width bitset.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct JobSet {
    words: [u64; WORDS],
}

impl JobSet {
    pub const EMPTY: JobSet = JobSet { words: [0; WORDS] };

    #[inline]
    pub fn singleton(job: usize) -> JobSet {
        let mut s = JobSet::EMPTY;
        s.insert(job);
        s
    }

    /// The full set `{0, .., n-1}`.
    pub fn all_below(n: usize) -> JobSet {
        assert!(n <= MAX_JOBS);
        let mut s = JobSet::EMPTY;
        for w in 0..WORDS {
            let lo = w * 64;
            if n >= lo + 64 {
                s.words[w] = u64::MAX;
            } else if n > lo {
                s.words[w] = (1u64 << (n - lo)) - 1;
            }
        }
        s
    }

    #[inline]
    pub fn insert(&mut self, job: usize) {
        debug_assert!(job < MAX_JOBS);
        self.words[job / 64] |= 1u64 << (job % 64);
    }

    #[inline]
    pub fn remove(&mut self, job: usize) {
        debug_assert!(job < MAX_JOBS);
        self.words[job / 64] &= !(1u64 << (job % 64));
    }

    #[inline]
    pub fn contains(&self, job: usize) -> bool {
        debug_assert!(job < MAX_JOBS);
        self.words[job / 64] & (1u64 << (job % 64)) != 0
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn union(&self, other: &JobSet) -> JobSet {
        let mut out = *self;
        for w in 0..WORDS {
            out.words[w] |= other.words[w];
        }
        out
    }

    #[inline]
    pub fn intersect(&self, other: &JobSet) -> JobSet {
        let mut out = *self;
        for w in 0..WORDS {
            out.words[w] &= other.words[w];
        }
        out
    }

    /// Set difference `self \ other`.
    #[inline]
    pub fn minus(&self, other: &JobSet) -> JobSet {
        let mut out = *self;
        for w in 0..WORDS {
            out.words[w] &= !other.words[w];
        }
        out
    }

    #[inline]
    pub fn union_in_place(&mut self, other: &JobSet) {
        for w in 0..WORDS {
            self.words[w] |= other.words[w];
        }
    }

    #[inline]
    pub fn is_subset_of(&self, other: &JobSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    #[inline]
    pub fn is_disjoint(&self, other: &JobSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & b == 0)
    }

    #[inline]
    pub fn intersects(&self, other: &JobSet) -> bool {
        !self.is_disjoint(other)
    }

    /// Smallest member, if any.
    pub fn first(&self) -> Option<usize> {
        for (w, &word) in self.words.iter().enumerate() {
            if word != 0 {
                return Some(w * 64 + word.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Members in ascending order.
    pub fn iter(&self) -> JobIter {
        JobIter {
            words: self.words,
            word_idx: 0,
        }
    }

    /// The `count` smallest members as a new set. Panics if fewer exist.
    pub fn take_smallest(&self, count: usize) -> JobSet {
        let mut out = JobSet::EMPTY;
        let mut left = count;
        for job in self.iter() {
            if left == 0 {
                break;
            }
            out.insert(job);
            left -= 1;
        }
        assert!(left == 0, "take_smallest: set has fewer than {count} members");
        out
    }
}

pub struct JobIter {
    words: [u64; WORDS],
    word_idx: usize,
}

impl Iterator for JobIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        while self.word_idx < WORDS {
            let w = self.words[self.word_idx];
            if w != 0 {
                let bit = w.trailing_zeros() as usize;
                self.words[self.word_idx] &= w - 1;
                return Some(self.word_idx * 64 + bit);
            }
            self.word_idx += 1;
        }
        None
    }
}

impl FromIterator<usize> for JobSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> JobSet {
        let mut s = JobSet::EMPTY;
        for j in iter {
            s.insert(j);
        }
        s
    }
}

impl fmt::Debug for JobSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, job) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{job}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut ChaCha8Rng, n: usize) -> JobSet {
        (0..n).filter(|_| rng.gen_bool(0.5)).collect()
    }

    #[test]
    fn basic_membership() {
        let mut s = JobSet::EMPTY;
        assert!(s.is_empty());
        s.insert(0);
        s.insert(77);
        s.insert(255);
        assert_eq!(s.len(), 3);
        assert!(s.contains(77));
        s.remove(77);
        assert!(!s.contains(77));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 255]);
    }

    #[test]
    fn all_below_boundaries() {
        assert!(JobSet::all_below(0).is_empty());
        assert_eq!(JobSet::all_below(64).len(), 64);
        assert_eq!(JobSet::all_below(65).len(), 65);
        assert_eq!(JobSet::all_below(256).len(), 256);
    }

    // Set-algebra laws on random sets: idempotence, De Morgan (relative to a
    // universe), and cardinality consistent with membership iteration.
    #[test]
    fn set_algebra_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let universe = JobSet::all_below(130);
        for _ in 0..200 {
            let a = random_set(&mut rng, 130);
            let b = random_set(&mut rng, 130);
            assert_eq!(a.union(&a), a);
            assert_eq!(a.intersect(&a), a);
            // De Morgan: U \ (a ∪ b) = (U \ a) ∩ (U \ b)
            assert_eq!(
                universe.minus(&a.union(&b)),
                universe.minus(&a).intersect(&universe.minus(&b))
            );
            assert_eq!(
                universe.minus(&a.intersect(&b)),
                universe.minus(&a).union(&universe.minus(&b))
            );
            assert_eq!(a.len(), a.iter().count());
            assert!(a.intersect(&b).is_subset_of(&a));
            assert_eq!(a.is_disjoint(&b), a.intersect(&b).is_empty());
        }
    }

    #[test]
    fn take_smallest_prefix() {
        let s: JobSet = [3usize, 9, 11, 40].into_iter().collect();
        assert_eq!(s.take_smallest(2), [3usize, 9].into_iter().collect());
        assert_eq!(s.take_smallest(0), JobSet::EMPTY);
    }
}
