//! Small shared helpers: a fast hasher for bitset keys, saturating binomial
//! sums, integer square root.

use std::hash::{BuildHasherDefault, Hasher};

/// FxHash-style multiply-xor hasher. Memo tables are keyed by `JobSet`
/// words; SipHash is measurable overhead in the inner loops.
#[derive(Default)]
pub struct FxHasher {
    hash: u64,
}

const SEED: u64 = 0x51_7c_c1_b7_27_22_0a_95;

impl Hasher for FxHasher {
    fn finish(&self) -> u64 {
        self.hash
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, word: u64) {
        self.hash = (self.hash.rotate_left(5) ^ word).wrapping_mul(SEED);
    }

    fn write_usize(&mut self, word: usize) {
        self.write_u64(word as u64);
    }
}

pub type FxBuildHasher = BuildHasherDefault<FxHasher>;
pub type FxHashMap<K, V> = std::collections::HashMap<K, V, FxBuildHasher>;

/// `sum_{i=0..=k} C(n, i)`, saturating at `u64::MAX`. Used for the
/// instrumentation bounds, where a saturated bound is still a valid bound.
pub fn binom_at_most(n: u64, k: u64) -> u64 {
    let k = k.min(n);
    let mut total: u64 = 0;
    let mut term: u64 = 1; // C(n, 0)
    for i in 0..=k {
        total = total.saturating_add(term);
        if i == k {
            break;
        }
        // C(n, i+1) = C(n, i) * (n - i) / (i + 1)
        match term.checked_mul(n - i) {
            Some(t) => term = t / (i + 1),
            None => return u64::MAX,
        }
    }
    total
}

/// Largest `r` with `r * r <= x`.
pub fn isqrt(x: u64) -> u64 {
    if x == 0 {
        return 0;
    }
    let mut r = (x as f64).sqrt() as u64;
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    while r * r > x {
        r -= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binom_small_values() {
        assert_eq!(binom_at_most(4, 0), 1);
        assert_eq!(binom_at_most(4, 2), 1 + 4 + 6);
        assert_eq!(binom_at_most(4, 10), 16);
        assert_eq!(binom_at_most(0, 0), 1);
    }

    #[test]
    fn binom_saturates() {
        assert_eq!(binom_at_most(300, 150), u64::MAX);
    }

    #[test]
    fn isqrt_exact() {
        for x in 0..1000u64 {
            let r = isqrt(x);
            assert!(r * r <= x && (r + 1) * (r + 1) > x, "x={x} r={r}");
        }
        assert_eq!(isqrt(54), 7);
    }
}
