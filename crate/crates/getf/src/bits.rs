//! Packed bit vectors and word-level helpers shared by the tensor kernels.
//!
//! Bits are stored LSB-first inside `u64` words: bit `i` lives at
//! `words[i / 64] >> (i % 64) & 1`. Unused high bits of the last word are
//! kept zero so word-wise popcounts and comparisons stay exact.

pub(crate) const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(nbits: usize) -> usize {
    nbits.div_ceil(WORD_BITS)
}

/// Mask selecting the low `n` bits of a word, `0 < n <= 64`.
#[inline]
pub(crate) fn low_mask(n: usize) -> u64 {
    if n >= WORD_BITS {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Popcount of the bit range `[start, start + len)` over a packed word slice.
pub(crate) fn count_ones_range(words: &[u64], start: usize, len: usize) -> usize {
    if len == 0 {
        return 0;
    }
    let end = start + len;
    let first_word = start / WORD_BITS;
    let last_word = (end - 1) / WORD_BITS;
    let head_shift = start % WORD_BITS;
    if first_word == last_word {
        let w = words[first_word] >> head_shift;
        return (w & low_mask(len)).count_ones() as usize;
    }
    let mut total = (words[first_word] >> head_shift).count_ones() as usize;
    for &w in &words[first_word + 1..last_word] {
        total += w.count_ones() as usize;
    }
    let tail_bits = end - last_word * WORD_BITS;
    total += (words[last_word] & low_mask(tail_bits)).count_ones() as usize;
    total
}

/// A fixed-length packed binary vector.
///
/// Used for pattern fibers, factor-matrix columns and tensor mode fibers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    nbits: usize,
    words: Vec<u64>,
}

impl BitVec {
    /// All-zero vector of the given length.
    pub fn zeros(nbits: usize) -> Self {
        BitVec {
            nbits,
            words: vec![0u64; words_for(nbits)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds from 0/1 bytes; anything non-zero counts as a set bit.
    pub fn from_01(bits: &[u8]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.nbits
    }

    pub fn is_empty(&self) -> bool {
        self.nbits == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.nbits);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.nbits);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Number of positions set in both vectors (Boolean inner product).
    pub fn and_count(&self, other: &BitVec) -> usize {
        debug_assert_eq!(self.nbits, other.nbits);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Iterates set-bit positions in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let base = wi * WORD_BITS;
            BitIter { word: w, base }
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVec[")?;
        for i in 0..self.nbits {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        write!(f, "]")
    }
}

struct BitIter {
    word: u64,
    base: usize,
}

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.word == 0 {
            return None;
        }
        let tz = self.word.trailing_zeros() as usize;
        self.word &= self.word - 1;
        Some(self.base + tz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_popcount_matches_naive() {
        let bits: Vec<bool> = (0..300).map(|i| (i * 7 + 3) % 5 < 2).collect();
        let v = BitVec::from_bools(&bits);
        for start in [0, 1, 63, 64, 65, 120, 250] {
            for len in [0, 1, 2, 63, 64, 65, 49] {
                if start + len > 300 {
                    continue;
                }
                let naive = bits[start..start + len].iter().filter(|&&b| b).count();
                assert_eq!(count_ones_range(v.words(), start, len), naive);
            }
        }
    }

    #[test]
    fn iter_ones_roundtrip() {
        let bits: Vec<bool> = (0..130).map(|i| i % 3 == 0).collect();
        let v = BitVec::from_bools(&bits);
        let ones: Vec<usize> = v.iter_ones().collect();
        let expect: Vec<usize> = (0..130).filter(|i| i % 3 == 0).collect();
        assert_eq!(ones, expect);
        assert_eq!(v.count_ones(), expect.len());
    }

    #[test]
    fn and_count_is_inner_product() {
        let a = BitVec::from_01(&[1, 1, 0, 1, 0]);
        let b = BitVec::from_01(&[1, 0, 0, 1, 1]);
        assert_eq!(a.and_count(&b), 2);
    }
}
