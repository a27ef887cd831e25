//! Fixed-length binary genomes.
//!
//! Bits are packed into `u64` words, position `i` living in word `i / 64` at
//! bit `i % 64`. Bits past the logical length are always zero so word-level
//! popcounts never see garbage.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use smallvec::{smallvec, SmallVec};

use crate::error::{check_len, Error, Result};

const WORD: usize = 64;

/// Word storage; genomes up to 128 bits stay off the heap.
pub(crate) type Words = SmallVec<[u64; 2]>;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitstring {
    len: usize,
    words: Words,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(WORD)
}

fn tail_mask(len: usize) -> u64 {
    match len % WORD {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl Bitstring {
    pub fn zeros(len: usize) -> Self {
        Bitstring {
            len,
            words: smallvec![0; word_count(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Bitstring {
            len,
            words: smallvec![u64::MAX; word_count(len)],
        };
        b.clear_tail();
        b
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut b = Bitstring::zeros(bits.len());
        for (i, &bit) in bits.iter().enumerate() {
            b.set(i, bit);
        }
        b
    }

    /// Builds a bitstring from raw words. Bits beyond `len` are discarded.
    pub(crate) fn from_words(len: usize, mut words: Words) -> Self {
        words.resize(word_count(len), 0);
        let mut b = Bitstring { len, words };
        b.clear_tail();
        b
    }

    /// Uniformly random bitstring: every bit is an independent fair coin.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        if len == 0 {
            return Err(Error::Domain("bitstring length must be at least 1".into()));
        }
        let words = (0..word_count(len)).map(|_| rng.random::<u64>()).collect();
        Ok(Bitstring::from_words(len, words))
    }

    fn clear_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.len);
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let bit = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= bit;
        } else {
            self.words[i / WORD] &= !bit;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Number of ones.
    pub fn unitation(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// The `width` bits starting at `start`, packed into the low bits of a
    /// word (bit `start` lands at bit 0).
    #[inline]
    pub fn bits_at(&self, start: usize, width: usize) -> u64 {
        assert!(width <= WORD && start + width <= self.len);
        if width == 0 {
            return 0;
        }
        let (w, off) = (start / WORD, start % WORD);
        let mut v = self.words[w] >> off;
        if off + width > WORD {
            v |= self.words[w + 1] << (WORD - off);
        }
        if width == WORD {
            v
        } else {
            v & ((1u64 << width) - 1)
        }
    }

    /// Number of ones in positions `[start, start + width)`.
    pub fn unitation_in(&self, start: usize, width: usize) -> usize {
        if width <= WORD {
            return self.bits_at(start, width).count_ones() as usize;
        }
        (start..start + width).filter(|&i| self.get(i)).count()
    }

    pub fn hamming(&self, other: &Bitstring) -> Result<usize> {
        check_len(self.len, other.len)?;
        Ok(self.hamming_unchecked(other))
    }

    #[inline]
    pub(crate) fn hamming_unchecked(&self, other: &Bitstring) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn xor(&self, other: &Bitstring) -> Result<Bitstring> {
        check_len(self.len, other.len)?;
        Ok(self.xor_unchecked(other))
    }

    pub(crate) fn xor_unchecked(&self, other: &Bitstring) -> Bitstring {
        Bitstring {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        }
    }

    pub fn xor_assign(&mut self, other: &Bitstring) -> Result<()> {
        check_len(self.len, other.len)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    pub fn complement(&self) -> Bitstring {
        let mut b = Bitstring {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        b.clear_tail();
        b
    }
}

/// Renders position 0 first.
impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({self})")
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Domain(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Bitstring::from_bits(&bits))
    }
}
