//! Packed bit strings.
//!
//! Bit `i` lives in word `i / 64` at position `i % 64`. Bits past `len` in the
//! last word are always zero so that word-wise comparisons and popcounts are
//! exact.
//!
//! The external text form is `<len>:<hex>`: bits are packed MSB-first into
//! bytes (bit 0 is the high bit of byte 0), the final byte is zero-padded,
//! and bytes are written as lowercase hex.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::FormatError;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

pub(crate) fn tail_mask(len: usize) -> u64 {
    match len % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::zeros(0);
        for b in bits {
            out.push(b);
        }
        out
    }

    /// Uniformly random string of `len` bits.
    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..words_for(len)).map(|_| rng.next_u64()).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Self { len, words }
    }

    pub(crate) fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(len));
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Self { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// `self ⊕ other`. Panics on length mismatch.
    pub fn xor(&self, other: &BitVec) -> BitVec {
        assert_eq!(self.len, other.len, "xor of bit strings with different lengths");
        BitVec {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        }
    }

    /// The bits at `indices`, in the order given.
    pub fn gather(&self, indices: &[u32]) -> BitVec {
        let mut words = vec![0u64; words_for(indices.len())];
        for (j, &i) in indices.iter().enumerate() {
            if self.get(i as usize) {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        BitVec {
            len: indices.len(),
            words,
        }
    }

    pub fn to_hex(&self) -> String {
        bits_to_hex(self.len, |i| self.get(i))
    }

    pub fn from_hex(len: usize, hex: &str) -> Result<Self, FormatError> {
        let mut out = Self::zeros(len);
        hex_to_bits(len, hex, |i, b| out.set(i, b))?;
        Ok(out)
    }
}

/// MSB-first hex packing of an abstract bit sequence.
pub(crate) fn bits_to_hex(len: usize, bit: impl Fn(usize) -> bool) -> String {
    const DIGITS: &[u8; 16] = b"0123456789abcdef";
    let mut out = String::with_capacity(len.div_ceil(8) * 2);
    for byte_idx in 0..len.div_ceil(8) {
        let mut byte = 0u8;
        for k in 0..8 {
            let i = byte_idx * 8 + k;
            if i < len && bit(i) {
                byte |= 0x80 >> k;
            }
        }
        out.push(DIGITS[(byte >> 4) as usize] as char);
        out.push(DIGITS[(byte & 0xf) as usize] as char);
    }
    out
}

pub(crate) fn hex_to_bits(
    len: usize,
    hex: &str,
    mut set: impl FnMut(usize, bool),
) -> Result<(), FormatError> {
    let expected = len.div_ceil(8) * 2;
    if hex.len() != expected {
        return Err(FormatError::HexLength {
            expected,
            found: hex.len(),
        });
    }
    let raw = hex.as_bytes();
    for byte_idx in 0..len.div_ceil(8) {
        let hi = hex_digit(raw[2 * byte_idx])?;
        let lo = hex_digit(raw[2 * byte_idx + 1])?;
        let byte = (hi << 4) | lo;
        for k in 0..8 {
            let i = byte_idx * 8 + k;
            let b = byte & (0x80 >> k) != 0;
            if i < len {
                set(i, b);
            } else if b {
                return Err(FormatError::NonZeroPadding);
            }
        }
    }
    Ok(())
}

fn hex_digit(c: u8) -> Result<u8, FormatError> {
    match c {
        b'0'..=b'9' => Ok(c - b'0'),
        b'a'..=b'f' => Ok(c - b'a' + 10),
        _ => Err(FormatError::HexDigit(c as char)),
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.len, self.to_hex())
    }
}

impl FromStr for BitVec {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (len, hex) = s.split_once(':').ok_or(FormatError::MissingSeparator)?;
        let len: usize = len.parse().map_err(|_| FormatError::BadLength(len.to_string()))?;
        BitVec::from_hex(len, hex)
    }
}

impl Serialize for BitVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
