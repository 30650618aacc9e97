//! Uniformly random linear maps `{0,1}^m -> {0,1}^l`.
//!
//! The family of all such maps is universal₂: for any fixed `a0 != a1`,
//! `Pr[H a0 = H a1] = Pr[H (a0 ⊕ a1) = 0] = 2^-l` over a uniform draw of `H`.
//! Each row is stored as packed words so that one output bit is the parity of
//! a word-wise AND followed by a popcount.
//!
//! Text form: `<l>,<m>:<hex>` where the hex is the row-major l·m bit stream,
//! packed MSB-first like [`BitVec`](crate::bits::BitVec).

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::{bits_to_hex, hex_to_bits, tail_mask, words_for, BitVec};
use crate::error::{FormatError, HashError};

#[derive(Clone, PartialEq, Eq)]
pub struct LinearHash {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl LinearHash {
    /// Draws every matrix bit independently and uniformly.
    pub fn sample<R: RngCore + ?Sized>(
        input_len: usize,
        output_len: usize,
        rng: &mut R,
    ) -> Result<Self, HashError> {
        check_shape(output_len, input_len)?;
        let words_per_row = words_for(input_len);
        let mask = tail_mask(input_len);
        let mut bits = Vec::with_capacity(output_len * words_per_row);
        for _ in 0..output_len {
            for w in 0..words_per_row {
                let word = rng.next_u64();
                bits.push(if w + 1 == words_per_row { word & mask } else { word });
            }
        }
        Ok(Self {
            rows: output_len,
            cols: input_len,
            words_per_row,
            bits,
        })
    }

    /// Builds a matrix from explicit rows, all of the same length.
    pub fn from_rows(rows: &[BitVec]) -> Result<Self, HashError> {
        let cols = rows.first().map_or(0, BitVec::len);
        check_shape(rows.len(), cols)?;
        let mut bits = Vec::with_capacity(rows.len() * words_for(cols));
        for row in rows {
            if row.len() != cols {
                return Err(HashError::LengthMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            bits.extend_from_slice(row.words());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            words_per_row: words_for(cols),
            bits,
        })
    }

    /// Output length `l`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Input length `m`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols);
        (self.row_words(row)[col / 64] >> (col % 64)) & 1 == 1
    }

    pub fn row(&self, row: usize) -> BitVec {
        BitVec::from_words(self.cols, self.row_words(row).to_vec())
    }

    fn row_words(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    /// `output_j = parity(row_j AND input)`.
    pub fn apply(&self, input: &BitVec) -> Result<BitVec, HashError> {
        if input.len() != self.cols {
            return Err(HashError::LengthMismatch {
                expected: self.cols,
                found: input.len(),
            });
        }
        let x = input.words();
        let mut out = vec![0u64; words_for(self.rows)];
        for (j, row) in self.bits.chunks_exact(self.words_per_row).enumerate() {
            let ones: u32 = row.iter().zip(x).map(|(a, b)| (a & b).count_ones()).sum();
            out[j / 64] |= u64::from(ones & 1) << (j % 64);
        }
        Ok(BitVec::from_words(self.rows, out))
    }

    pub fn to_hex(&self) -> String {
        bits_to_hex(self.rows * self.cols, |i| self.get(i / self.cols, i % self.cols))
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<(), HashError> {
    if rows == 0 || cols == 0 {
        return Err(HashError::ZeroDimension { rows, cols });
    }
    if rows > cols {
        return Err(HashError::Expanding { rows, cols });
    }
    Ok(())
}

impl fmt::Debug for LinearHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearHash({}x{})", self.rows, self.cols)
    }
}

impl fmt::Display for LinearHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}:{}", self.rows, self.cols, self.to_hex())
    }
}

impl FromStr for LinearHash {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (dims, hex) = s.split_once(':').ok_or(FormatError::MissingSeparator)?;
        let (l, m) = dims
            .split_once(',')
            .ok_or_else(|| FormatError::BadLength(dims.to_string()))?;
        let parse = |v: &str| v.parse::<usize>().map_err(|_| FormatError::BadLength(v.to_string()));
        let (rows, cols) = (parse(l)?, parse(m)?);
        check_shape(rows, cols).map_err(|e| FormatError::BadLength(e.to_string()))?;
        let words_per_row = words_for(cols);
        let mut bits = vec![0u64; rows * words_per_row];
        hex_to_bits(rows * cols, hex, |i, b| {
            if b {
                let (r, c) = (i / cols, i % cols);
                bits[r * words_per_row + c / 64] |= 1 << (c % 64);
            }
        })?;
        Ok(Self {
            rows,
            cols,
            words_per_row,
            bits,
        })
    }
}

impl Serialize for LinearHash {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LinearHash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
