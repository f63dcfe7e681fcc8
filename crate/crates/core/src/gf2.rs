//! Dense bit matrices over GF(2).
//!
//! Rows are packed into single 64-bit words with column 0 at the most
//! significant used bit, matching the format's MSB-first bitstrings and the
//! engine's packing of bit vectors into integers. Dimensions are capped at
//! 64x64, which is the width of everything the evaluation engine handles.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    rows: u32,
    cols: u32,
    words: Vec<u64>,
}

/// All-ones mask of the low `bits` bits.
pub fn mask(bits: u32) -> u64 {
    match bits {
        0 => 0,
        64 => u64::MAX,
        b => (1u64 << b) - 1,
    }
}

impl Gf2Matrix {
    pub fn zero(rows: u32, cols: u32) -> Result<Self> {
        if rows > 64 || cols > 64 {
            return Err(Error::SpaceLimit(format!(
                "matrix {rows}x{cols} exceeds the 64-bit word engine"
            )));
        }
        Ok(Gf2Matrix {
            rows,
            cols,
            words: vec![0; rows as usize],
        })
    }

    pub fn identity(n: u32) -> Result<Self> {
        let mut m = Self::zero(n, n)?;
        for i in 0..n {
            m.set(i, i, true);
        }
        Ok(m)
    }

    /// Builds a matrix from row words already packed with column 0 at bit
    /// position `cols-1`.
    pub fn from_row_words(cols: u32, words: Vec<u64>) -> Result<Self> {
        let rows = u32::try_from(words.len())
            .map_err(|_| Error::SpaceLimit("too many matrix rows".into()))?;
        if rows > 64 || cols > 64 {
            return Err(Error::SpaceLimit(format!(
                "matrix {rows}x{cols} exceeds the 64-bit word engine"
            )));
        }
        for w in &words {
            if *w & !mask(cols) != 0 {
                return Err(Error::WidthMismatch(format!(
                    "matrix row 0x{w:x} wider than {cols} columns"
                )));
            }
        }
        Ok(Gf2Matrix { rows, cols, words })
    }

    /// Parses MSB-first '0'/'1' strings, one per row.
    pub fn from_bitstrings(rows: &[String]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let cols = u32::try_from(cols).map_err(|_| Error::SpaceLimit("row too wide".into()))?;
        let mut words = Vec::with_capacity(rows.len());
        for r in rows {
            if r.len() as u32 != cols {
                return Err(Error::WidthMismatch(
                    "matrix rows have differing lengths".into(),
                ));
            }
            let mut w = 0u64;
            for c in r.chars() {
                w = (w << 1)
                    | match c {
                        '0' => 0,
                        '1' => 1,
                        _ => {
                            return Err(Error::BadFormat(format!(
                                "bitstring `{r}` contains `{c}`"
                            )))
                        }
                    };
            }
            words.push(w);
        }
        Self::from_row_words(cols, words)
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn row_word(&self, r: u32) -> u64 {
        self.words[r as usize]
    }

    pub fn get(&self, r: u32, c: u32) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.words[r as usize] >> (self.cols - 1 - c)) & 1 == 1
    }

    pub fn set(&mut self, r: u32, c: u32, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let bit = 1u64 << (self.cols - 1 - c);
        if value {
            self.words[r as usize] |= bit;
        } else {
            self.words[r as usize] &= !bit;
        }
    }

    pub fn column_is_zero(&self, c: u32) -> bool {
        (0..self.rows).all(|r| !self.get(r, c))
    }

    pub fn zero_column(&mut self, c: u32) {
        for r in 0..self.rows {
            self.set(r, c, false);
        }
    }

    pub fn nonzero_columns(&self) -> Vec<u32> {
        (0..self.cols).filter(|&c| !self.column_is_zero(c)).collect()
    }

    /// Applies the matrix to a `cols`-bit input packed MSB-first, producing
    /// a `rows`-bit output packed the same way.
    pub fn apply(&self, input: u64) -> u64 {
        debug_assert_eq!(input & !mask(self.cols), 0);
        let mut out = 0u64;
        for w in &self.words {
            out = (out << 1) | u64::from((w & input).count_ones() & 1);
        }
        out
    }

    /// Standard elimination rank; deterministic and reproducible.
    pub fn rank(&self) -> u32 {
        let mut rows: Vec<u64> = self.words.clone();
        let mut rank = 0u32;
        for c in (0..self.cols).rev() {
            let bit = 1u64 << c;
            let Some(pivot) = (rank as usize..rows.len()).find(|&i| rows[i] & bit != 0) else {
                continue;
            };
            rows.swap(rank as usize, pivot);
            let pivot_row = rows[rank as usize];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank as usize && *row & bit != 0 {
                    *row ^= pivot_row;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Matrix product `self * rhs`.
    pub fn multiply(&self, rhs: &Gf2Matrix) -> Result<Gf2Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::WidthMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Gf2Matrix::zero(self.rows, rhs.cols)?;
        for r in 0..self.rows {
            let mut acc = 0u64;
            for k in 0..self.cols {
                if self.get(r, k) {
                    acc ^= rhs.words[k as usize];
                }
            }
            out.words[r as usize] = acc;
        }
        Ok(out)
    }

    /// Inverse of a square matrix by Gauss-Jordan, or `RankDeficient`.
    pub fn inverse(&self) -> Result<Gf2Matrix> {
        if self.rows != self.cols {
            return Err(Error::WidthMismatch(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut left = self.words.clone();
        let mut right = Gf2Matrix::identity(n)?.words;
        for (pivot_row, c) in (0..n).rev().enumerate() {
            let bit = 1u64 << c;
            let Some(p) = (pivot_row..left.len()).find(|&i| left[i] & bit != 0) else {
                return Err(Error::RankDeficient);
            };
            left.swap(pivot_row, p);
            right.swap(pivot_row, p);
            for i in 0..n as usize {
                if i != pivot_row && left[i] & bit != 0 {
                    left[i] ^= left[pivot_row];
                    right[i] ^= right[pivot_row];
                }
            }
        }
        // left is now a permutation-free identity because we consumed
        // columns high to low with a fresh pivot each time.
        Gf2Matrix::from_row_words(n, right)
    }

    /// Solves `self * x = target` for one solution, or `None`.
    pub fn solve(&self, target: u64) -> Option<u64> {
        debug_assert_eq!(target & !mask(self.rows), 0);
        // Augmented elimination over (row word, rhs bit, basis tracking).
        let mut rows: Vec<(u64, u64)> = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (*w, (target >> (self.rows - 1 - i as u32)) & 1))
            .collect();
        let mut pivots: Vec<(u32, usize)> = Vec::new();
        let mut next = 0usize;
        for c in (0..self.cols).rev() {
            let bit = 1u64 << c;
            let Some(p) = (next..rows.len()).find(|&i| rows[i].0 & bit != 0) else {
                continue;
            };
            rows.swap(next, p);
            let (pw, pb) = rows[next];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != next && row.0 & bit != 0 {
                    row.0 ^= pw;
                    row.1 ^= pb;
                }
            }
            pivots.push((c, next));
            next += 1;
        }
        if rows[next..].iter().any(|(w, b)| *w == 0 && *b == 1) {
            return None;
        }
        let mut x = 0u64;
        for (c, r) in pivots {
            if rows[r].1 == 1 {
                x |= 1u64 << c;
            }
        }
        Some(x)
    }

    pub fn to_bitstrings(&self) -> Vec<String> {
        self.words
            .iter()
            .map(|w| {
                (0..self.cols)
                    .map(|c| {
                        if (w >> (self.cols - 1 - c)) & 1 == 1 {
                            '1'
                        } else {
                            '0'
                        }
                    })
                    .collect()
            })
            .collect()
    }
}
