use std::fmt;

use crate::error::{Error, Result};
use crate::grid::GridShape;

/// Binary label grid (1 = foreground, 0 = background).
///
/// Stored as packed bit rows: each row of `width` sites occupies
/// `ceil(width / 64)` words, bit `x % 64` of word `x / 64`. Padding bits past
/// the row end are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    shape: GridShape,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BinaryMask {
    /// All-background mask.
    pub fn new(shape: GridShape) -> Self {
        let words_per_row = shape.width().div_ceil(64);
        BinaryMask {
            shape,
            words_per_row,
            words: vec![0; words_per_row * shape.rows()],
        }
    }

    /// All-foreground mask.
    pub fn full(shape: GridShape) -> Self {
        let mut m = Self::new(shape);
        m.words.iter_mut().for_each(|w| *w = !0);
        m.clear_padding();
        m
    }

    pub fn from_fn(shape: GridShape, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut m = Self::new(shape);
        for site in 0..shape.len() {
            if f(site) {
                m.set(site, true);
            }
        }
        m
    }

    pub fn from_bools(shape: GridShape, bits: &[bool]) -> Result<Self> {
        if bits.len() != shape.len() {
            return Err(Error::LengthMismatch {
                shape,
                expected: shape.len(),
                got: bits.len(),
            });
        }
        Ok(Self::from_fn(shape, |s| bits[s]))
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    #[inline]
    fn locate(&self, site: usize) -> (usize, u64) {
        let w = self.shape.width();
        let row = site / w;
        let x = site % w;
        (row * self.words_per_row + x / 64, 1u64 << (x % 64))
    }

    #[inline]
    pub fn get(&self, site: usize) -> bool {
        let (word, bit) = self.locate(site);
        self.words[word] & bit != 0
    }

    #[inline]
    pub fn set(&mut self, site: usize, value: bool) {
        let (word, bit) = self.locate(site);
        if value {
            self.words[word] |= bit;
        } else {
            self.words[word] &= !bit;
        }
    }

    /// Foreground site count.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True when there is no foreground site.
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// True when every site is foreground.
    pub fn is_full(&self) -> bool {
        self.count() == self.shape.len()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.shape.len()).map(|s| self.get(s)).collect()
    }

    /// Foreground sites in ascending (row-major) order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        let w = self.shape.width();
        let wpr = self.words_per_row;
        self.words.iter().enumerate().flat_map(move |(i, &word)| {
            let base = (i / wpr) * w + (i % wpr) * 64;
            BitIter(word).map(move |b| base + b)
        })
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        out.words.iter_mut().for_each(|w| *w = !*w);
        out.clear_padding();
        out
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a & b)
    }

    /// Sites in `self` but not in `other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a & !b)
    }

    /// Sites where the two masks differ.
    pub fn symmetric_difference(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a ^ b)
    }

    /// `self ⊆ other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.shape == other.shape && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.shape.check_same(&other.shape)?;
        Ok(self.zip_unchecked(other, f))
    }

    pub(crate) fn zip_unchecked(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        debug_assert_eq!(self.shape, other.shape);
        BinaryMask {
            shape: self.shape,
            words_per_row: self.words_per_row,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn padding_mask(&self) -> u64 {
        match self.shape.width() % 64 {
            0 => !0,
            r => (1u64 << r) - 1,
        }
    }

    pub(crate) fn clear_padding(&mut self) {
        let last = self.padding_mask();
        let wpr = self.words_per_row;
        for row in self.words.chunks_mut(wpr) {
            row[wpr - 1] &= last;
        }
    }

    /// Sites with at least one in-grid neighbor in `self`.
    pub(crate) fn neighbor_any(&self) -> Self {
        let wpr = self.words_per_row;
        let h = self.shape.height();
        let d = self.shape.depth();
        let src = &self.words;
        let mut out = vec![0u64; src.len()];
        for z in 0..d {
            for y in 0..h {
                let r = z * h + y;
                let row = &src[r * wpr..(r + 1) * wpr];
                let dst = &mut out[r * wpr..(r + 1) * wpr];
                for k in 0..wpr {
                    // bit x gets bit x-1 and bit x+1 of the same row
                    let from_left = (row[k] << 1) | if k > 0 { row[k - 1] >> 63 } else { 0 };
                    let from_right = (row[k] >> 1) | if k + 1 < wpr { row[k + 1] << 63 } else { 0 };
                    dst[k] |= from_left | from_right;
                }
                let mut or_row = |other: usize| {
                    let o = &src[other * wpr..(other + 1) * wpr];
                    for k in 0..wpr {
                        dst[k] |= o[k];
                    }
                };
                if y > 0 {
                    or_row(r - 1);
                }
                if y + 1 < h {
                    or_row(r + 1);
                }
                if z > 0 {
                    or_row(r - h);
                }
                if z + 1 < d {
                    or_row(r + h);
                }
            }
        }
        let mut m = BinaryMask {
            shape: self.shape,
            words_per_row: wpr,
            words: out,
        };
        m.clear_padding();
        m
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask({}, {} fg)", self.shape, self.count())?;
        if self.shape.len() <= 4096 {
            let w = self.shape.width();
            for r in 0..self.shape.rows() {
                let line: String = (0..w).map(|x| if self.get(r * w + x) { '#' } else { '.' }).collect();
                writeln!(f, "{line}")?;
            }
        }
        Ok(())
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            let b = self.0.trailing_zeros() as usize;
            self.0 &= self.0 - 1;
            Some(b)
        }
    }
}
