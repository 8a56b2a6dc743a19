//! Dense matrices over GF(2).
//!
//! Rows are stored as runs of `u64` words. Column `c` of a row lives in word
//! `c / 64` at bit `63 - c % 64`, so the big-endian bytes of a row are exactly
//! its MSB-first wire packing. Bits past `cols` are always zero.

use std::fmt;

use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;

use crate::error::{Error, Result};

/// Maximum number of candidates drawn by [`sample_matrix`] before giving up.
pub const MAX_DRAWS: usize = 1024;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

#[inline]
fn stride_for(cols: usize) -> usize {
    cols.div_ceil(64)
}

#[inline]
fn mask_bit(col: usize) -> u64 {
    1u64 << (63 - (col % 64))
}

impl BitMatrix {
    /// All-zero `rows x cols` matrix.
    ///
    /// # Panics
    ///
    /// Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        let stride = stride_for(cols);
        Self {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Parses rows written as strings of `0`/`1`; whitespace inside a row is ignored.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let parsed: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| {
                r.as_ref()
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::Parse(format!("unexpected character {other:?} in bit row"))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let cols = parsed.first().map_or(0, Vec::len);
        if parsed.is_empty() || cols == 0 || parsed.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("bit rows must be non-empty and of equal width".into()));
        }
        let mut m = Self::zeros(parsed.len(), cols);
        for (i, row) in parsed.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                m.set(i, j, b);
            }
        }
        Ok(m)
    }

    /// Builds a matrix of width `cols <= 64` from row values whose most
    /// significant (of `cols`) bit is column 0.
    pub fn from_row_values(cols: usize, values: &[u64]) -> Self {
        assert!(cols <= 64);
        let mut m = Self::zeros(values.len(), cols);
        for (i, &v) in values.iter().enumerate() {
            m.set_row_value(i, v);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        self.words[r * self.stride + c / 64] & mask_bit(c) != 0
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.words[r * self.stride + c / 64];
        if value {
            *w |= mask_bit(c);
        } else {
            *w &= !mask_bit(c);
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        debug_assert!(r < self.rows && c < self.cols);
        self.words[r * self.stride + c / 64] ^= mask_bit(c);
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.words[r * self.stride..(r + 1) * self.stride]
    }

    /// Row `r` as an integer with column 0 in the most significant of `cols` bits.
    #[inline]
    pub fn row_value(&self, r: usize) -> u64 {
        assert!(self.cols <= 64);
        self.words[r * self.stride] >> (64 - self.cols)
    }

    #[inline]
    pub fn set_row_value(&mut self, r: usize, value: u64) {
        assert!(self.cols <= 64);
        let v = if self.cols == 64 {
            value
        } else {
            value & ((1u64 << self.cols) - 1)
        };
        self.words[r * self.stride] = v << (64 - self.cols);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, rhs: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "multiply",
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        let mut out = BitMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let dst = r * out.stride;
            for k in 0..self.cols {
                if self.get(r, k) {
                    let src = rhs.row(k);
                    for (d, s) in out.words[dst..dst + out.stride].iter_mut().zip(src) {
                        *d ^= s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Multiplies a packed row vector (same layout as a matrix row, `self.rows` bits)
    /// by this matrix and returns the packed product row.
    pub fn mul_row(&self, row: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; self.stride];
        for k in 0..self.rows {
            if row[k / 64] & mask_bit(k) != 0 {
                for (d, s) in out.iter_mut().zip(self.row(k)) {
                    *d ^= s;
                }
            }
        }
        out
    }

    /// Entrywise XOR.
    pub fn add(&self, rhs: &BitMatrix) -> Result<BitMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                op: "add",
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        let mut out = self.clone();
        out.add_assign(rhs);
        Ok(out)
    }

    fn add_assign(&mut self, rhs: &BitMatrix) {
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    out.set(c, r, true);
                }
            }
        }
        out
    }

    /// Reduces a copy to row echelon form; returns the pivot count.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..m.cols {
            if rank == m.rows {
                break;
            }
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, c)) else {
                continue;
            };
            m.swap_rows(p, rank);
            for r in rank + 1..m.rows {
                if m.get(r, c) {
                    m.xor_row_into(rank, r);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Gauss-Jordan inversion. Singular input yields [`Error::Singular`].
    pub fn invert(&self) -> Result<BitMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = BitMatrix::identity(n);
        for c in 0..n {
            let p = (c..n).find(|&r| a.get(r, c)).ok_or(Error::Singular)?;
            a.swap_rows(p, c);
            inv.swap_rows(p, c);
            for r in 0..n {
                if r != c && a.get(r, c) {
                    a.xor_row_into(c, r);
                    inv.xor_row_into(c, r);
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.stride {
            self.words.swap(a * self.stride + k, b * self.stride + k);
        }
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        for k in 0..self.stride {
            let v = self.words[src * self.stride + k];
            self.words[dst * self.stride + k] ^= v;
        }
    }

    /// Horizontal concatenation `self || rhs`.
    pub fn hcat(&self, rhs: &BitMatrix) -> Result<BitMatrix> {
        Self::hcat_all(&[self, rhs])
    }

    pub fn hcat_all(parts: &[&BitMatrix]) -> Result<BitMatrix> {
        let rows = parts
            .first()
            .ok_or_else(|| Error::Parse("nothing to concatenate".into()))?
            .rows;
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::DimensionMismatch {
                op: "hcat",
                left: (rows, parts[0].cols),
                right: parts.iter().find(|p| p.rows != rows).map(|p| (p.rows, p.cols)).unwrap(),
            });
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = BitMatrix::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            for r in 0..rows {
                for c in 0..p.cols {
                    if p.get(r, c) {
                        out.set(r, offset + c, true);
                    }
                }
            }
            offset += p.cols;
        }
        Ok(out)
    }

    /// Vertical stacking, first part on top.
    pub fn vstack_all(parts: &[&BitMatrix]) -> Result<BitMatrix> {
        let cols = parts
            .first()
            .ok_or_else(|| Error::Parse("nothing to stack".into()))?
            .cols;
        if let Some(bad) = parts.iter().find(|p| p.cols != cols) {
            return Err(Error::DimensionMismatch {
                op: "vstack",
                left: (parts[0].rows, cols),
                right: (bad.rows, bad.cols),
            });
        }
        let stride = stride_for(cols);
        let mut words = Vec::with_capacity(parts.iter().map(|p| p.words.len()).sum());
        for p in parts {
            words.extend_from_slice(&p.words);
        }
        Ok(BitMatrix {
            rows: words.len() / stride,
            cols,
            stride,
            words,
        })
    }

    pub fn vstack(&self, rhs: &BitMatrix) -> Result<BitMatrix> {
        Self::vstack_all(&[self, rhs])
    }

    /// Copies the `rows x cols` block whose top-left corner is `(r0, c0)`.
    pub fn slice(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<BitMatrix> {
        if r0 + rows > self.rows || c0 + cols > self.cols || rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch {
                op: "slice",
                left: (self.rows, self.cols),
                right: (r0 + rows, c0 + cols),
            });
        }
        let mut out = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if self.get(r0 + r, c0 + c) {
                    out.set(r, c, true);
                }
            }
        }
        Ok(out)
    }

    /// Overwrites the block at `(r0, c0)` with `block`.
    pub fn put(&mut self, r0: usize, c0: usize, block: &BitMatrix) -> Result<()> {
        if r0 + block.rows > self.rows || c0 + block.cols > self.cols {
            return Err(Error::DimensionMismatch {
                op: "put",
                left: (self.rows, self.cols),
                right: (r0 + block.rows, c0 + block.cols),
            });
        }
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.set(r0 + r, c0 + c, block.get(r, c));
            }
        }
        Ok(())
    }

    /// Appends all bits row-major to `out`, without per-row padding.
    pub fn write_bits(&self, out: &mut BitWriter) {
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.get(r, c));
            }
        }
    }

    pub fn read_bits(rows: usize, cols: usize, input: &mut BitReader<'_>) -> Option<BitMatrix> {
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, input.next()?);
            }
        }
        Some(m)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect();
            writeln!(f, "  {line}")?;
        }
        write!(f, "]")
    }
}

/// MSB-first bit accumulator.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    used: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bit: bool) {
        if self.used.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.used % 8);
        }
        self.used += 1;
    }

    /// Pushes the low `width` bits of `value`, most significant first.
    pub fn push_value(&mut self, value: u64, width: usize) {
        for k in (0..width).rev() {
            self.push((value >> k) & 1 == 1);
        }
    }

    /// Zero-padded bytes.
    pub fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

/// MSB-first bit cursor over a byte slice.
#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn read_value(&mut self, width: usize) -> Option<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | u64::from(self.next()?);
        }
        Some(v)
    }

    /// True when every bit left in the current partial byte is zero.
    pub fn padding_is_zero(&self) -> bool {
        let rem = self.pos % 8;
        if rem == 0 {
            return true;
        }
        self.bytes[self.pos / 8] & (0xFFu8 >> rem) == 0
    }

    pub fn bits_consumed(&self) -> usize {
        self.pos
    }
}

impl Iterator for BitReader<'_> {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        let byte = *self.bytes.get(self.pos / 8)?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Some(bit)
    }
}

/// Anything that can hand out an endless run of bytes.
pub trait ByteSource {
    fn fill(&mut self, buf: &mut [u8]);

    fn next_byte(&mut self) -> u8 {
        let mut b = [0u8; 1];
        self.fill(&mut b);
        b[0]
    }

    fn next_array<const N: usize>(&mut self) -> [u8; N]
    where
        Self: Sized,
    {
        let mut b = [0u8; N];
        self.fill(&mut b);
        b
    }

    /// Uniform integer in `0..bound` by rejection on 32-bit draws.
    fn next_below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0);
        let zone = u32::MAX - (u32::MAX % bound);
        loop {
            let mut b = [0u8; 4];
            self.fill(&mut b);
            let v = u32::from_be_bytes(b);
            if v < zone {
                return v % bound;
            }
        }
    }
}

/// Deterministic SHAKE-256 output stream.
pub struct ByteStream {
    reader: <Shake256 as ExtendableOutput>::Reader,
}

impl ByteStream {
    /// Absorbs every part in order and squeezes from the result.
    pub fn new(parts: &[&[u8]]) -> Self {
        let mut h = Shake256::default();
        for p in parts {
            h.update(p);
        }
        Self {
            reader: h.finalize_xof(),
        }
    }
}

impl fmt::Debug for ByteStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ByteStream")
    }
}

impl ByteSource for ByteStream {
    fn fill(&mut self, buf: &mut [u8]) {
        self.reader.read(buf);
    }
}

/// Reads one `rows x cols` candidate: each row takes `ceil(cols / 8)` bytes,
/// MSB-first, with the trailing padding bits discarded.
fn read_candidate<S: ByteSource + ?Sized>(stream: &mut S, rows: usize, cols: usize) -> BitMatrix {
    let row_bytes = cols.div_ceil(8);
    let mut buf = vec![0u8; row_bytes];
    let mut m = BitMatrix::zeros(rows, cols);
    for r in 0..rows {
        stream.fill(&mut buf);
        let row = m.row_mut(r);
        for (k, &b) in buf.iter().enumerate() {
            row[k / 8] |= u64::from(b) << (56 - 8 * (k % 8));
        }
        let tail = cols % 64;
        if tail != 0 {
            let last = row.len() - 1;
            row[last] &= !(u64::MAX >> tail);
        }
    }
    m
}

/// Draws a matrix from `stream`. With `require_nonsingular`, candidates are
/// rejected until one inverts, up to [`MAX_DRAWS`] attempts.
pub fn sample_matrix<S: ByteSource + ?Sized>(
    stream: &mut S,
    rows: usize,
    cols: usize,
    require_nonsingular: bool,
) -> Result<BitMatrix> {
    if !require_nonsingular {
        return Ok(read_candidate(stream, rows, cols));
    }
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    for _ in 0..MAX_DRAWS {
        let m = read_candidate(stream, rows, cols);
        if m.rank() == rows {
            return Ok(m);
        }
    }
    Err(Error::DrawCapExceeded(MAX_DRAWS))
}
