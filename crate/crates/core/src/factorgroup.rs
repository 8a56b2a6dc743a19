//! Substitutions on m-bit words built from factorizations of the group
//! (F2^m, XOR) into m two-row blocks, plus the secret masking chain that hides
//! such a factorization and its structural inverse.
//!
//! Word convention: an m-bit word is a `u32` whose most significant of the m
//! bits is column 0. Input bit `k` (counting from that MSB) selects row 0 or
//! row 1 of block `k`.

use crate::bitlin::{sample_matrix, BitMatrix, ByteSource};
use crate::error::{Error, Result};

pub const SUPPORTED_WIDTHS: [usize; 5] = [2, 4, 6, 8, 16];

/// Largest m for which a full permutation table is materialized.
pub const MAX_TABLE_WIDTH: usize = 16;

#[inline]
fn word_bit(x: u32, m: usize, k: usize) -> bool {
    (x >> (m - 1 - k)) & 1 == 1
}

fn reverse_bits(v: u32, m: usize) -> u32 {
    v.reverse_bits() >> (32 - m)
}

/// Row vector (column 0 at the MSB of `width` bits) times `mat`.
pub(crate) fn row_times(value: u64, width: usize, mat: &BitMatrix) -> u64 {
    debug_assert_eq!(width, mat.rows());
    let mut acc = 0u64;
    for k in 0..width {
        if (value >> (width - 1 - k)) & 1 == 1 {
            acc ^= mat.row_value(k);
        }
    }
    acc
}

/// GF(2^m) with a fixed reduction polynomial per supported width.
///
/// Elements use the word convention: column 0 is the coefficient of x^0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpec {
    m: usize,
    /// Reduction polynomial with bit `i` holding the coefficient of x^i.
    modulus: u32,
}

impl FieldSpec {
    pub fn for_width(m: usize) -> Result<Self> {
        let modulus = match m {
            2 => 0b111,
            4 => 0b1_0011,
            6 => 0b100_0011,
            8 => 0x11B,
            16 => 0x1_100B,
            _ => return Err(Error::UnsupportedWidth(m)),
        };
        Ok(Self { m, modulus })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Trial division by every polynomial of degree 1..=m/2.
    pub fn is_irreducible(&self) -> bool {
        let deg = self.m as u32;
        if self.modulus >> deg != 1 {
            return false;
        }
        (2u32..1 << (deg / 2 + 1)).all(|d| poly_mod(self.modulus, d) != 0)
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let pa = reverse_bits(a, self.m) as u64;
        let pb = reverse_bits(b, self.m) as u64;
        let mut prod = 0u64;
        for i in 0..self.m {
            if (pb >> i) & 1 == 1 {
                prod ^= pa << i;
            }
        }
        for d in (self.m..2 * self.m).rev() {
            if (prod >> d) & 1 == 1 {
                prod ^= u64::from(self.modulus) << (d - self.m);
            }
        }
        reverse_bits(prod as u32, self.m)
    }

    /// Multiplicative inverse; zero has none.
    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        // a^(2^m - 2)
        let mut result = self.one();
        let mut base = a;
        let mut e = (1u64 << self.m) - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        Some(result)
    }

    pub fn one(&self) -> u32 {
        1 << (self.m - 1)
    }
}

fn poly_mod(mut a: u32, d: u32) -> u32 {
    let dd = 31 - d.leading_zeros();
    while a != 0 && 31 - a.leading_zeros() >= dd {
        a ^= d << (31 - a.leading_zeros() - dd);
    }
    a
}

/// A `2m x w` matrix read as m blocks of two rows each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    m: usize,
    matrix: BitMatrix,
}

impl Factorization {
    pub fn from_matrix(matrix: BitMatrix) -> Result<Self> {
        if !matrix.rows().is_multiple_of(2) || matrix.rows() / 2 > 32 {
            return Err(Error::InvalidParams(format!(
                "a factorization needs an even row count up to 64, got {}",
                matrix.rows()
            )));
        }
        Ok(Self {
            m: matrix.rows() / 2,
            matrix,
        })
    }

    /// Block `k` = `[0; e_k]`; the induced map is the identity.
    pub fn simple(m: usize) -> Self {
        let mut matrix = BitMatrix::zeros(2 * m, m);
        for k in 0..m {
            matrix.set(2 * k + 1, k, true);
        }
        Self { m, matrix }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn width(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> BitMatrix {
        self.matrix
    }

    /// Packed output row for input word `x`.
    pub fn eval_row(&self, x: u32) -> Vec<u64> {
        let mut acc = self.matrix.row(0).to_vec();
        acc.fill(0);
        for k in 0..self.m {
            let r = 2 * k + usize::from(word_bit(x, self.m, k));
            for (a, b) in acc.iter_mut().zip(self.matrix.row(r)) {
                *a ^= b;
            }
        }
        acc
    }

    /// Output as an integer; requires `width <= 64`.
    pub fn eval(&self, x: u32) -> u64 {
        let w = self.width();
        assert!(w <= 64);
        self.eval_row(x)[0] >> (64 - w)
    }

    /// `eval(0)` and the per-block row differences, for affine evaluation.
    fn affine_parts(&self) -> (u64, Vec<u64>) {
        let mut base = 0u64;
        let mut diffs = Vec::with_capacity(self.m);
        for k in 0..self.m {
            let r0 = self.matrix.row_value(2 * k);
            let r1 = self.matrix.row_value(2 * k + 1);
            base ^= r0;
            diffs.push(r0 ^ r1);
        }
        (base, diffs)
    }

    pub fn permutation_table(&self) -> Result<PermutationTable> {
        if self.m > MAX_TABLE_WIDTH {
            return Err(Error::Capacity(self.m));
        }
        if self.width() != self.m {
            return Err(Error::InvalidParams(format!(
                "permutation table needs a square factorization, got width {} for m = {}",
                self.width(),
                self.m
            )));
        }
        let (base, diffs) = self.affine_parts();
        let size = 1usize << self.m;
        let mut forward = vec![0u32; size];
        forward[0] = base as u32;
        for x in 1..size {
            let low = x.trailing_zeros() as usize;
            // bit `low` from the LSB belongs to block m-1-low
            forward[x] = forward[x & (x - 1)] ^ diffs[self.m - 1 - low] as u32;
        }
        let mut inverse = vec![u32::MAX; size];
        let mut bijective = true;
        for (x, &y) in forward.iter().enumerate() {
            if inverse[y as usize] != u32::MAX {
                bijective = false;
                break;
            }
            inverse[y as usize] = x as u32;
        }
        Ok(PermutationTable {
            m: self.m,
            forward,
            inverse: bijective.then_some(inverse),
        })
    }

    pub fn is_bijective(&self) -> Result<bool> {
        Ok(self.permutation_table()?.is_bijective())
    }
}

/// Full evaluation table of a square factorization, plus its inverse when bijective.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationTable {
    m: usize,
    forward: Vec<u32>,
    inverse: Option<Vec<u32>>,
}

impl PermutationTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn forward(&self) -> &[u32] {
        &self.forward
    }

    pub fn inverse(&self) -> Option<&[u32]> {
        self.inverse.as_deref()
    }

    pub fn is_bijective(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn apply(&self, x: u32) -> u32 {
        self.forward[x as usize]
    }

    pub fn invert(&self, y: u32) -> Result<u32> {
        match &self.inverse {
            Some(inv) => inv.get(y as usize).copied().ok_or(Error::NoPreimage(y)),
            None => Err(Error::NoPreimage(y)),
        }
    }
}

/// Secret parameters of the masking chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskingParams {
    /// Per-block row swap.
    pub rho1: Vec<bool>,
    /// Block `k` moves to position `rho2[k]` (0-based).
    pub rho2: Vec<usize>,
    /// Row `j` is added to both rows of block `j`.
    pub v: BitMatrix,
    /// Nonzero field multiplier.
    pub gamma: u32,
    /// Nonsingular right factor.
    pub phi: BitMatrix,
    /// Row `j` is added to both rows of block `j` after `phi`.
    pub tau: BitMatrix,
}

impl MaskingParams {
    pub fn identity(m: usize) -> Self {
        Self {
            rho1: vec![false; m],
            rho2: (0..m).collect(),
            v: BitMatrix::zeros(m, m),
            gamma: 1 << (m - 1),
            phi: BitMatrix::identity(m),
            tau: BitMatrix::zeros(m, m),
        }
    }

    pub fn sample<S: ByteSource + ?Sized>(stream: &mut S, m: usize) -> Result<Self> {
        FieldSpec::for_width(m)?;
        let swap_bits = sample_matrix(stream, 1, m, false)?;
        let rho1 = (0..m).map(|k| swap_bits.get(0, k)).collect();
        let mut rho2: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            let j = stream.next_below(i as u32 + 1) as usize;
            rho2.swap(i, j);
        }
        let v = sample_matrix(stream, m, m, false)?;
        let gamma = loop {
            let g = sample_matrix(stream, 1, m, false)?.row_value(0) as u32;
            if g != 0 {
                break g;
            }
        };
        let phi = sample_matrix(stream, m, m, true)?;
        let tau = sample_matrix(stream, m, m, false)?;
        Ok(Self {
            rho1,
            rho2,
            v,
            gamma,
            phi,
            tau,
        })
    }

    pub fn m(&self) -> usize {
        self.rho1.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        let mut seen = vec![false; m];
        for &p in &self.rho2 {
            if p >= m || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParams("rho2 is not a permutation".into()));
            }
        }
        if self.rho2.len() != m {
            return Err(Error::InvalidParams("rho2 has the wrong length".into()));
        }
        for mat in [&self.v, &self.phi, &self.tau] {
            if mat.rows() != m || mat.cols() != m {
                return Err(Error::InvalidParams("masking matrices must be m x m".into()));
            }
        }
        if self.gamma == 0 || self.gamma >> m != 0 {
            return Err(Error::InvalidParams("gamma must be a nonzero m-bit element".into()));
        }
        self.phi.invert().map(|_| ())
    }

    /// Sum of the additive masks `v_j`.
    pub fn v_sum(&self) -> u64 {
        (0..self.m()).fold(0, |acc, j| acc ^ self.v.row_value(j))
    }

    pub fn tau_sum(&self) -> u64 {
        (0..self.m()).fold(0, |acc, j| acc ^ self.tau.row_value(j))
    }
}

/// Every intermediate of the masking chain: `stages[0]` is the input,
/// `stages[k]` the result after the k-th step (six steps in total).
pub fn mask_trace(f: &Factorization, p: &MaskingParams) -> Result<Vec<Factorization>> {
    let m = f.m();
    if f.width() != m || p.m() != m {
        return Err(Error::InvalidParams(
            "masking needs a square factorization of matching width".into(),
        ));
    }
    p.validate()?;
    let field = FieldSpec::for_width(m)?;
    let rows = |f: &Factorization| -> Vec<u64> { (0..2 * m).map(|r| f.matrix.row_value(r)).collect() };
    let build = |vals: &[u64]| Factorization {
        m,
        matrix: BitMatrix::from_row_values(m, vals),
    };

    let g1 = rows(f);
    let mut g2 = g1.clone();
    for k in 0..m {
        if p.rho1[k] {
            g2.swap(2 * k, 2 * k + 1);
        }
    }
    let mut g3 = vec![0u64; 2 * m];
    for k in 0..m {
        let dst = p.rho2[k];
        g3[2 * dst] = g2[2 * k];
        g3[2 * dst + 1] = g2[2 * k + 1];
    }
    let mut g4 = g3.clone();
    for (r, val) in g4.iter_mut().enumerate() {
        *val ^= p.v.row_value(r / 2);
    }
    let g5: Vec<u64> = g4.iter().map(|&r| u64::from(field.mul(r as u32, p.gamma))).collect();
    let g6: Vec<u64> = g5.iter().map(|&r| row_times(r, m, &p.phi)).collect();
    let g7: Vec<u64> = g6
        .iter()
        .enumerate()
        .map(|(r, &val)| val ^ p.tau.row_value(r / 2))
        .collect();

    Ok([g1, g2, g3, g4, g5, g6, g7].iter().map(|s| build(s)).collect())
}

/// Applies the masking chain; the last step (row-broadcast `tau`) only when
/// `include_rho6` is set.
pub fn mask(f: &Factorization, p: &MaskingParams, include_rho6: bool) -> Result<Factorization> {
    let mut stages = mask_trace(f, p)?;
    Ok(stages.swap_remove(if include_rho6 { 6 } else { 5 }))
}

/// Precomputed inverse of a masked factorization, driven by the masking
/// parameters instead of a lookup table.
#[derive(Clone, Debug)]
pub struct StructuralInverse {
    m: usize,
    field: FieldSpec,
    phi_inv: BitMatrix,
    gamma_inv: u32,
    v_sum: u64,
    tau_sum: Option<u64>,
    base_const: u64,
    base_diff_inv: Option<BitMatrix>,
    rho1: Vec<bool>,
    rho2: Vec<usize>,
}

impl StructuralInverse {
    /// `base` is the unmasked factorization the chain started from.
    pub fn new(p: &MaskingParams, base: &Factorization, include_rho6: bool) -> Result<Self> {
        p.validate()?;
        let m = p.m();
        if base.m() != m || base.width() != m {
            return Err(Error::InvalidParams(
                "base factorization does not match the masking width".into(),
            ));
        }
        let field = FieldSpec::for_width(m)?;
        let (base_const, diffs) = base.affine_parts();
        let diff_matrix = BitMatrix::from_row_values(m, &diffs);
        Ok(Self {
            m,
            field,
            phi_inv: p.phi.invert()?,
            gamma_inv: field.inv(p.gamma).ok_or(Error::Singular)?,
            v_sum: p.v_sum(),
            tau_sum: include_rho6.then(|| p.tau_sum()),
            base_const,
            base_diff_inv: diff_matrix.invert().ok(),
            rho1: p.rho1.clone(),
            rho2: p.rho2.clone(),
        })
    }

    pub fn apply(&self, y: u32) -> Result<u32> {
        let m = self.m;
        let mut y6 = u64::from(y);
        if let Some(t) = self.tau_sum {
            y6 ^= t;
        }
        let y5 = row_times(y6, m, &self.phi_inv);
        let y4 = self.field.mul(y5 as u32, self.gamma_inv);
        let y3 = u64::from(y4) ^ self.v_sum;
        // selection bits of the base blocks
        let inv = self.base_diff_inv.as_ref().ok_or(Error::NoPreimage(y))?;
        let sel = row_times(y3 ^ self.base_const, m, inv);
        let mut x = 0u32;
        for k in 0..m {
            let bit = ((sel >> (m - 1 - k)) & 1 == 1) ^ self.rho1[k];
            if bit {
                x |= 1 << (m - 1 - self.rho2[k]);
            }
        }
        Ok(x)
    }
}

/// One-shot structural inversion; see [`StructuralInverse`].
pub fn invert_eval(p: &MaskingParams, base: &Factorization, y: u32, include_rho6: bool) -> Result<u32> {
    StructuralInverse::new(p, base, include_rho6)?.apply(y)
}
