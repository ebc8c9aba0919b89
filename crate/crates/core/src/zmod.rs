//! Residue arithmetic over Z_m, prime pairs, small vectors and matrices.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_MAX_PRODUCT: u32 = 35;
pub const MAX_PRODUCT_ENV: &str = "CLONEFORGE_MAX_PRODUCT";

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Number of positive divisors of `k - 1`. `n_divisors_pred(2) == 1`.
pub fn n_divisors_pred(k: u64) -> u64 {
    let m = k.saturating_sub(1);
    if m == 0 {
        return 0;
    }
    let mut count = 0;
    let mut d = 1;
    while d * d <= m {
        if m.is_multiple_of(d) {
            count += if d * d == m { 1 } else { 2 };
        }
        d += 1;
    }
    count
}

#[inline]
pub fn add(a: u8, b: u8, m: u8) -> u8 {
    ((a as u16 + b as u16) % m as u16) as u8
}

#[inline]
pub fn sub(a: u8, b: u8, m: u8) -> u8 {
    ((a as u16 + m as u16 - b as u16) % m as u16) as u8
}

#[inline]
pub fn mul(a: u8, b: u8, m: u8) -> u8 {
    ((a as u16 * b as u16) % m as u16) as u8
}

#[inline]
pub fn neg(a: u8, m: u8) -> u8 {
    sub(0, a, m)
}

pub fn pow(a: u8, mut e: u64, m: u8) -> u8 {
    let mut base = a % m;
    let mut acc = 1 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(acc, base, m);
        }
        base = mul(base, base, m);
        e >>= 1;
    }
    acc
}

/// Inverse modulo a prime `m`; `a` must be nonzero mod `m`.
pub fn inv(a: u8, m: u8) -> u8 {
    debug_assert!(!a.is_multiple_of(m), "zero has no inverse");
    pow(a, m as u64 - 2, m)
}

pub fn reduce_i64(v: i64, m: u8) -> u8 {
    v.rem_euclid(m as i64) as u8
}

/// Two distinct primes with a bounded product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "PrimePairRaw", into = "PrimePairRaw")]
pub struct PrimePair {
    p: u8,
    q: u8,
}

#[derive(Serialize, Deserialize)]
struct PrimePairRaw {
    p: u8,
    q: u8,
}

impl TryFrom<PrimePairRaw> for PrimePair {
    type Error = Error;
    fn try_from(raw: PrimePairRaw) -> Result<Self> {
        PrimePair::new(raw.p as u32, raw.q as u32)
    }
}

impl From<PrimePair> for PrimePairRaw {
    fn from(pp: PrimePair) -> Self {
        PrimePairRaw { p: pp.p, q: pp.q }
    }
}

/// Product cap from `CLONEFORGE_MAX_PRODUCT`, else 35.
pub fn max_product() -> u32 {
    std::env::var(MAX_PRODUCT_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_PRODUCT)
}

impl PrimePair {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        Self::with_cap(p, q, max_product())
    }

    pub fn with_cap(p: u32, q: u32, cap: u32) -> Result<Self> {
        if !is_prime(p as u64) {
            return invalid(format!("{p} is not prime"));
        }
        if !is_prime(q as u64) {
            return invalid(format!("{q} is not prime"));
        }
        if p == q {
            return invalid("p and q must be distinct");
        }
        // residues are stored as u8 and products of two residues as u16
        if p > 251 || q > 251 || p * q > cap {
            return invalid(format!("p*q = {} exceeds the cap {cap}", p * q));
        }
        Ok(PrimePair { p: p as u8, q: q as u8 })
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn product(&self) -> u32 {
        self.p as u32 * self.q as u32
    }

    pub fn swapped(&self) -> PrimePair {
        PrimePair { p: self.q, q: self.p }
    }
}

/// Vector over Z_m.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModVec {
    pub modulus: u8,
    pub entries: Vec<u8>,
}

impl ModVec {
    pub fn new(modulus: u8, entries: Vec<u8>) -> Self {
        let entries = entries.into_iter().map(|e| e % modulus).collect();
        ModVec { modulus, entries }
    }

    pub fn zeros(modulus: u8, len: usize) -> Self {
        ModVec { modulus, entries: vec![0; len] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, xs: &[u8]) -> u8 {
        dot(&self.entries, xs, self.modulus)
    }
}

pub fn dot(a: &[u8], b: &[u8], m: u8) -> u8 {
    let s: u32 = a.iter().zip(b).map(|(&x, &y)| x as u32 * y as u32).sum();
    (s % m as u32) as u8
}

/// Row-major matrix over Z_m.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModMatrix {
    pub modulus: u8,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<u8>,
}

impl ModMatrix {
    pub fn new(modulus: u8, rows: usize, cols: usize, entries: Vec<u8>) -> Result<Self> {
        if entries.len() != rows * cols {
            return invalid("matrix entry count does not match its shape");
        }
        let entries = entries.into_iter().map(|e| e % modulus).collect();
        Ok(ModMatrix { modulus, rows, cols, entries })
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[u8]) -> Vec<u8> {
        (0..self.rows).map(|i| dot(self.row(i), v, self.modulus)).collect()
    }

    pub fn mul(&self, other: &ModMatrix) -> Result<ModMatrix> {
        if self.cols != other.rows || self.modulus != other.modulus {
            return invalid("matrix shapes or moduli do not match");
        }
        let m = self.modulus;
        let mut out = vec![0u8; self.rows * other.cols];
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut s = 0u32;
                for k in 0..self.cols {
                    s += self.entries[i * self.cols + k] as u32 * other.entries[k * other.cols + j] as u32;
                }
                out[i * other.cols + j] = (s % m as u32) as u8;
            }
        }
        ModMatrix::new(m, self.rows, other.cols, out)
    }
}

/// Digits of `index` in base `radix`, least significant first.
pub fn digits(mut index: usize, radix: usize, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((index % radix) as u8);
        index /= radix;
    }
    out
}

pub fn undigits(ds: &[u8], radix: usize) -> usize {
    ds.iter().rev().fold(0, |acc, &d| acc * radix + d as usize)
}

/// `base^exp`, or None on overflow.
pub fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Inverse of the Vandermonde matrix on the points 0..m-1: coefficient k of the
/// interpolating polynomial is `sum_t out[k][t] * v(t)`.
pub fn interpolation_matrix(m: u8) -> Vec<Vec<u8>> {
    let n = m as usize;
    // augmented [V | I] with V[t][k] = t^k, then Gauss-Jordan
    let mut a: Vec<Vec<u8>> = (0..n)
        .map(|t| {
            let mut row: Vec<u8> = (0..n).map(|k| pow(t as u8, k as u64, m)).collect();
            row.extend((0..n).map(|j| (j == t) as u8));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| a[r][col] != 0).expect("Vandermonde is invertible");
        a.swap(col, piv);
        let iv = inv(a[col][col], m);
        for x in a[col].iter_mut() {
            *x = mul(*x, iv, m);
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let f = a[r][col];
                for c in 0..2 * n {
                    a[r][c] = sub(a[r][c], mul(f, a[col][c], m), m);
                }
            }
        }
    }
    // rows of the inverse of V map values to coefficients
    (0..n).map(|k| (0..n).map(|t| a[k][n + t]).collect()).collect()
}

/// Transform a table over `[m]^vars` (mixed index, first variable least
/// significant) between values and monomial coefficients, in place.
pub fn tensor_apply(table: &mut [u8], m: u8, vars: usize, matrix: &[Vec<u8>]) {
    let n = m as usize;
    let mut stride = 1;
    let mut buf = vec![0u8; n];
    for _ in 0..vars {
        let block = stride * n;
        for start in (0..table.len()).step_by(block) {
            for off in 0..stride {
                for (t, b) in buf.iter_mut().enumerate() {
                    *b = table[start + off + t * stride];
                }
                for (k, row) in matrix.iter().enumerate() {
                    table[start + off + k * stride] = dot(row, &buf, m);
                }
            }
        }
        stride = block;
    }
}

/// Values to monomial coefficients over Z_m (m prime).
pub fn values_to_coeffs(table: &mut [u8], m: u8, vars: usize) {
    tensor_apply(table, m, vars, &interpolation_matrix(m))
}

/// Monomial coefficients to values over Z_m.
pub fn coeffs_to_values(table: &mut [u8], m: u8, vars: usize) {
    let v: Vec<Vec<u8>> = (0..m).map(|t| (0..m).map(|k| pow(t, k as u64, m)).collect()).collect();
    tensor_apply(table, m, vars, &v)
}

/// Exponent reduction under x^p = x: 0 stays 0, e >= 1 maps into [1, p-1].
pub fn reduce_exponent(e: u64, p: u8) -> u8 {
    if e == 0 {
        0
    } else {
        (((e - 1) % (p as u64 - 1)) + 1) as u8
    }
}

/// Slot of a total degree: s itself for s <= 1, else the d in [2, p] with d = s mod (p-1).
pub fn degree_slot(s: usize, p: u8) -> usize {
    if s <= 1 {
        s
    } else {
        2 + (s - 2) % (p as usize - 1)
    }
}
