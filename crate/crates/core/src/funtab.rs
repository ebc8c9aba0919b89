//! Finitary functions Z_p^n x Z_q^n -> Z_p x Z_q as explicit tables.
//!
//! Table index for arity n: `sum x_i p^i + p^n * sum y_i q^i`, first variable
//! least significant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::zmod::{
    add, checked_pow, coeffs_to_values, digits, is_prime, mul, pow, undigits, values_to_coeffs, ModVec,
    PrimePair,
};

/// Largest table we are willing to materialize.
pub const MAX_TABLE_LEN: usize = 1 << 24;

/// Which block of Z_p x Z_q a quantity lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    P,
    Q,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::P => Side::Q,
            Side::Q => Side::P,
        }
    }

    /// Modulus of the values on this side.
    pub fn modulus(self, pp: PrimePair) -> u8 {
        match self {
            Side::P => pp.p(),
            Side::Q => pp.q(),
        }
    }
}

fn table_len(pp: PrimePair, arity: usize) -> Result<usize> {
    checked_pow(pp.product() as usize, arity)
        .filter(|&n| n <= MAX_TABLE_LEN)
        .ok_or_else(|| Error::Resource(format!("a table of arity {arity} over Z_{} is too large", pp.product())))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MixedFun {
    pp: PrimePair,
    arity: usize,
    table: Vec<(u8, u8)>,
}

#[derive(Serialize, Deserialize)]
struct MixedFunRaw {
    p: u8,
    q: u8,
    arity: usize,
    table: Vec<[u8; 2]>,
}

impl Serialize for MixedFun {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MixedFunRaw {
            p: self.pp.p(),
            q: self.pp.q(),
            arity: self.arity,
            table: self.table.iter().map(|&(a, b)| [a, b]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixedFun {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MixedFunRaw::deserialize(d)?;
        let pp = PrimePair::new(raw.p as u32, raw.q as u32).map_err(serde::de::Error::custom)?;
        MixedFun::new(pp, raw.arity, raw.table.into_iter().map(|[a, b]| (a, b)).collect())
            .map_err(serde::de::Error::custom)
    }
}

impl MixedFun {
    pub fn new(pp: PrimePair, arity: usize, table: Vec<(u8, u8)>) -> Result<Self> {
        if table.len() != table_len(pp, arity)? {
            return invalid(format!("table length {} does not match arity {arity}", table.len()));
        }
        if table.iter().any(|&(a, b)| a >= pp.p() || b >= pp.q()) {
            return invalid("table value not reduced");
        }
        Ok(MixedFun { pp, arity, table })
    }

    /// Build from a closure over (x, y) digit vectors.
    pub fn from_fn(pp: PrimePair, arity: usize, mut f: impl FnMut(&[u8], &[u8]) -> (u8, u8)) -> Result<Self> {
        let len = table_len(pp, arity)?;
        let (p, q) = (pp.p() as usize, pp.q() as usize);
        let px = p.pow(arity as u32);
        let table = (0..len)
            .map(|idx| {
                let xs = digits(idx % px, p, arity);
                let ys = digits(idx / px, q, arity);
                let (a, b) = f(&xs, &ys);
                (a % pp.p(), b % pp.q())
            })
            .collect();
        Ok(MixedFun { pp, arity, table })
    }

    pub fn constant(pp: PrimePair, arity: usize, value: (u8, u8)) -> Result<Self> {
        Self::from_fn(pp, arity, |_, _| value)
    }

    pub fn projection(pp: PrimePair, arity: usize, i: usize) -> Result<Self> {
        if i >= arity {
            return invalid("projection index out of range");
        }
        Self::from_fn(pp, arity, |xs, ys| (xs[i], ys[i]))
    }

    pub fn pp(&self) -> PrimePair {
        self.pp
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[(u8, u8)] {
        &self.table
    }

    /// p^n, the number of x-points.
    pub fn x_points(&self) -> usize {
        (self.pp.p() as usize).pow(self.arity as u32)
    }

    /// q^n, the number of y-points.
    pub fn y_points(&self) -> usize {
        (self.pp.q() as usize).pow(self.arity as u32)
    }

    pub fn index(&self, xs: &[u8], ys: &[u8]) -> usize {
        undigits(xs, self.pp.p() as usize) + self.x_points() * undigits(ys, self.pp.q() as usize)
    }

    pub fn eval(&self, xs: &[u8], ys: &[u8]) -> (u8, u8) {
        self.table[self.index(xs, ys)]
    }

    /// Value on one side at table index `idx`.
    pub fn side_value(&self, side: Side, idx: usize) -> u8 {
        match side {
            Side::P => self.table[idx].0,
            Side::Q => self.table[idx].1,
        }
    }

    pub fn add(&self, other: &MixedFun) -> Result<MixedFun> {
        self.same_shape(other)?;
        let (p, q) = (self.pp.p(), self.pp.q());
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(&(a, b), &(c, d))| (add(a, c, p), add(b, d, q)))
            .collect();
        Ok(MixedFun { pp: self.pp, arity: self.arity, table })
    }

    /// Multiply every value by the integer `k`, read in Z_pq.
    pub fn scale(&self, k: u64) -> MixedFun {
        let (p, q) = (self.pp.p(), self.pp.q());
        let (kp, kq) = ((k % p as u64) as u8, (k % q as u64) as u8);
        let table = self.table.iter().map(|&(a, b)| (mul(a, kp, p), mul(b, kq, q))).collect();
        MixedFun { pp: self.pp, arity: self.arity, table }
    }

    fn same_shape(&self, other: &MixedFun) -> Result<()> {
        if self.pp != other.pp || self.arity != other.arity {
            return invalid("functions differ in prime pair or arity");
        }
        Ok(())
    }

    /// One-line text form `p q n v0p v0q v1p v1q ...`.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}", self.pp.p(), self.pp.q(), self.arity);
        for &(a, b) in &self.table {
            s.push_str(&format!(" {a} {b}"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let nums: Vec<u32> = text
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|_| Error::InvalidInput(format!("not a number: {t}"))))
            .collect::<Result<_>>()?;
        if nums.len() < 3 {
            return invalid("expected `p q n` followed by table values");
        }
        let pp = PrimePair::new(nums[0], nums[1])?;
        let arity = nums[2] as usize;
        let vals = &nums[3..];
        if !vals.len().is_multiple_of(2) {
            return invalid("odd number of table values");
        }
        let table = vals.chunks(2).map(|c| (c[0] as u8, c[1] as u8)).collect();
        if vals.iter().any(|&v| v > u8::MAX as u32) {
            return invalid("table value out of range");
        }
        MixedFun::new(pp, arity, table)
    }
}

/// h(z) = f(g_1(z), ..., g_n(z)).
pub fn compose(f: &MixedFun, gs: &[MixedFun]) -> Result<MixedFun> {
    if gs.len() != f.arity {
        return invalid(format!("expected {} inner functions, got {}", f.arity, gs.len()));
    }
    let Some(first) = gs.first() else {
        return Ok(f.clone());
    };
    for g in gs {
        if g.pp != f.pp || g.arity != first.arity {
            return invalid("inner functions differ in prime pair or arity");
        }
    }
    let (p, q) = (f.pp.p() as usize, f.pp.q() as usize);
    let px = f.x_points();
    let table = (0..first.table.len())
        .map(|idx| {
            let (mut xi, mut yi) = (0usize, 0usize);
            let (mut wp, mut wq) = (1usize, 1usize);
            for g in gs {
                let (a, b) = g.table[idx];
                xi += a as usize * wp;
                yi += b as usize * wq;
                wp *= p;
                wq *= q;
            }
            f.table[xi + px * yi]
        })
        .collect();
    Ok(MixedFun { pp: f.pp, arity: first.arity, table })
}

/// (x, y) -> (<a, x>, <b, y>).
pub fn linear_map(pp: PrimePair, a: &ModVec, b: &ModVec) -> Result<MixedFun> {
    if a.len() != b.len() {
        return invalid("coefficient vectors differ in length");
    }
    if a.modulus != pp.p() || b.modulus != pp.q() {
        return invalid("coefficient vectors have the wrong moduli");
    }
    MixedFun::from_fn(pp, a.len(), |xs, ys| (a.dot(xs), b.dot(ys)))
}

/// Split f into its Z_p block q^(p-1) f and its Z_q block p^(q-1) f.
pub fn crt_split(f: &MixedFun) -> (MixedFun, MixedFun) {
    let (p, q) = (f.pp.p() as u64, f.pp.q() as u64);
    let e_p = q.pow(p as u32 - 1);
    let e_q = p.pow(q as u32 - 1);
    (f.scale(e_p), f.scale(e_q))
}

/// Function table Z_src^n -> Z_dst, index `sum y_i src^i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoeffFun {
    pub src: u8,
    pub dst: u8,
    pub arity: usize,
    pub table: Vec<u8>,
}

impl CoeffFun {
    pub fn new(src: u8, dst: u8, arity: usize, table: Vec<u8>) -> Result<Self> {
        if !is_prime(src as u64) || !is_prime(dst as u64) {
            return invalid("coefficient moduli must be prime");
        }
        let len = checked_pow(src as usize, arity).filter(|&n| n <= MAX_TABLE_LEN);
        if len != Some(table.len()) {
            return invalid(format!("coefficient table length {} does not match arity {arity}", table.len()));
        }
        if table.iter().any(|&v| v >= dst) {
            return invalid("coefficient value not reduced");
        }
        Ok(CoeffFun { src, dst, arity, table })
    }

    pub fn from_fn(src: u8, dst: u8, arity: usize, mut f: impl FnMut(&[u8]) -> u8) -> Self {
        let len = (src as usize).pow(arity as u32);
        let table = (0..len).map(|i| f(&digits(i, src as usize, arity)) % dst).collect();
        CoeffFun { src, dst, arity, table }
    }

    pub fn constant(src: u8, dst: u8, arity: usize, c: u8) -> Self {
        Self::from_fn(src, dst, arity, |_| c)
    }

    pub fn zero(src: u8, dst: u8, arity: usize) -> Self {
        Self::constant(src, dst, arity, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|&v| v == 0)
    }

    pub fn is_constant(&self) -> bool {
        self.table.iter().all(|&v| v == self.table[0])
    }

    pub fn eval(&self, ys: &[u8]) -> u8 {
        self.table[undigits(ys, self.src as usize)]
    }

    fn check_same(&self, other: &CoeffFun) {
        assert!(
            self.src == other.src && self.dst == other.dst && self.arity == other.arity,
            "coefficient functions differ in shape"
        );
    }

    pub fn add(&self, other: &CoeffFun) -> CoeffFun {
        self.check_same(other);
        let table = self.table.iter().zip(&other.table).map(|(&a, &b)| add(a, b, self.dst)).collect();
        CoeffFun { table, ..self.clone() }
    }

    pub fn scale(&self, c: u8) -> CoeffFun {
        let table = self.table.iter().map(|&a| mul(a, c, self.dst)).collect();
        CoeffFun { table, ..self.clone() }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &CoeffFun) -> CoeffFun {
        self.check_same(other);
        let table = self.table.iter().zip(&other.table).map(|(&a, &b)| mul(a, b, self.dst)).collect();
        CoeffFun { table, ..self.clone() }
    }

    /// Same function read as an arity-`n` function of its first variables.
    pub fn pad(&self, n: usize) -> CoeffFun {
        assert!(n >= self.arity);
        CoeffFun::from_fn(self.src, self.dst, n, |ys| self.table[undigits(&ys[..self.arity], self.src as usize)])
    }

    /// y -> f(A y) for an arity x m matrix A (row-major).
    pub fn substitute(&self, a: &[u8], m: usize) -> CoeffFun {
        assert_eq!(a.len(), self.arity * m);
        let s = self.src;
        CoeffFun::from_fn(s, self.dst, m, |ys| {
            let args: Vec<u8> = (0..self.arity)
                .map(|i| (0..m).fold(0u8, |acc, j| add(acc, mul(a[i * m + j], ys[j], s), s)))
                .collect();
            self.eval(&args)
        })
    }
}

/// Normal form of f: f_p = sum_m f_m(y) x^m and f_q = sum_h f_h(x) y^h.
/// Only nonzero coefficient functions are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitNormalForm {
    pub arity: usize,
    pub p_side: BTreeMap<Vec<u8>, CoeffFun>,
    pub q_side: BTreeMap<Vec<u8>, CoeffFun>,
}

impl SplitNormalForm {
    pub fn side(&self, side: Side) -> &BTreeMap<Vec<u8>, CoeffFun> {
        match side {
            Side::P => &self.p_side,
            Side::Q => &self.q_side,
        }
    }

    pub fn reconstruct(&self, pp: PrimePair) -> Result<MixedFun> {
        let n = self.arity;
        let mut f = MixedFun::constant(pp, n, (0, 0))?;
        let (p, q) = (pp.p(), pp.q());
        let (px, qy) = (f.x_points(), f.y_points());
        for yi in 0..qy {
            let mut col = vec![0u8; px];
            for (m, c) in &self.p_side {
                col[undigits(m, p as usize)] = c.table[yi];
            }
            coeffs_to_values(&mut col, p, n);
            for (xi, v) in col.into_iter().enumerate() {
                f.table[xi + px * yi].0 = v;
            }
        }
        for xi in 0..px {
            let mut row = vec![0u8; qy];
            for (h, c) in &self.q_side {
                row[undigits(h, q as usize)] = c.table[xi];
            }
            coeffs_to_values(&mut row, q, n);
            for (yi, v) in row.into_iter().enumerate() {
                f.table[xi + px * yi].1 = v;
            }
        }
        Ok(f)
    }
}

pub fn normal_form(f: &MixedFun) -> SplitNormalForm {
    let n = f.arity;
    let (p, q) = (f.pp.p(), f.pp.q());
    let (px, qy) = (f.x_points(), f.y_points());
    let mut p_coeffs = vec![vec![0u8; qy]; px];
    for yi in 0..qy {
        let mut col: Vec<u8> = (0..px).map(|xi| f.table[xi + px * yi].0).collect();
        values_to_coeffs(&mut col, p, n);
        for (mi, c) in col.into_iter().enumerate() {
            p_coeffs[mi][yi] = c;
        }
    }
    let mut q_coeffs = vec![vec![0u8; px]; qy];
    for xi in 0..px {
        let mut row: Vec<u8> = (0..qy).map(|yi| f.table[xi + px * yi].1).collect();
        values_to_coeffs(&mut row, q, n);
        for (hi, c) in row.into_iter().enumerate() {
            q_coeffs[hi][xi] = c;
        }
    }
    let collect = |coeffs: Vec<Vec<u8>>, radix: u8, src: u8, dst: u8| {
        coeffs
            .into_iter()
            .enumerate()
            .filter(|(_, t)| t.iter().any(|&v| v != 0))
            .map(|(i, table)| (digits(i, radix as usize, n), CoeffFun { src, dst, arity: n, table }))
            .collect()
    };
    SplitNormalForm {
        arity: n,
        p_side: collect(p_coeffs, p, q, p),
        q_side: collect(q_coeffs, q, p, q),
    }
}

/// s-ary function (x, y) -> (r(y_1..y_n) x^m, 0).
pub fn induced(pp: PrimePair, r: &CoeffFun, m: &[u8], s: usize) -> Result<MixedFun> {
    induced_on(pp, Side::P, r, m, s)
}

/// Induced monomial on either side: on `Side::P` it is (r(y) x^m, 0), on
/// `Side::Q` it is (0, r(x) y^m) with r: Z_p^n -> Z_q.
pub fn induced_on(pp: PrimePair, side: Side, r: &CoeffFun, m: &[u8], s: usize) -> Result<MixedFun> {
    let (vm, cm) = match side {
        Side::P => (pp.p(), pp.q()),
        Side::Q => (pp.q(), pp.p()),
    };
    if r.src != cm || r.dst != vm {
        return invalid("coefficient function has the wrong moduli for this side");
    }
    if s < m.len() || s < r.arity {
        return invalid(format!("arity {s} is smaller than the monomial or coefficient arity"));
    }
    if m.iter().any(|&e| e >= vm) {
        return invalid("exponent exceeds modulus - 1");
    }
    MixedFun::from_fn(pp, s, |xs, ys| {
        let (vars, cargs) = match side {
            Side::P => (xs, ys),
            Side::Q => (ys, xs),
        };
        let mut v = r.eval(&cargs[..r.arity]);
        for (i, &e) in m.iter().enumerate() {
            v = mul(v, pow(vars[i], e as u64, vm), vm);
        }
        match side {
            Side::P => (v, 0),
            Side::Q => (0, v),
        }
    })
}
