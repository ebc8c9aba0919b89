//! Linearly closed clonoids of functions Z_src^n -> Z_dst, stored by their
//! unary part.
//!
//! A set of unary functions closed under Z_dst-linear combinations and under
//! u(t) -> u(a t) for every a in Z_src (a = 0 included) determines the whole
//! clonoid: its n-ary part is the span of u(<a, y>) over the unary members u
//! and all a in Z_src^n.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::funtab::CoeffFun;
use crate::linalg::Subspace;
use crate::zmod::{add, checked_pow, digits, mul, PrimePair};

/// Largest slice we materialize: src^n entries.
pub const MAX_SLICE_LEN: usize = 1_000_000;
/// Largest unary function space scanned by enumeration and generator search.
pub const MAX_UNARY_SPACE: u64 = 1 << 20;

/// Which way a clonoid maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Functions Z_q^n -> Z_p.
    Pq,
    /// Functions Z_p^n -> Z_q.
    Qp,
}

impl Orientation {
    /// (src, dst) moduli.
    pub fn moduli(self, pp: PrimePair) -> (u8, u8) {
        match self {
            Orientation::Pq => (pp.q(), pp.p()),
            Orientation::Qp => (pp.p(), pp.q()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clonoid {
    src: u8,
    dst: u8,
    unary: Subspace,
}

#[derive(Serialize, Deserialize)]
struct ClonoidRaw {
    /// Value modulus.
    p: u8,
    /// Argument modulus.
    q: u8,
    unary_basis: Vec<Vec<u8>>,
}

impl Serialize for Clonoid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ClonoidRaw { p: self.dst, q: self.src, unary_basis: self.unary.rows().to_vec() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Clonoid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ClonoidRaw::deserialize(d)?;
        if raw.unary_basis.iter().any(|r| r.len() != raw.q as usize || r.iter().any(|&v| v >= raw.p)) {
            return Err(serde::de::Error::custom("unary basis row has the wrong shape"));
        }
        let c = Clonoid::close_unary(raw.q, raw.p, raw.unary_basis.iter().map(|r| r.as_slice()));
        if c.unary.rows() != raw.unary_basis.as_slice() {
            return Err(serde::de::Error::custom("unary basis is not a canonical closed basis"));
        }
        Ok(c)
    }
}

/// Dilation u(t) -> u(a t) of a unary table over Z_src.
fn dilate(u: &[u8], a: u8, src: u8) -> Vec<u8> {
    (0..src).map(|t| u[mul(a, t, src) as usize]).collect()
}

impl Clonoid {
    pub fn zero(src: u8, dst: u8) -> Self {
        Clonoid { src, dst, unary: Subspace::zero(dst, src as usize) }
    }

    pub fn constants(src: u8, dst: u8) -> Self {
        Clonoid { src, dst, unary: Subspace::span(dst, src as usize, [vec![1u8; src as usize]]) }
    }

    pub fn top(src: u8, dst: u8) -> Self {
        Clonoid { src, dst, unary: Subspace::full(dst, src as usize) }
    }

    pub fn src(&self) -> u8 {
        self.src
    }

    pub fn dst(&self) -> u8 {
        self.dst
    }

    pub fn unary(&self) -> &Subspace {
        &self.unary
    }

    pub fn unary_basis(&self) -> Vec<CoeffFun> {
        self.unary.rows().iter().map(|r| CoeffFun { src: self.src, dst: self.dst, arity: 1, table: r.clone() }).collect()
    }

    pub fn dim(&self) -> usize {
        self.unary.rank()
    }

    pub fn is_zero(&self) -> bool {
        self.unary.is_zero()
    }

    /// Smallest clonoid containing the given unary tables.
    pub fn close_unary<'a>(src: u8, dst: u8, tables: impl IntoIterator<Item = &'a [u8]>) -> Self {
        let mut space = Subspace::zero(dst, src as usize);
        for u in tables {
            for a in 0..src {
                space.insert(&dilate(u, a, src));
            }
        }
        Clonoid { src, dst, unary: space }
    }

    pub fn contains_unary(&self, u: &[u8]) -> bool {
        self.unary.contains(u)
    }

    pub fn is_subclonoid_of(&self, other: &Clonoid) -> bool {
        self.unary.is_subspace_of(&other.unary)
    }

    pub fn contains_constants(&self) -> bool {
        self.unary.contains(&vec![1u8; self.src as usize])
    }

    /// Contained in the constants.
    pub fn is_constant_only(&self) -> bool {
        self.is_subclonoid_of(&Clonoid::constants(self.src, self.dst))
    }

    fn check_same(&self, other: &Clonoid) -> Result<()> {
        if self.src != other.src || self.dst != other.dst {
            return invalid("clonoids have different orientations");
        }
        Ok(())
    }

    pub fn join(&self, other: &Clonoid) -> Result<Clonoid> {
        self.check_same(other)?;
        Ok(Clonoid { src: self.src, dst: self.dst, unary: self.unary.sum(&other.unary) })
    }

    pub fn meet(&self, other: &Clonoid) -> Result<Clonoid> {
        self.check_same(other)?;
        Ok(Clonoid { src: self.src, dst: self.dst, unary: self.unary.intersection(&other.unary) })
    }

    /// The n-ary part as a subspace of Z_dst^(src^n).
    pub fn slice(&self, n: usize) -> Result<Subspace> {
        let len = checked_pow(self.src as usize, n)
            .filter(|&l| l <= MAX_SLICE_LEN)
            .ok_or_else(|| Error::Resource(format!("slice of arity {n} over Z_{} is too large", self.src)))?;
        let (s, d) = (self.src, self.dst);
        let mut out = Subspace::zero(d, len);
        if self.is_zero() {
            return Ok(out);
        }
        // scalar multiples of a give dilations of u, which are already members,
        // so one a per line through the origin (plus a = 0) suffices
        let mut lines = vec![vec![0u8; n]];
        for code in 0..len {
            let a = digits(code, s as usize, n);
            if a.iter().find(|&&v| v != 0) == Some(&1) {
                lines.push(a);
            }
        }
        let points: Vec<Vec<u8>> = (0..len).map(|i| digits(i, s as usize, n)).collect();
        for a in &lines {
            let inner: Vec<u8> = points
                .iter()
                .map(|y| a.iter().zip(y).fold(0u8, |acc, (&ai, &yi)| add(acc, mul(ai, yi, s), s)))
                .collect();
            for u in self.unary.rows() {
                let v: Vec<u8> = inner.iter().map(|&t| u[t as usize]).collect();
                out.insert(&v);
                if out.is_full() {
                    return Ok(out);
                }
            }
        }
        Ok(out)
    }

    pub fn member(&self, f: &CoeffFun) -> Result<bool> {
        if f.src != self.src || f.dst != self.dst {
            return invalid("function and clonoid have different moduli");
        }
        if f.is_zero() {
            return Ok(true);
        }
        Ok(self.slice(f.arity)?.contains(&f.table))
    }

    /// Unary functions in the order of their table read as a base-dst number,
    /// the value at 0 least significant.
    fn unary_functions(src: u8, dst: u8) -> Result<impl Iterator<Item = Vec<u8>>> {
        let count = (dst as u64).checked_pow(src as u32).filter(|&c| c <= MAX_UNARY_SPACE).ok_or_else(|| {
            Error::Resource(format!("{dst}^{src} unary functions exceed the scan limit"))
        })?;
        Ok((0..count).map(move |i| digits(i as usize, dst as usize, src as usize)))
    }

    /// The first unary u in table order with Cig({u}) = self.
    pub fn unary_generator(&self) -> Result<CoeffFun> {
        if self.is_zero() {
            return invalid("the zero clonoid has no nonzero generator");
        }
        for u in Self::unary_functions(self.src, self.dst)? {
            if self.unary.contains(&u) && Clonoid::close_unary(self.src, self.dst, [u.as_slice()]) == *self {
                return Ok(CoeffFun { src: self.src, dst: self.dst, arity: 1, table: u });
            }
        }
        Err(Error::ContractViolation("clonoid has no single unary generator".into()))
    }
}

/// The clonoid generated by arbitrary-arity functions.
pub fn cig_closure(src: u8, dst: u8, xs: &[CoeffFun], arity_cap: usize) -> Result<Clonoid> {
    let mut space = Subspace::zero(dst, src as usize);
    for f in xs {
        if f.src != src || f.dst != dst {
            return invalid("generator has different moduli");
        }
        if f.arity > arity_cap {
            return invalid(format!("generator arity {} exceeds the cap {arity_cap}", f.arity));
        }
        // unary members of Cig(X) are the u(t) = f(a t) and their combinations
        let count = checked_pow(src as usize, f.arity)
            .filter(|&c| c <= MAX_SLICE_LEN)
            .ok_or_else(|| Error::Resource("generator arity too large".into()))?;
        for code in 0..count {
            let a = digits(code, src as usize, f.arity);
            let u: Vec<u8> = (0..src)
                .map(|t| {
                    let args: Vec<u8> = a.iter().map(|&ai| mul(ai, t, src)).collect();
                    f.eval(&args)
                })
                .collect();
            space.insert(&u);
        }
    }
    Ok(Clonoid { src, dst, unary: space })
}

/// Every clonoid of the given orientation, sorted by dimension then basis.
pub fn enumerate_clonoids(pp: PrimePair, orientation: Orientation) -> Result<Vec<Clonoid>> {
    let (src, dst) = orientation.moduli(pp);
    enumerate_clonoids_raw(src, dst)
}

pub fn enumerate_clonoids_raw(src: u8, dst: u8) -> Result<Vec<Clonoid>> {
    // every clonoid is the join of the cyclic clonoids of its members
    let mut found: BTreeSet<Clonoid> = BTreeSet::new();
    for u in Clonoid::unary_functions(src, dst)? {
        found.insert(Clonoid::close_unary(src, dst, [u.as_slice()]));
    }
    loop {
        let current: Vec<Clonoid> = found.iter().cloned().collect();
        let mut grew = false;
        for (i, a) in current.iter().enumerate() {
            for b in &current[i + 1..] {
                grew |= found.insert(a.join(b)?);
            }
        }
        if !grew {
            break;
        }
    }
    let mut out: Vec<Clonoid> = found.into_iter().collect();
    out.sort_by(|a, b| (a.dim(), a.unary.rows()).cmp(&(b.dim(), b.unary.rows())));
    Ok(out)
}
