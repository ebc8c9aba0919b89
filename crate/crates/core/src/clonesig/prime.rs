//! Clones on Z_m (m prime) that contain addition.
//!
//! Such a clone is the span of the monomials whose total degree falls in a
//! set D of slots (0, 1, and 2..m by degree mod m-1), with 1 in D. We keep
//! D and materialize slices on demand.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Subspace;
use crate::zmod::{checked_pow, coeffs_to_values, degree_slot, digits, is_prime, values_to_coeffs};

/// Largest slice materialized by [`PrimeClone::slice`].
pub const MAX_PRIME_SLICE: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimeClone {
    modulus: u8,
    degrees: BTreeSet<usize>,
}

impl PrimeClone {
    /// Closure of the given slot set.
    pub fn generated(modulus: u8, degrees: impl IntoIterator<Item = usize>) -> Result<Self> {
        if !is_prime(modulus as u64) {
            return invalid(format!("{modulus} is not prime"));
        }
        let mut d: BTreeSet<usize> = degrees.into_iter().collect();
        if d.iter().any(|&s| s > modulus as usize) {
            return invalid("slot exceeds the modulus");
        }
        d.insert(1);
        Ok(PrimeClone { modulus, degrees: close(modulus, d) })
    }

    pub fn linear(modulus: u8) -> Result<Self> {
        Self::generated(modulus, [1])
    }

    pub fn all(modulus: u8) -> Result<Self> {
        Self::generated(modulus, 0..=modulus as usize)
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    pub fn degrees(&self) -> &BTreeSet<usize> {
        &self.degrees
    }

    pub fn is_subclone_of(&self, other: &PrimeClone) -> bool {
        self.modulus == other.modulus && self.degrees.is_subset(&other.degrees)
    }

    /// Whether the function with this value table (arity n, first variable
    /// least significant) lies in the clone.
    pub fn contains(&self, arity: usize, table: &[u8]) -> Result<bool> {
        if checked_pow(self.modulus as usize, arity) != Some(table.len()) {
            return invalid("table length does not match arity");
        }
        let mut c = table.to_vec();
        values_to_coeffs(&mut c, self.modulus, arity);
        Ok(c.iter().enumerate().all(|(i, &v)| v == 0 || self.degrees.contains(&self.slot_of(i, arity))))
    }

    fn slot_of(&self, index: usize, arity: usize) -> usize {
        let deg: usize = digits(index, self.modulus as usize, arity).iter().map(|&e| e as usize).sum();
        degree_slot(deg, self.modulus)
    }

    /// The n-ary members as a subspace of value tables.
    pub fn slice(&self, arity: usize) -> Result<Subspace> {
        let m = self.modulus;
        let len = checked_pow(m as usize, arity)
            .filter(|&l| l <= MAX_PRIME_SLICE)
            .ok_or_else(|| Error::Resource(format!("arity-{arity} slice over Z_{m} is too large")))?;
        let mut out = Subspace::zero(m, len);
        for i in 0..len {
            if self.degrees.contains(&self.slot_of(i, arity)) {
                let mut v = vec![0u8; len];
                v[i] = 1;
                coeffs_to_values(&mut v, m, arity);
                out.insert(&v);
            }
        }
        Ok(out)
    }
}

/// Add slot(a_1 + .. + a_d) for every outer slot d >= 1 in D and inner slots a_i in D.
fn close(m: u8, mut d: BTreeSet<usize>) -> BTreeSet<usize> {
    loop {
        let mut next = d.clone();
        for &outer in d.iter().filter(|&&s| s >= 1) {
            let mut sums = BTreeSet::from([0usize]);
            for _ in 0..outer {
                sums = sums.iter().flat_map(|&s| d.iter().map(move |&a| s + a)).collect();
            }
            next.extend(sums.into_iter().map(|s| degree_slot(s, m)));
        }
        if next == d {
            return d;
        }
        d = next;
    }
}

/// Every clone on Z_m above the linear maps, sorted.
pub fn enumerate_prime_clones(m: u8) -> Result<Vec<PrimeClone>> {
    if !is_prime(m as u64) || m > 13 {
        return invalid(format!("{m} is not a supported prime"));
    }
    let top = m as usize + 1;
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << top) {
        let d: BTreeSet<usize> = (0..top).filter(|i| mask >> i & 1 == 1).collect();
        if d.contains(&1) && close(m, d.clone()) == d {
            out.insert(PrimeClone { modulus: m, degrees: d });
        }
    }
    Ok(out.into_iter().collect())
}
