//! Univariate polynomials over Z_p and factorization by trial division.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::zmod::{add, inv, is_prime, mul, neg, sub};

pub const MAX_FACTOR_DEGREE: usize = 64;

/// Coefficients low degree first, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PolyZp {
    pub modulus: u8,
    pub coeffs: Vec<u8>,
}

impl PolyZp {
    pub fn new(modulus: u8, coeffs: Vec<u8>) -> Self {
        let mut coeffs: Vec<u8> = coeffs.into_iter().map(|c| c % modulus).collect();
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        PolyZp { modulus, coeffs }
    }

    /// x^n - 1 over Z_m.
    pub fn x_pow_minus_one(modulus: u8, n: usize) -> Self {
        let mut c = vec![0u8; n + 1];
        c[0] = neg(1, modulus);
        c[n] = 1;
        PolyZp::new(modulus, c)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial has none.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last() == Some(&1)
    }

    pub fn eval(&self, x: u8) -> u8 {
        let m = self.modulus;
        self.coeffs.iter().rev().fold(0, |acc, &c| add(mul(acc, x, m), c, m))
    }

    pub fn mul(&self, other: &PolyZp) -> PolyZp {
        let m = self.modulus;
        if self.is_zero() || other.is_zero() {
            return PolyZp::new(m, vec![]);
        }
        let mut out = vec![0u8; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = add(out[i + j], mul(a, b, m), m);
            }
        }
        PolyZp::new(m, out)
    }

    /// Quotient and remainder; `divisor` must be nonzero.
    pub fn div_rem(&self, divisor: &PolyZp) -> (PolyZp, PolyZp) {
        let m = self.modulus;
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead_inv = inv(divisor.coeffs[dd], m);
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0u8; self.coeffs.len().saturating_sub(dd).max(1)];
        while rem.len() > dd {
            let k = rem.len() - 1 - dd;
            let f = mul(*rem.last().unwrap(), lead_inv, m);
            quot[k] = f;
            for (i, &c) in divisor.coeffs.iter().enumerate() {
                rem[k + i] = sub(rem[k + i], mul(f, c, m), m);
            }
            while rem.last() == Some(&0) {
                rem.pop();
            }
        }
        (PolyZp::new(m, quot), PolyZp::new(m, rem))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub modulus: u8,
    /// Monic irreducible factors with multiplicities, sorted by degree then coefficients.
    pub factors: Vec<(PolyZp, u32)>,
}

impl Factorization {
    pub fn product(&self) -> PolyZp {
        let mut acc = PolyZp::new(self.modulus, vec![1]);
        for (f, k) in &self.factors {
            for _ in 0..*k {
                acc = acc.mul(f);
            }
        }
        acc
    }

    pub fn multiplicities(&self) -> Vec<u32> {
        self.factors.iter().map(|(_, k)| *k).collect()
    }
}

fn monic_of_degree(m: u8, d: usize) -> impl Iterator<Item = PolyZp> {
    let count = (m as u64).pow(d as u32);
    (0..count).map(move |mut idx| {
        let mut c = Vec::with_capacity(d + 1);
        for _ in 0..d {
            c.push((idx % m as u64) as u8);
            idx /= m as u64;
        }
        c.push(1);
        PolyZp::new(m, c)
    })
}

/// True if `f` has no monic divisor of degree in [1, deg/2].
pub fn is_irreducible(f: &PolyZp) -> bool {
    let Some(d) = f.degree() else { return false };
    if d == 0 {
        return false;
    }
    (1..=d / 2).all(|k| monic_of_degree(f.modulus, k).all(|g| !f.div_rem(&g).1.is_zero()))
}

pub fn factor_over_zp(f: &PolyZp) -> Result<Factorization> {
    let m = f.modulus;
    if !is_prime(m as u64) {
        return invalid(format!("modulus {m} is not prime"));
    }
    let Some(deg) = f.degree() else {
        return invalid("cannot factor the zero polynomial");
    };
    if !f.is_monic() {
        return invalid("polynomial is not monic");
    }
    if deg == 0 || deg > MAX_FACTOR_DEGREE {
        return invalid(format!("degree {deg} outside [1, {MAX_FACTOR_DEGREE}]"));
    }
    let mut rest = f.clone();
    let mut factors = Vec::new();
    let mut k = 1;
    while rest.degree().unwrap_or(0) >= 1 {
        if 2 * k > rest.degree().unwrap() {
            // no divisor up to half the degree: what is left is irreducible
            factors.push((rest.clone(), 1));
            break;
        }
        for g in monic_of_degree(m, k) {
            let mut mult = 0;
            loop {
                let (qt, r) = rest.div_rem(&g);
                if !r.is_zero() {
                    break;
                }
                rest = qt;
                mult += 1;
            }
            if mult > 0 {
                factors.push((g, mult));
            }
        }
        k += 1;
    }
    factors.sort_by(|(a, _), (b, _)| (a.coeffs.len(), &a.coeffs).cmp(&(b.coeffs.len(), &b.coeffs)));
    let out = Factorization { modulus: m, factors };
    debug_assert_eq!(out.product(), *f);
    Ok(out)
}
