//! Counting formulas for clonoid and clone lattices over Z_p x Z_q.

use serde::{Deserialize, Serialize};

use crate::poly::{factor_over_zp, Factorization, PolyZp};
use crate::zmod::{n_divisors_pred, PrimePair};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub factor: Vec<u8>,
    pub multiplicity: u32,
}

/// The two closed-form worst-case envelopes. They disagree with each other,
/// so both are reported and neither is used as a check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelopes {
    pub pow2_qp_q_p: u128,
    pub pow2_2qp_q_p: u128,
    pub inconsistent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub p: u8,
    pub q: u8,
    pub clonoids_pq: u128,
    pub clonoids_qp: u128,
    pub clone_lower: u128,
    pub clone_upper: u128,
    pub diamond_count: u128,
    pub pi1_upper: u128,
    pub gp_factors: Vec<FactorEntry>,
    pub gq_factors: Vec<FactorEntry>,
    pub envelopes: Envelopes,
}

/// Factorization of x^(n-1) - 1 over Z_m.
pub fn cyclotomic_part(m: u8, n: u8) -> Factorization {
    factor_over_zp(&PolyZp::x_pow_minus_one(m, n as usize - 1))
        .expect("x^(n-1) - 1 is monic of degree >= 1")
}

fn entries(f: &Factorization) -> Vec<FactorEntry> {
    f.factors
        .iter()
        .map(|(g, k)| FactorEntry { factor: g.coeffs.clone(), multiplicity: *k })
        .collect()
}

fn prod_plus_one(f: &Factorization, power: u32) -> u128 {
    f.multiplicities().iter().map(|&k| (k as u128 + 1).pow(power)).product()
}

/// Number of clonoids of functions Z_src^n -> Z_dst, from the multiplicities
/// of x^(src-1) - 1 over Z_dst.
pub fn clonoid_count(dst: u8, src: u8) -> u128 {
    2 * prod_plus_one(&cyclotomic_part(dst, src), 1)
}

pub fn count_report(pp: PrimePair) -> BoundsReport {
    let (p, q) = (pp.p(), pp.q());
    let gp = cyclotomic_part(p, q);
    let gq = cyclotomic_part(q, p);
    let kp = prod_plus_one(&gp, 1);
    let kq = prod_plus_one(&gq, 1);
    let clonoids_pq = 2 * kp;
    let clonoids_qp = 2 * kq;
    let clone_upper = (1u128 << (p as u32 + q as u32 + 2))
        * prod_plus_one(&gp, p as u32 + 1)
        * prod_plus_one(&gq, q as u32 + 1);
    let np = n_divisors_pred(p as u64) as u128;
    let nq = n_divisors_pred(q as u64) as u128;
    let qp = p as u32 * q as u32;
    BoundsReport {
        p,
        q,
        clonoids_pq,
        clonoids_qp,
        clone_lower: clonoids_pq + clonoids_qp - 1,
        clone_upper,
        diamond_count: (nq + 3) * (np + 3),
        pi1_upper: (np + 3) * clonoids_qp * clonoids_qp,
        gp_factors: entries(&gp),
        gq_factors: entries(&gq),
        envelopes: Envelopes {
            pow2_qp_q_p: 1u128 << (qp + p as u32 + q as u32),
            pow2_2qp_q_p: 1u128 << (2 * qp + p as u32 + q as u32),
            inconsistent: true,
        },
    }
}
