//! Clones on Z_p x Z_q containing + , stored as signatures.
//!
//! Slot i of `rho` holds the coefficients r: Z_q^n -> Z_p such that
//! (r(y) x_1..x_i, 0) is in the clone (slot 0: (r(y), 0)); `psi` is the same
//! with the roles of p and q swapped. A function is in the clone iff each of
//! its normal-form coefficients lies in the slot of its degree.

mod closure;
mod prime;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clonoid::Clonoid;
use crate::error::{invalid, Error, Result};
use crate::funtab::{crt_split, induced_on, normal_form, CoeffFun, MixedFun, Side};
use crate::relations::classify;
use crate::zmod::{degree_slot, PrimePair};

pub use closure::{Engine, MAX_INNER_SCAN};
pub use prime::{enumerate_prime_clones, PrimeClone, MAX_PRIME_SLICE};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CloneSignature {
    pp: PrimePair,
    rho: Vec<Clonoid>,
    psi: Vec<Clonoid>,
}

#[derive(Serialize, Deserialize)]
struct SignatureRaw {
    p: u8,
    q: u8,
    rho: Vec<Clonoid>,
    psi: Vec<Clonoid>,
}

impl Serialize for CloneSignature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SignatureRaw { p: self.pp.p(), q: self.pp.q(), rho: self.rho.clone(), psi: self.psi.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CloneSignature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SignatureRaw::deserialize(d)?;
        let pp = PrimePair::new(raw.p as u32, raw.q as u32).map_err(serde::de::Error::custom)?;
        CloneSignature::from_slots(pp, raw.rho, raw.psi).map_err(serde::de::Error::custom)
    }
}

impl CloneSignature {
    /// Signature of the clone of linear maps.
    pub fn bottom(pp: PrimePair) -> Self {
        let (p, q) = (pp.p(), pp.q());
        let side = |src: u8, dst: u8| {
            (0..=dst as usize)
                .map(|i| if i == 1 { Clonoid::constants(src, dst) } else { Clonoid::zero(src, dst) })
                .collect()
        };
        CloneSignature { pp, rho: side(q, p), psi: side(p, q) }
    }

    /// Checks shapes and the coherence conditions, not closedness.
    pub fn from_slots(pp: PrimePair, rho: Vec<Clonoid>, psi: Vec<Clonoid>) -> Result<Self> {
        let (p, q) = (pp.p(), pp.q());
        if rho.len() != p as usize + 1 || psi.len() != q as usize + 1 {
            return invalid("signature needs p+1 rho slots and q+1 psi slots");
        }
        if rho.iter().any(|c| c.src() != q || c.dst() != p) || psi.iter().any(|c| c.src() != p || c.dst() != q) {
            return invalid("signature slot has the wrong orientation");
        }
        let sig = CloneSignature { pp, rho, psi };
        for side in [Side::P, Side::Q] {
            let s = sig.slots(side);
            let m = side.modulus(pp) as usize;
            if !s[1].contains_constants() || !s[m].is_subclonoid_of(&s[1]) {
                return invalid("slot 1 must contain the constants and the top slot");
            }
        }
        Ok(sig)
    }

    pub fn pp(&self) -> PrimePair {
        self.pp
    }

    pub fn rho(&self) -> &[Clonoid] {
        &self.rho
    }

    pub fn psi(&self) -> &[Clonoid] {
        &self.psi
    }

    pub fn slots(&self, side: Side) -> &[Clonoid] {
        match side {
            Side::P => &self.rho,
            Side::Q => &self.psi,
        }
    }

    pub(crate) fn slots_mut(&mut self, side: Side) -> &mut [Clonoid] {
        match side {
            Side::P => &mut self.rho,
            Side::Q => &mut self.psi,
        }
    }

    /// Slot dimensions, rho first.
    pub fn dims(&self) -> Vec<usize> {
        self.rho.iter().chain(&self.psi).map(Clonoid::dim).collect()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn id(&self) -> String {
        let json = serde_json::to_string(self).expect("signature serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Slotwise containment, which is clone inclusion.
    pub fn le(&self, other: &CloneSignature) -> bool {
        self.pp == other.pp
            && self.rho.iter().zip(&other.rho).all(|(a, b)| a.is_subclonoid_of(b))
            && self.psi.iter().zip(&other.psi).all(|(a, b)| a.is_subclonoid_of(b))
    }

    fn zip_with(&self, other: &CloneSignature, f: impl Fn(&Clonoid, &Clonoid) -> Result<Clonoid>) -> Result<Self> {
        if self.pp != other.pp {
            return invalid("signatures over different prime pairs");
        }
        let rho = self.rho.iter().zip(&other.rho).map(|(a, b)| f(a, b)).collect::<Result<_>>()?;
        let psi = self.psi.iter().zip(&other.psi).map(|(a, b)| f(a, b)).collect::<Result<_>>()?;
        Ok(CloneSignature { pp: self.pp, rho, psi })
    }

    pub fn slotwise_join(&self, other: &CloneSignature) -> Result<Self> {
        self.zip_with(other, Clonoid::join)
    }

    pub fn slotwise_meet(&self, other: &CloneSignature) -> Result<Self> {
        self.zip_with(other, Clonoid::meet)
    }

    /// Slot 1 contains the constants and the top slot.
    pub(crate) fn normalize(&mut self) {
        for side in [Side::P, Side::Q] {
            let m = side.modulus(self.pp) as usize;
            let slots = self.slots_mut(side);
            let (src, dst) = (slots[1].src(), slots[1].dst());
            let one = slots[1].join(&Clonoid::constants(src, dst)).and_then(|c| c.join(&slots[m]));
            slots[1] = one.expect("slots of one side share an orientation");
        }
    }

    pub fn flags(&self) -> CloneFlags {
        let const_only = |s: &[Clonoid]| s.iter().all(Clonoid::is_constant_only);
        let pi1 = const_only(&self.rho);
        let pi2 = const_only(&self.psi);
        let affine = |s: &[Clonoid]| {
            s[0].is_constant_only() && s[1].is_constant_only() && s[2..].iter().all(Clonoid::is_zero)
        };
        CloneFlags {
            preserves_pi1: pi1,
            preserves_pi2: pi2,
            preserves_diamond: pi1 && pi2,
            polynomial: self.rho[0].contains_constants() && self.psi[0].contains_constants(),
            pi1_pi1_zero: pi1 && self.psi[2..].iter().all(Clonoid::is_zero),
            one_one_le_pi1: affine(&self.rho),
            one_one_le_pi2: affine(&self.psi),
        }
    }
}

/// Congruence conditions read off a signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CloneFlags {
    pub preserves_pi1: bool,
    pub preserves_pi2: bool,
    pub preserves_diamond: bool,
    /// Contains every constant function.
    pub polynomial: bool,
    /// Preserves pi1 and [pi1, pi1] = 0.
    pub pi1_pi1_zero: bool,
    /// [1, 1] <= pi1.
    pub one_one_le_pi1: bool,
    /// [1, 1] <= pi2.
    pub one_one_le_pi2: bool,
}

impl CloneFlags {
    pub fn labels(&self) -> Vec<&'static str> {
        let named = [
            (self.preserves_pi1, "pi1"),
            (self.preserves_pi2, "pi2"),
            (self.preserves_diamond, "diamond"),
            (self.polynomial, "polynomial"),
            (self.pi1_pi1_zero, "[pi1,pi1]=0"),
            (self.one_one_le_pi1, "[1,1]<=pi1"),
            (self.one_one_le_pi2, "[1,1]<=pi2"),
        ];
        named.into_iter().filter(|(on, _)| *on).map(|(_, l)| l).collect()
    }
}

pub fn bottom_signature(pp: PrimePair) -> CloneSignature {
    CloneSignature::bottom(pp)
}

/// One normal-form coefficient and the slot it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contribution {
    pub side: Side,
    pub slot: usize,
    pub coeff: CoeffFun,
}

pub fn decompose(f: &MixedFun) -> Vec<Contribution> {
    let (fp, fq) = crt_split(f);
    let mut out = Vec::new();
    for (side, part) in [(Side::P, fp), (Side::Q, fq)] {
        let m = side.modulus(f.pp());
        for (exp, coeff) in normal_form(&part).side(side) {
            let deg: usize = exp.iter().map(|&e| e as usize).sum();
            out.push(Contribution { side, slot: degree_slot(deg, m), coeff: coeff.clone() });
        }
    }
    out
}

pub fn member(sig: &CloneSignature, f: &MixedFun) -> Result<bool> {
    if f.pp() != sig.pp {
        return invalid("function and signature over different prime pairs");
    }
    for c in decompose(f) {
        if !sig.slots(c.side)[c.slot].member(&c.coeff)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn clg_signature(generators: &[MixedFun], work_arity: usize) -> Result<CloneSignature> {
    let pp = match generators.first() {
        Some(g) => g.pp(),
        None => return invalid("cannot infer the prime pair from an empty generator list; use Engine::clg"),
    };
    Engine::new(pp).clg(generators, work_arity)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorCatalog {
    pub functions: Vec<MixedFun>,
}

/// (x_1 + x_2, y_1 + y_2).
pub fn addition(pp: PrimePair) -> MixedFun {
    MixedFun::from_fn(pp, 2, |xs, ys| ((xs[0] + xs[1]) % pp.p(), (ys[0] + ys[1]) % pp.q()))
        .expect("binary table fits")
}

/// Induced monomial (u(y_1) x_1..x_i, 0) for unary u, or its q-side analogue; arity max(i, 1).
pub fn slot_monomial(pp: PrimePair, side: Side, slot: usize, u: &CoeffFun) -> Result<MixedFun> {
    induced_on(pp, side, u, &vec![1u8; slot], slot.max(1))
}

pub fn generator_catalog(sig: &CloneSignature) -> Result<GeneratorCatalog> {
    let pp = sig.pp;
    let mut functions = vec![addition(pp)];
    for side in [Side::P, Side::Q] {
        for (i, slot) in sig.slots(side).iter().enumerate() {
            if slot.is_zero() || (i == 1 && slot.is_constant_only()) {
                continue;
            }
            let mut us = vec![slot.unary_generator()?];
            us.extend(slot.unary_basis());
            for u in us {
                if i == 1 && u.is_constant() {
                    continue;
                }
                let f = slot_monomial(pp, side, i, &u)?;
                if !functions.contains(&f) {
                    functions.push(f);
                }
            }
        }
    }
    Ok(GeneratorCatalog { functions })
}

/// Signature of the clone {e(g) + h : g in C, h linear}, e(g) = (g(y), 0).
pub fn gamma_embed(engine: &Engine, c: &Clonoid) -> Result<CloneSignature> {
    let pp = engine.pp();
    if c.src() != pp.q() || c.dst() != pp.p() {
        return invalid("gamma takes a clonoid of functions Z_q^n -> Z_p");
    }
    let gens = c.unary_basis().iter().map(|u| slot_monomial(pp, Side::P, 0, u)).collect::<Result<Vec<_>>>()?;
    engine.clg(&gens, pp.p().max(pp.q()) as usize)
}

/// The two prime-side clones of a clone that preserves pi1 and pi2.
pub fn independent_split(sig: &CloneSignature) -> Result<(PrimeClone, PrimeClone)> {
    if !sig.flags().preserves_diamond {
        return invalid("clone does not preserve both pi1 and pi2");
    }
    for f in generator_catalog(sig)?.functions {
        let r = classify(&f)?;
        if !(r.preserves_pi1 && r.preserves_pi2) {
            return Err(Error::InternalConsistency(format!(
                "catalog member {} breaks the diamond although the signature preserves it",
                f.to_text()
            )));
        }
    }
    Ok((side_clone(sig, Side::P)?, side_clone(sig, Side::Q)?))
}

fn side_clone(sig: &CloneSignature, side: Side) -> Result<PrimeClone> {
    let slots = sig.slots(side);
    PrimeClone::generated(side.modulus(sig.pp), (0..slots.len()).filter(|&i| !slots[i].is_zero()))
}

/// Inverse of [`independent_split`]: the clone of all (f_1(x), f_2(y)).
pub fn from_split(pp: PrimePair, a: &PrimeClone, b: &PrimeClone) -> Result<CloneSignature> {
    if a.modulus() != pp.p() || b.modulus() != pp.q() {
        return invalid("prime clones do not match the prime pair");
    }
    let side = |c: &PrimeClone, src: u8, dst: u8| -> Vec<Clonoid> {
        (0..=dst as usize)
            .map(|i| if c.degrees().contains(&i) { Clonoid::constants(src, dst) } else { Clonoid::zero(src, dst) })
            .collect()
    };
    CloneSignature::from_slots(pp, side(a, pp.q(), pp.p()), side(b, pp.p(), pp.q()))
}

/// For clones preserving pi1 with [pi1, pi1] = 0: the Z_p clone of the
/// x-part, the slot-1 coefficients of y and the slot-0 coefficients.
pub fn pi1_profile(sig: &CloneSignature) -> Result<(PrimeClone, Clonoid, Clonoid)> {
    if !sig.flags().pi1_pi1_zero {
        return invalid("clone does not preserve pi1 with [pi1, pi1] = 0");
    }
    for f in generator_catalog(sig)?.functions {
        let r = classify(&f)?;
        if !(r.preserves_pi1 && r.preserves_pi1_pi1_zero) {
            return Err(Error::InternalConsistency(format!(
                "catalog member {} breaks [pi1, pi1] = 0 although the signature preserves it",
                f.to_text()
            )));
        }
    }
    Ok((side_clone(sig, Side::P)?, sig.psi[1].clone(), sig.psi[0].clone()))
}
