//! Fixed-point computation of clone signatures.
//!
//! A signature S describes the set F(S) of functions whose normal-form
//! coefficients all lie in their slots. F(S) is a clone exactly when it is
//! closed under composition with the catalog outers u(y_1) x_1..x_s (and the
//! q-side analogues), and that can be decided on two small domains:
//! p-side outers only produce p-part coefficients, which are all visible on
//! Z_p^2 x Z_q (two x variables, one y); q-side outers are checked on
//! Z_p x Z_q^2. On such a domain the restriction of F(S) is a product V x W of
//! explicit subspaces, so the composites u(Q) P_1..P_s span
//! span{u o Q : Q in W} . V^s, which we compute directly.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::clonoid::{cig_closure, Clonoid};
use crate::error::{invalid, Error, Result};
use crate::funtab::{MixedFun, Side};
use crate::linalg::Subspace;
use crate::zmod::{add, degree_slot, mul, pow, values_to_coeffs, PrimePair};

use super::{decompose, CloneSignature};

/// Most inner functions Q scanned for one outer slot.
pub const MAX_INNER_SCAN: u64 = 1 << 24;

#[derive(Clone, PartialEq, Eq, Hash)]
struct OuterKey {
    main: Side,
    slot: usize,
    outer: Subspace,
    main_part: Subspace,
    other_part: Subspace,
}

type Found = Arc<Vec<(usize, Vec<u8>)>>;

/// Closure engine for one prime pair, with caches shared across calls.
pub struct Engine {
    pp: PrimePair,
    outer_cache: Mutex<HashMap<OuterKey, Found>>,
    compose_cache: Mutex<HashMap<(Side, Subspace, Subspace), Arc<Subspace>>>,
    binary_cache: Mutex<HashMap<Clonoid, Arc<Subspace>>>,
    closure_cache: Mutex<HashMap<CloneSignature, CloneSignature>>,
}

/// Domain with two variables of modulus `a` (the main side) and one of modulus `b`.
#[derive(Clone, Copy)]
struct Domain {
    a: u8,
    b: u8,
}

impl Domain {
    fn len(self) -> usize {
        let a = self.a as usize;
        a * a * self.b as usize
    }

    fn points(self) -> impl Iterator<Item = (usize, u8, u8, u8)> {
        let (a, b) = (self.a, self.b);
        (0..b).flat_map(move |o| (0..a).flat_map(move |m2| (0..a).map(move |m1| (m1, m2, o))))
            .enumerate()
            .map(|(i, (m1, m2, o))| (i, m1, m2, o))
    }
}

impl Engine {
    pub fn new(pp: PrimePair) -> Self {
        Engine {
            pp,
            outer_cache: Mutex::default(),
            compose_cache: Mutex::default(),
            binary_cache: Mutex::default(),
            closure_cache: Mutex::default(),
        }
    }

    pub fn pp(&self) -> PrimePair {
        self.pp
    }

    /// Signature of the clone generated by `generators` and the linear maps.
    pub fn clg(&self, generators: &[MixedFun], work_arity: usize) -> Result<CloneSignature> {
        let pp = self.pp;
        let floor = pp.p().max(pp.q()) as usize;
        if work_arity < floor {
            return invalid(format!("work arity {work_arity} is below max(p, q) = {floor}"));
        }
        let mut sig = CloneSignature::bottom(pp);
        for g in generators {
            if g.pp() != pp {
                return invalid("generator over a different prime pair");
            }
            if g.arity() > work_arity {
                return invalid(format!("generator arity {} exceeds work arity {work_arity}", g.arity()));
            }
            let n = g.arity();
            let padded = MixedFun::from_fn(pp, work_arity, |xs, ys| g.eval(&xs[..n], &ys[..n]))?;
            for c in decompose(&padded) {
                let slot = &mut sig.slots_mut(c.side)[c.slot];
                let gen = cig_closure(slot.src(), slot.dst(), std::slice::from_ref(&c.coeff), c.coeff.arity)?;
                *slot = slot.join(&gen)?;
            }
        }
        self.close(sig)
    }

    /// Least closed signature above `start`.
    pub fn close(&self, start: CloneSignature) -> Result<CloneSignature> {
        if start.pp() != self.pp {
            return invalid("signature over a different prime pair");
        }
        if let Some(done) = self.closure_cache.lock().unwrap().get(&start) {
            return Ok(done.clone());
        }
        let mut sig = start.clone();
        sig.normalize();
        loop {
            let mut next = sig.clone();
            for main in [Side::P, Side::Q] {
                let found = self.discover(main, &sig)?;
                for (slot, vecs) in found.into_iter().enumerate() {
                    if vecs.is_empty() {
                        continue;
                    }
                    let old = &next.slots(main)[slot];
                    let rows = old.unary().rows().iter().chain(&vecs).map(|v| v.as_slice());
                    let grown = Clonoid::close_unary(old.src(), old.dst(), rows);
                    next.slots_mut(main)[slot] = grown;
                }
            }
            next.normalize();
            if next == sig {
                break;
            }
            sig = next;
        }
        self.closure_cache.lock().unwrap().insert(start, sig.clone());
        Ok(sig)
    }

    /// True when no outer composition leaves F(sig).
    pub fn is_closed(&self, sig: &CloneSignature) -> Result<bool> {
        Ok(self.close(sig.clone())? == *sig)
    }

    pub fn join(&self, a: &CloneSignature, b: &CloneSignature) -> Result<CloneSignature> {
        self.close(a.slotwise_join(b)?)
    }

    pub fn meet(&self, a: &CloneSignature, b: &CloneSignature) -> Result<CloneSignature> {
        self.close(a.slotwise_meet(b)?)
    }

    fn binary_slice(&self, c: &Clonoid) -> Result<Arc<Subspace>> {
        if let Some(s) = self.binary_cache.lock().unwrap().get(c) {
            return Ok(s.clone());
        }
        let s = Arc::new(c.slice(2)?);
        self.binary_cache.lock().unwrap().insert(c.clone(), s.clone());
        Ok(s)
    }

    /// Unary vectors found for each slot of `main` by one round of outers.
    fn discover(&self, main: Side, sig: &CloneSignature) -> Result<Vec<Vec<Vec<u8>>>> {
        let dom = Domain { a: main.modulus(self.pp), b: main.other().modulus(self.pp) };
        let mains = sig.slots(main);
        let main_part = main_space(dom, mains);
        let other_part = self.other_space(dom, sig.slots(main.other()))?;
        let mut found = vec![Vec::new(); mains.len()];
        for (s, outer) in mains.iter().enumerate() {
            if outer.is_zero() {
                continue;
            }
            let key = OuterKey {
                main,
                slot: s,
                outer: outer.unary().clone(),
                main_part: main_part.clone(),
                other_part: other_part.clone(),
            };
            let cached = self.outer_cache.lock().unwrap().get(&key).cloned();
            let result = match cached {
                Some(r) => r,
                None => {
                    let z = self.compose_span(main, dom, outer.unary(), &other_part)?;
                    let mut m = (*z).clone();
                    for _ in 0..s {
                        m = products(&m, &main_part);
                    }
                    let r: Found = Arc::new(m.rows().iter().flat_map(|row| split_coefficients(dom, row)).collect());
                    self.outer_cache.lock().unwrap().insert(key, r.clone());
                    r
                }
            };
            for (slot, v) in result.iter() {
                found[*slot].push(v.clone());
            }
        }
        Ok(found)
    }

    /// Other-side part of F(S) on the domain: G(m_1, m_2) o^e with G binary in slot e.
    fn other_space(&self, dom: Domain, others: &[Clonoid]) -> Result<Subspace> {
        let (a, b) = (dom.a, dom.b);
        let mut space = Subspace::zero(b, dom.len());
        for e in 0..b {
            let slice = self.binary_slice(&others[e as usize])?;
            for g in slice.rows() {
                let v: Vec<u8> = dom
                    .points()
                    .map(|(_, m1, m2, o)| mul(g[m1 as usize + a as usize * m2 as usize], pow(o, e as u64, b), b))
                    .collect();
                space.insert(&v);
            }
        }
        Ok(space)
    }

    /// span{u o Q : u in U, Q in W}, Z_a-valued.
    fn compose_span(&self, main: Side, dom: Domain, outer: &Subspace, w: &Subspace) -> Result<Arc<Subspace>> {
        let key = (main, outer.clone(), w.clone());
        if let Some(z) = self.compose_cache.lock().unwrap().get(&key) {
            return Ok(z.clone());
        }
        let z = Arc::new(compose_span(dom, outer, w)?);
        self.compose_cache.lock().unwrap().insert(key, z.clone());
        Ok(z)
    }
}

/// Main-side part of F(S) on the domain: r(o) m_1^e1 m_2^e2 with r in slot(e1 + e2).
fn main_space(dom: Domain, mains: &[Clonoid]) -> Subspace {
    let a = dom.a;
    let mut space = Subspace::zero(a, dom.len());
    for e2 in 0..a {
        for e1 in 0..a {
            let slot = degree_slot((e1 + e2) as usize, a);
            for r in mains[slot].unary().rows() {
                let v: Vec<u8> = dom
                    .points()
                    .map(|(_, m1, m2, o)| mul(r[o as usize], mul(pow(m1, e1 as u64, a), pow(m2, e2 as u64, a), a), a))
                    .collect();
                space.insert(&v);
            }
        }
    }
    space
}

fn compose_span(dom: Domain, outer: &Subspace, w: &Subspace) -> Result<Subspace> {
    let (a, b, n) = (dom.a, dom.b, dom.len());
    let mut z = Subspace::zero(a, n);
    if outer.is_zero() {
        return Ok(z);
    }
    let consts = Subspace::span(a, b as usize, [vec![1u8; b as usize]]);
    if outer.is_subspace_of(&consts) {
        z.insert(&vec![1u8; n]);
        return Ok(z);
    }
    // every u o Q is constant on the classes of points W cannot tell apart
    let mut classes: Vec<Vec<u8>> = (0..n).map(|j| w.rows().iter().map(|r| r[j]).collect()).collect();
    classes.sort();
    classes.dedup();
    let bound = classes.len();

    let k = w.rank();
    let total = (b as u64).checked_pow(k as u32).filter(|&t| t <= MAX_INNER_SCAN).ok_or_else(|| {
        Error::Resource(format!("{b}^{k} inner functions exceed the scan limit"))
    })?;
    let mut code = vec![0u8; k];
    let mut q = vec![0u8; n];
    for _ in 0..total {
        // Q up to a scalar: u(cQ) is the dilated u, already in U
        if code.iter().find(|&&d| d != 0).is_none_or(|&d| d == 1) {
            for u in outer.rows() {
                let v: Vec<u8> = q.iter().map(|&t| u[t as usize]).collect();
                z.insert(&v);
            }
            if z.rank() == bound {
                break;
            }
        }
        // odometer step: bumping digit i adds row i, and a wrap adds it b times
        for i in 0..k {
            code[i] += 1;
            for (qj, &wj) in q.iter_mut().zip(&w.rows()[i]) {
                *qj = add(*qj, wj, b);
            }
            if code[i] < b {
                break;
            }
            code[i] = 0;
        }
    }
    Ok(z)
}

fn products(m: &Subspace, v: &Subspace) -> Subspace {
    let a = m.modulus();
    let mut out = Subspace::zero(a, m.len());
    for x in m.rows() {
        for y in v.rows() {
            let prod: Vec<u8> = x.iter().zip(y).map(|(&s, &t)| mul(s, t, a)).collect();
            out.insert(&prod);
            if out.is_full() {
                return out;
            }
        }
    }
    out
}

/// Interpolate a main-part vector in the two main variables; each nonzero
/// coefficient function of the other variable goes to the slot of its degree.
fn split_coefficients(dom: Domain, row: &[u8]) -> Vec<(usize, Vec<u8>)> {
    let (a, b) = (dom.a as usize, dom.b as usize);
    let mut coeff = vec![vec![0u8; b]; a * a];
    for o in 0..b {
        let mut col = row[o * a * a..(o + 1) * a * a].to_vec();
        values_to_coeffs(&mut col, dom.a, 2);
        for (e, c) in col.into_iter().enumerate() {
            coeff[e][o] = c;
        }
    }
    coeff
        .into_iter()
        .enumerate()
        .filter(|(_, c)| c.iter().any(|&v| v != 0))
        .map(|(e, c)| (degree_slot(e % a + e / a, dom.a), c))
        .collect()
}
