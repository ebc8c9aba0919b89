//! Reduced polynomials over the coefficient ring of functions Z_q^n -> Z_p,
//! with exponents at most p - 1, and the constructive extraction procedures.
//!
//! Variables are numbered from 0. Exponent vectors are stored with trailing
//! zeros removed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::funtab::{compose, induced, linear_map, CoeffFun, MixedFun, MAX_TABLE_LEN};
use crate::linalg::Subspace;
use crate::zmod::{add, checked_pow, digits, inv, mul, neg, pow, reduce_exponent, ModVec, PrimePair};

fn trim(mut e: Vec<u8>) -> Vec<u8> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

pub fn total_degree(e: &[u8]) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RPoly {
    pp: PrimePair,
    coeff_arity: usize,
    terms: BTreeMap<Vec<u8>, CoeffFun>,
}

#[derive(Serialize, Deserialize)]
struct TermRaw<E> {
    exp: Vec<E>,
    coeff: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct PolyRaw<E> {
    p: u8,
    q: u8,
    coeff_arity: usize,
    terms: Vec<TermRaw<E>>,
}

impl Serialize for RPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRaw {
            p: self.pp.p(),
            q: self.pp.q(),
            coeff_arity: self.coeff_arity,
            terms: self.terms.iter().map(|(e, c)| TermRaw { exp: e.clone(), coeff: c.table.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyRaw::<u8>::deserialize(d)?;
        let pp = PrimePair::new(raw.p as u32, raw.q as u32).map_err(serde::de::Error::custom)?;
        let mut out = RPoly::zero(pp, raw.coeff_arity);
        for t in raw.terms {
            if t.exp.iter().any(|&e| e >= pp.p()) {
                return Err(serde::de::Error::custom("exponent exceeds p - 1"));
            }
            let c = CoeffFun::new(pp.q(), pp.p(), raw.coeff_arity, t.coeff).map_err(serde::de::Error::custom)?;
            out.add_term(t.exp, &c);
        }
        Ok(out)
    }
}

/// A polynomial whose exponents are not yet reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPoly {
    pub pp: PrimePair,
    pub coeff_arity: usize,
    pub terms: Vec<(Vec<u64>, CoeffFun)>,
}

impl<'de> Deserialize<'de> for RawPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyRaw::<u64>::deserialize(d)?;
        let pp = PrimePair::new(raw.p as u32, raw.q as u32).map_err(serde::de::Error::custom)?;
        let terms = raw
            .terms
            .into_iter()
            .map(|t| Ok((t.exp, CoeffFun::new(pp.q(), pp.p(), raw.coeff_arity, t.coeff)?)))
            .collect::<Result<_>>()
            .map_err(serde::de::Error::custom)?;
        Ok(RawPoly { pp, coeff_arity: raw.coeff_arity, terms })
    }
}

/// Reduce exponents with x^p = x and merge like terms.
pub fn reduce(raw: &RawPoly) -> Result<RPoly> {
    let mut out = RPoly::zero(raw.pp, raw.coeff_arity);
    for (e, c) in &raw.terms {
        if c.src != raw.pp.q() || c.dst != raw.pp.p() || c.arity != raw.coeff_arity {
            return invalid("coefficient has the wrong shape");
        }
        out.add_term(e.iter().map(|&x| reduce_exponent(x, raw.pp.p())).collect(), c);
    }
    Ok(out)
}

impl RPoly {
    pub fn zero(pp: PrimePair, coeff_arity: usize) -> Self {
        RPoly { pp, coeff_arity, terms: BTreeMap::new() }
    }

    pub fn monomial(pp: PrimePair, coeff: &CoeffFun, exp: &[u8]) -> Result<Self> {
        if coeff.src != pp.q() || coeff.dst != pp.p() {
            return invalid("coefficient has the wrong moduli");
        }
        if exp.iter().any(|&e| e >= pp.p()) {
            return invalid("exponent exceeds p - 1");
        }
        let mut out = RPoly::zero(pp, coeff.arity);
        out.add_term(exp.to_vec(), coeff);
        Ok(out)
    }

    /// Z_p-linear form sum a_i x_i with constant coefficients.
    pub fn linear_form(pp: PrimePair, coeff_arity: usize, a: &[u8]) -> Self {
        let mut out = RPoly::zero(pp, coeff_arity);
        for (i, &ai) in a.iter().enumerate() {
            let mut e = vec![0u8; i + 1];
            e[i] = 1;
            out.add_term(e, &CoeffFun::constant(pp.q(), pp.p(), coeff_arity, ai % pp.p()));
        }
        out
    }

    fn add_term(&mut self, exp: Vec<u8>, c: &CoeffFun) {
        let key = trim(exp);
        let sum = match self.terms.get(&key) {
            Some(old) => old.add(c),
            None => c.clone(),
        };
        if sum.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, sum);
        }
    }

    pub fn pp(&self) -> PrimePair {
        self.pp
    }

    pub fn coeff_arity(&self) -> usize {
        self.coeff_arity
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u8>, CoeffFun> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exp: &[u8]) -> Option<&CoeffFun> {
        self.terms.get(&trim(exp.to_vec()))
    }

    /// One more than the largest variable index in use (0 for constants).
    pub fn mind(&self) -> usize {
        self.terms.keys().map(|e| e.len()).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<usize> {
        self.terms.keys().flat_map(|e| e.iter().enumerate().filter(|(_, &x)| x > 0).map(|(i, _)| i)).collect()
    }

    pub fn max_total_degree(&self) -> Option<usize> {
        self.terms.keys().map(|e| total_degree(e)).max()
    }

    fn check_same(&self, other: &RPoly) -> Result<()> {
        if self.pp != other.pp || self.coeff_arity != other.coeff_arity {
            return invalid("polynomials differ in prime pair or coefficient arity");
        }
        Ok(())
    }

    pub fn add(&self, other: &RPoly) -> Result<RPoly> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: u8) -> RPoly {
        let mut out = RPoly::zero(self.pp, self.coeff_arity);
        for (e, r) in &self.terms {
            out.add_term(e.clone(), &r.scale(c % self.pp.p()));
        }
        out
    }

    pub fn sub(&self, other: &RPoly) -> Result<RPoly> {
        self.add(&other.scale(neg(1, self.pp.p())))
    }

    pub fn mul(&self, other: &RPoly) -> Result<RPoly> {
        self.check_same(other)?;
        let p = self.pp.p() as u64;
        let mut out = RPoly::zero(self.pp, self.coeff_arity);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let len = e1.len().max(e2.len());
                let e: Vec<u8> = (0..len)
                    .map(|i| {
                        let s = *e1.get(i).unwrap_or(&0) as u64 + *e2.get(i).unwrap_or(&0) as u64;
                        reduce_exponent(s, p as u8)
                    })
                    .collect();
                out.add_term(e, &c1.mul(c2));
            }
        }
        Ok(out)
    }

    fn one(&self) -> RPoly {
        let mut out = RPoly::zero(self.pp, self.coeff_arity);
        out.add_term(vec![], &CoeffFun::constant(self.pp.q(), self.pp.p(), self.coeff_arity, 1));
        out
    }

    /// Simultaneous substitution of `gs[j]` for variable `b[j]`, then reduction.
    pub fn compose_at(&self, b: &[usize], gs: &[RPoly]) -> Result<RPoly> {
        if b.len() != gs.len() {
            return invalid("index vector and substituted polynomials differ in length");
        }
        if b.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("substitution indices must be strictly increasing");
        }
        for g in gs {
            self.check_same(g)?;
        }
        let mut out = RPoly::zero(self.pp, self.coeff_arity);
        for (e, c) in &self.terms {
            let mut acc = RPoly::zero(self.pp, self.coeff_arity);
            let mut rest = e.clone();
            for &bi in b {
                if bi < rest.len() {
                    rest[bi] = 0;
                }
            }
            acc.add_term(rest, c);
            for (&bi, g) in b.iter().zip(gs) {
                let k = *e.get(bi).unwrap_or(&0);
                let mut power = self.one();
                for _ in 0..k {
                    power = power.mul(g)?;
                }
                acc = acc.mul(&power)?;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Substitute the Z_p-linear form sum form[i] x_i for variable `var`.
    pub fn substitute(&self, var: usize, form: &[u8]) -> RPoly {
        let g = RPoly::linear_form(self.pp, self.coeff_arity, form);
        self.compose_at(&[var], &[g]).expect("shapes agree by construction")
    }

    fn coeff_table_len(&self) -> usize {
        (self.pp.q() as usize).pow(self.coeff_arity as u32)
    }

    /// Values at x in Z_p^k (k >= MInd) and y in Z_q^n, index x + p^k y.
    fn values(&self, k: usize) -> Vec<u8> {
        let p = self.pp.p();
        let pk = (p as usize).pow(k as u32);
        let mut out = vec![0u8; pk * self.coeff_table_len()];
        for xi in 0..pk {
            let x = digits(xi, p as usize, k);
            for (e, c) in &self.terms {
                let mono = e.iter().zip(&x).fold(1u8, |v, (&ei, &xv)| mul(v, pow(xv, ei as u64, p), p));
                if mono == 0 {
                    continue;
                }
                for (yi, &cv) in c.table.iter().enumerate() {
                    let slot = &mut out[xi + pk * yi];
                    *slot = add(*slot, mul(mono, cv, p), p);
                }
            }
        }
        out
    }

    /// The s-ary induced function (x, y) -> (f(x)(y), 0).
    pub fn induced(&self, s: usize) -> Result<MixedFun> {
        if s < self.mind() || s < self.coeff_arity {
            return invalid("arity too small for this polynomial");
        }
        let mut out = MixedFun::constant(self.pp, s, (0, 0))?;
        for (e, c) in &self.terms {
            out = out.add(&induced(self.pp, c, e, s)?)?;
        }
        Ok(out)
    }
}

/// One application of a closure rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Step {
    /// sum c_i * poly[i] over earlier polynomials.
    Combine { terms: Vec<(u8, usize)>, result: RPoly },
    /// poly[source] with variable `var` replaced by sum form[i] x_i.
    Substitute { source: usize, var: usize, form: Vec<u8>, result: RPoly },
}

impl Step {
    pub fn result(&self) -> &RPoly {
        match self {
            Step::Combine { result, .. } | Step::Substitute { result, .. } => result,
        }
    }
}

/// Polynomial 0 is `start`; polynomial k + 1 is the result of step k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub start: RPoly,
    pub steps: Vec<Step>,
}

impl Derivation {
    pub fn result(&self) -> &RPoly {
        self.steps.last().map(Step::result).unwrap_or(&self.start)
    }

    /// Recompute every step from its rule and check the recorded results.
    pub fn replay(&self) -> Result<RPoly> {
        let mut polys = vec![self.start.clone()];
        for (k, step) in self.steps.iter().enumerate() {
            let got = match step {
                Step::Combine { terms, .. } => {
                    let mut acc = RPoly::zero(self.start.pp, self.start.coeff_arity);
                    for &(c, i) in terms {
                        let src = polys.get(i).ok_or_else(|| Error::InvalidInput(format!("step {k} refers ahead")))?;
                        acc = acc.add(&src.scale(c))?;
                    }
                    acc
                }
                Step::Substitute { source, var, form, .. } => polys
                    .get(*source)
                    .ok_or_else(|| Error::InvalidInput(format!("step {k} refers ahead")))?
                    .substitute(*var, form),
            };
            if got != *step.result() {
                return Err(Error::InternalConsistency(format!("step {k} does not replay")));
            }
            polys.push(got);
        }
        Ok(polys.pop().unwrap())
    }
}

struct Builder {
    polys: Vec<RPoly>,
    steps: Vec<Step>,
}

impl Builder {
    fn new(start: RPoly) -> Self {
        Builder { polys: vec![start], steps: Vec::new() }
    }

    fn poly(&self, i: usize) -> &RPoly {
        &self.polys[i]
    }

    fn combine(&mut self, terms: Vec<(u8, usize)>) -> Result<usize> {
        let base = self.polys[0].clone();
        let mut acc = RPoly::zero(base.pp, base.coeff_arity);
        for &(c, i) in &terms {
            acc = acc.add(&self.polys[i].scale(c))?;
        }
        self.steps.push(Step::Combine { terms, result: acc.clone() });
        self.polys.push(acc);
        Ok(self.polys.len() - 1)
    }

    fn substitute(&mut self, source: usize, var: usize, form: Vec<u8>) -> usize {
        let result = self.polys[source].substitute(var, &form);
        self.steps.push(Step::Substitute { source, var, form, result: result.clone() });
        self.polys.push(result);
        self.polys.len() - 1
    }

    /// Rename variables by the injective map `sigma` (absent keys are fixed),
    /// going through fresh indices so no two variables merge on the way.
    fn relabel(&mut self, mut cur: usize, sigma: &BTreeMap<usize, usize>) -> usize {
        let moved: Vec<(usize, usize)> = sigma.iter().filter(|(a, b)| a != b).map(|(&a, &b)| (a, b)).collect();
        if moved.is_empty() {
            return cur;
        }
        let live = self.poly(cur).vars();
        let top = moved.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap().max(self.poly(cur).mind());
        let mut parked = Vec::new();
        for (k, &(a, b)) in moved.iter().enumerate() {
            if live.contains(&a) {
                cur = self.substitute(cur, a, unit(top + k));
                parked.push((top + k, b));
            }
        }
        for (t, b) in parked {
            cur = self.substitute(cur, t, unit(b));
        }
        cur
    }

    fn finish(self) -> Derivation {
        let mut polys = self.polys;
        Derivation { start: polys.swap_remove(0), steps: self.steps }
    }
}

fn unit(i: usize) -> Vec<u8> {
    let mut v = vec![0u8; i + 1];
    v[i] = 1;
    v
}

fn ones(d: usize) -> Vec<u8> {
    vec![1u8; d]
}

/// Reduce h + g to h = r x_0 ... x_{d-1} when max TD(g) <= d and the
/// exponent 1_d does not occur in g.
pub fn strip_tail(h: &RPoly, g: &RPoly) -> Result<Derivation> {
    let d = check_strip_hypotheses(h, g)?;
    let mut b = Builder::new(h.add(g)?);
    strip_in(&mut b, 0, h, d)?;
    Ok(b.finish())
}

fn check_strip_hypotheses(h: &RPoly, g: &RPoly) -> Result<usize> {
    h.check_same(g)?;
    let mut it = h.terms.keys();
    let (Some(e), None) = (it.next(), it.next()) else {
        return invalid("h must be a single monomial");
    };
    if e.iter().any(|&x| x != 1) {
        return invalid("h must be r x_0 ... x_{d-1}");
    }
    let d = e.len();
    if g.max_total_degree().unwrap_or(0) > d {
        return invalid("g has a monomial of total degree above d");
    }
    if g.coeff(&ones(d)).is_some() {
        return invalid("g contains the exponent of h");
    }
    Ok(d)
}

fn strip_in(b: &mut Builder, mut cur: usize, h: &RPoly, d: usize) -> Result<usize> {
    let p = h.pp.p();
    let minus_one = neg(1, p);
    // variables outside x_0..x_{d-1} go to zero first
    let outside: Vec<usize> = b.poly(cur).vars().into_iter().filter(|&v| v >= d).collect();
    for v in outside {
        cur = b.substitute(cur, v, vec![]);
    }
    loop {
        let tail = b.poly(cur).sub(h)?;
        if tail.is_zero() {
            return Ok(cur);
        }
        // a tail monomial misses some x_l, so substituting 0 for x_l keeps
        // exactly the monomials without x_l; subtracting removes them
        let e = tail.terms.keys().next().unwrap();
        let l = (0..d).find(|&l| *e.get(l).unwrap_or(&0) == 0).ok_or_else(|| {
            Error::InternalConsistency("tail monomial contains every variable of h".into())
        })?;
        let zeroed = b.substitute(cur, l, vec![]);
        cur = b.combine(vec![(1, cur), (minus_one, zeroed)])?;
    }
}

fn lex_padded(a: &[u8], b: &[u8]) -> std::cmp::Ordering {
    let n = a.len().max(b.len());
    (0..n).map(|i| *a.get(i).unwrap_or(&0)).cmp((0..n).map(|i| *b.get(i).unwrap_or(&0)))
}

/// The chosen leading exponent: lexicographically smallest among those of
/// maximal total degree.
pub fn leading_exponent(f: &RPoly) -> Option<Vec<u8>> {
    let d = f.max_total_degree()?;
    f.terms.keys().filter(|e| total_degree(e) == d).min_by(|a, b| lex_padded(a, b)).cloned()
}

/// Map the support of `e` onto 0..k-1 in order, and the displaced variables
/// of 0..k-1 onto the vacated places.
fn compacting_map(e: &[u8]) -> BTreeMap<usize, usize> {
    let support: Vec<usize> = (0..e.len()).filter(|&i| e[i] > 0).collect();
    let k = support.len();
    let mut sigma: BTreeMap<usize, usize> = support.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let vacated: Vec<usize> = support.iter().copied().filter(|&v| v >= k).collect();
    let displaced: Vec<usize> = (0..k).filter(|i| !support.contains(i)).collect();
    for (a, b) in displaced.into_iter().zip(vacated) {
        sigma.insert(a, b);
    }
    sigma
}

fn apply_map(e: &[u8], sigma: &BTreeMap<usize, usize>) -> Vec<u8> {
    let mut out = vec![0u8; e.len().max(sigma.values().map(|&v| v + 1).max().unwrap_or(0))];
    for (i, &x) in e.iter().enumerate() {
        if x > 0 {
            out[*sigma.get(&i).unwrap_or(&i)] = x;
        }
    }
    trim(out)
}

/// Result index, its monomial r x_0...x_{d-1}, and the exponent it came from.
fn extract_leading_in(b: &mut Builder, start: usize) -> Result<(usize, RPoly, Vec<u8>)> {
    let f = b.poly(start).clone();
    let s = leading_exponent(&f).ok_or_else(|| Error::InvalidInput("cannot extract from the zero polynomial".into()))?;
    let r = f.terms[&s].clone();
    let d = total_degree(&s);
    if d == 0 {
        return Ok((start, f, s));
    }
    let p = f.pp.p();
    let sigma = compacting_map(&s);
    let mut cur = b.relabel(start, &sigma);
    let mut t = apply_map(&s, &sigma);
    // split x_j^t_j into x_j^(t_j - 1) x_fresh, scaling by t_j^-1
    while let Some(j) = t.iter().position(|&x| x > 1) {
        let fresh = b.poly(cur).mind().max(t.len());
        let mut form = unit(fresh);
        form[j] = 1;
        let tj = t[j];
        let split = b.substitute(cur, j, form);
        cur = b.combine(vec![(inv(tj, p), split)])?;
        t[j] -= 1;
        t.resize(fresh + 1, 0);
        t[fresh] = 1;
        if b.poly(cur).coeff(&t) != Some(&r) {
            return Err(Error::InternalConsistency("split monomial lost its coefficient".into()));
        }
    }
    let sigma = compacting_map(&t);
    cur = b.relabel(cur, &sigma);
    let h = RPoly::monomial(f.pp, &r, &ones(d))?;
    let g = b.poly(cur).sub(&h)?;
    check_strip_hypotheses(&h, &g).map_err(|e| Error::InternalConsistency(format!("after splitting: {e}")))?;
    cur = strip_in(b, cur, &h, d)?;
    Ok((cur, h, s))
}

/// Derive r x_0 ... x_{d-1} from f, where r x^s is the leading monomial.
pub fn extract_leading(f: &RPoly) -> Result<(RPoly, Derivation)> {
    let mut b = Builder::new(f.clone());
    let (_, h, _) = extract_leading_in(&mut b, 0)?;
    Ok((h, b.finish()))
}

/// Derive the monomial r_m x^m of f.
pub fn extract_monomial(f: &RPoly, target: &[u8]) -> Result<Derivation> {
    let target = trim(target.to_vec());
    if f.coeff(&target).is_none() {
        return invalid("target exponent does not occur in f");
    }
    let p = f.pp.p();
    let mut b = Builder::new(f.clone());
    let mut cur = 0;
    loop {
        if b.poly(cur).terms.len() == 1 {
            return Ok(b.finish());
        }
        let (idx, _, s) = extract_leading_in(&mut b, cur)?;
        // identify x_0..x_{d-1} with the variables of s, with multiplicity
        let d = total_degree(&s);
        let places: Vec<usize> = s.iter().enumerate().flat_map(|(v, &k)| std::iter::repeat_n(v, k as usize)).collect();
        let mut mono = idx;
        if d > 0 {
            let top = d.max(s.len());
            for k in 0..d {
                mono = b.substitute(mono, k, unit(top + k));
            }
            for (k, &v) in places.iter().enumerate() {
                mono = b.substitute(mono, top + k, unit(v));
            }
        }
        let expected = RPoly::monomial(f.pp, &b.poly(cur).terms[&s], &s)?;
        if *b.poly(mono) != expected {
            return Err(Error::InternalConsistency("identified monomial differs from the extracted one".into()));
        }
        if s == target {
            return Ok(b.finish());
        }
        cur = b.combine(vec![(1, cur), (neg(1, p), mono)])?;
    }
}

/// A function in a clone-level term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermRef {
    /// The induced monomial r x_0 ... x_{d-1}.
    Base,
    /// Binary addition.
    Plus,
    /// (x, y) -> (<a, x>, <b, y>).
    Linear { a: Vec<u8>, b: Vec<u8> },
    /// Result of an earlier step.
    Step { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionStep {
    pub outer: TermRef,
    pub inner: Vec<TermRef>,
}

/// Compositions building r x^m from r x_0...x_{d-1} and linear maps, all at `arity`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftWitness {
    pub arity: usize,
    pub coeff: CoeffFun,
    pub degree: usize,
    pub target: Vec<u8>,
    pub steps: Vec<CompositionStep>,
}

impl ShiftWitness {
    /// Evaluate the composition sequence as tables.
    pub fn replay(&self, pp: PrimePair) -> Result<MixedFun> {
        let base = induced(pp, &self.coeff, &ones(self.degree), self.arity)?;
        let plus = linear_map(pp, &ModVec::new(pp.p(), vec![1, 1]), &ModVec::new(pp.q(), vec![1, 1]))?;
        let mut done: Vec<MixedFun> = Vec::new();
        let resolve = |t: &TermRef, done: &[MixedFun]| -> Result<MixedFun> {
            match t {
                TermRef::Base => Ok(base.clone()),
                TermRef::Plus => Ok(plus.clone()),
                TermRef::Linear { a, b } => {
                    linear_map(pp, &ModVec::new(pp.p(), a.clone()), &ModVec::new(pp.q(), b.clone()))
                }
                TermRef::Step { index } => done
                    .get(*index)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("composition step refers ahead".into())),
            }
        };
        for step in &self.steps {
            let outer = resolve(&step.outer, &done)?;
            let inner = step.inner.iter().map(|t| resolve(t, &done)).collect::<Result<Vec<_>>>()?;
            done.push(compose(&outer, &inner)?);
        }
        Ok(done.pop().unwrap_or(base))
    }
}

/// Compositions showing r x^m is in the clone generated by r x_0...x_{d-1}
/// when the total degree of m is congruent to d modulo p - 1.
pub fn degree_shift_witness(pp: PrimePair, r: &CoeffFun, d: usize, target: &[u8]) -> Result<ShiftWitness> {
    let p = pp.p();
    if r.src != pp.q() || r.dst != p {
        return invalid("coefficient has the wrong moduli");
    }
    let target = trim(target.to_vec());
    if target.iter().any(|&e| e >= p) {
        return invalid("target exponent exceeds p - 1");
    }
    let u = total_degree(&target);
    let step = p as usize - 1;
    if d < 2 || u < 2 || u % step != d % step {
        return invalid("target degree is not congruent to d modulo p - 1");
    }
    // r^k = r when k = 1 mod (p - 1); k-fold self-composition has degree d + (k-1)(d-1)
    let mut k = 1;
    while d + (k - 1) * (d - 1) < u {
        k += step;
    }
    let top = d + (k - 1) * (d - 1);
    let arity = top.max(r.arity).max(target.len());
    let fits = checked_pow(pp.product() as usize, arity).is_some_and(|n| n <= MAX_TABLE_LEN);
    if !fits {
        return Err(Error::Resource(format!("witness needs arity {arity}")));
    }
    let e = |i: usize| unit(i).into_iter().chain(std::iter::repeat(0)).take(arity).collect::<Vec<u8>>();
    let zero = vec![0u8; arity];
    let mut steps = Vec::new();
    let mut prev = TermRef::Base;
    let mut deg = d;
    for _ in 1..k {
        // first argument carries the previous product; the others bring
        // fresh x's, and every argument keeps its own y
        steps.push(CompositionStep {
            outer: TermRef::Plus,
            inner: vec![prev.clone(), TermRef::Linear { a: zero.clone(), b: e(0) }],
        });
        let first = TermRef::Step { index: steps.len() - 1 };
        let inner = (0..arity)
            .map(|i| match i {
                0 => first.clone(),
                i if i < d => TermRef::Linear { a: e(deg + i - 1), b: e(i) },
                i => TermRef::Linear { a: zero.clone(), b: e(i) },
            })
            .collect();
        steps.push(CompositionStep { outer: TermRef::Base, inner });
        prev = TermRef::Step { index: steps.len() - 1 };
        deg += d - 1;
    }
    // collapse the surplus variables onto the first target variable
    // (x^(1 + j(p-1)) = x), and identify the rest with the target's variables
    let places: Vec<usize> = target.iter().enumerate().flat_map(|(v, &m)| std::iter::repeat_n(v, m as usize)).collect();
    let image = |i: usize| -> usize {
        if i < u {
            places[i]
        } else if i < deg {
            places[0]
        } else {
            i
        }
    };
    if (0..arity).any(|i| image(i) != i) {
        let inner = (0..arity).map(|i| TermRef::Linear { a: e(image(i)), b: e(i) }).collect();
        steps.push(CompositionStep { outer: prev, inner });
    }
    let w = ShiftWitness { arity, coeff: r.clone(), degree: d, target, steps };
    Ok(w)
}

/// Outcome of a bounded membership search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Member,
    NotMember,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    /// Largest number of variables of the target.
    pub max_index: usize,
    /// Largest number of substitution instances to enumerate.
    pub max_terms: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps { max_index: 4, max_terms: 1 << 20 }
    }
}

/// Membership of f in the closure of S under Z_p-linear combinations and
/// substitution of linear forms.
///
/// Every member is a combination of g(A x) with g in S and A a matrix of
/// linear forms, and setting the variables beyond MInd(f) to zero keeps f, so
/// matrices over the first MInd(f) variables suffice. All of them are
/// enumerated; the answer is exact unless a cap is hit. Reduced polynomials
/// and functions correspond one to one, so the span is taken over value tables.
pub fn oracle_member(s: &[RPoly], f: &RPoly, caps: OracleCaps) -> Result<Membership> {
    for g in s {
        g.check_same(f)?;
    }
    if f.is_zero() || s.contains(f) {
        return Ok(Membership::Member);
    }
    let k = f.mind();
    if k > caps.max_index {
        return Ok(Membership::Indeterminate);
    }
    let p = f.pp.p();
    let mut total = 0usize;
    for g in s {
        let count = checked_pow(p as usize, g.mind() * k);
        match count.and_then(|c| total.checked_add(c)) {
            Some(t) if t <= caps.max_terms => total = t,
            _ => return Ok(Membership::Indeterminate),
        }
    }
    let pk = (p as usize).pow(k as u32);
    let points: Vec<Vec<u8>> = (0..pk).map(|i| digits(i, p as usize, k)).collect();
    let mut span = Subspace::zero(p, pk * f.coeff_table_len());
    for g in s {
        let m = g.mind();
        let table = g.values(m);
        let pm = (p as usize).pow(m as u32);
        let mut image = vec![0u8; span.len()];
        for code in 0..checked_pow(p as usize, m * k).unwrap() {
            // row i of A is the linear form substituted for x_i
            let a = digits(code, p as usize, m * k);
            let at: Vec<usize> = points
                .iter()
                .map(|x| {
                    (0..m).rev().fold(0usize, |acc, i| {
                        let row = &a[i * k..(i + 1) * k];
                        let v = row.iter().zip(x).fold(0u16, |s, (&r, &xi)| s + r as u16 * xi as u16) % p as u16;
                        acc * p as usize + v as usize
                    })
                })
                .collect();
            for (yi, chunk) in image.chunks_mut(pk).enumerate() {
                for (slot, &xi) in chunk.iter_mut().zip(&at) {
                    *slot = table[xi + pm * yi];
                }
            }
            span.insert(&image);
        }
    }
    Ok(if span.contains(&f.values(k)) { Membership::Member } else { Membership::NotMember })
}
