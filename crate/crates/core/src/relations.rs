//! Congruences of Z_p x Z_q, the commutator relations rho(alpha, beta, gamma)
//! with Mal'cev term x - y + z, and the structural classification of a function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funtab::MixedFun;
use crate::zmod::{add, digits, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CongruenceLabel {
    Zero,
    /// Same Z_p component.
    Pi1,
    /// Same Z_q component.
    Pi2,
    One,
}

impl CongruenceLabel {
    pub const ALL: [CongruenceLabel; 4] =
        [CongruenceLabel::Zero, CongruenceLabel::Pi1, CongruenceLabel::Pi2, CongruenceLabel::One];

    pub fn relates(self, a: (u8, u8), b: (u8, u8)) -> bool {
        match self {
            CongruenceLabel::Zero => a == b,
            CongruenceLabel::Pi1 => a.0 == b.0,
            CongruenceLabel::Pi2 => a.1 == b.1,
            CongruenceLabel::One => true,
        }
    }

    /// Which coordinates of (x, y) are pinned by the congruence.
    fn fixes(self) -> (bool, bool) {
        match self {
            CongruenceLabel::Zero => (true, true),
            CongruenceLabel::Pi1 => (true, false),
            CongruenceLabel::Pi2 => (false, true),
            CongruenceLabel::One => (false, false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RhoRelation {
    pub alpha: CongruenceLabel,
    pub beta: CongruenceLabel,
    pub gamma: CongruenceLabel,
}

impl RhoRelation {
    pub fn new(alpha: CongruenceLabel, beta: CongruenceLabel, gamma: CongruenceLabel) -> Self {
        RhoRelation { alpha, beta, gamma }
    }

    /// (a, b, c, d) in rho: a alpha b, b beta c, and (a - b + c) gamma d.
    pub fn contains(&self, p: u8, q: u8, a: (u8, u8), b: (u8, u8), c: (u8, u8), d: (u8, u8)) -> bool {
        self.alpha.relates(a, b) && self.beta.relates(b, c) && self.gamma.relates(malcev(p, q, a, b, c), d)
    }
}

pub fn malcev(p: u8, q: u8, a: (u8, u8), b: (u8, u8), c: (u8, u8)) -> (u8, u8) {
    (add(sub(a.0, b.0, p), c.0, p), add(sub(a.1, b.1, q), c.1, q))
}

/// Index arithmetic on tables of one arity.
struct Shape {
    px: usize,
    qy: usize,
    /// u - v + w on x-indices, flattened as u + px (v + px w).
    mx: Vec<usize>,
    my: Vec<usize>,
}

fn malcev_table(radix: usize, n: usize) -> Vec<usize> {
    let size = radix.pow(n as u32);
    let mut out = Vec::with_capacity(size * size * size);
    for w in 0..size {
        for v in 0..size {
            for u in 0..size {
                let (mut idx, mut place) = (0, 1);
                let (mut u, mut v, mut w) = (u, v, w);
                for _ in 0..n {
                    idx += place * ((u % radix + radix - v % radix + w % radix) % radix);
                    place *= radix;
                    (u, v, w) = (u / radix, v / radix, w / radix);
                }
                out.push(idx);
            }
        }
    }
    out
}

impl Shape {
    fn of(f: &MixedFun) -> Self {
        let (p, q, n) = (f.pp().p() as usize, f.pp().q() as usize, f.arity());
        Shape { px: f.x_points(), qy: f.y_points(), mx: malcev_table(p, n), my: malcev_table(q, n) }
    }
}

/// Whether f preserves the congruence as a binary relation.
pub fn preserves_congruence(f: &MixedFun, label: CongruenceLabel) -> bool {
    if label == CongruenceLabel::One {
        return true;
    }
    let t = f.table();
    let px = f.x_points();
    let (fx, fy) = label.fixes();
    // related inputs share the pinned coordinates
    (0..t.len()).all(|a| {
        (0..t.len()).all(|b| {
            let same = (!fx || a % px == b % px) && (!fy || a / px == b / px);
            !same || label.relates(t[a], t[b])
        })
    })
}

/// Whether f preserves rho(alpha, beta, gamma).
///
/// Taking quadruples (a, b, b, a), (a, a, c, c) and (a, a, a, d) shows that f
/// must preserve alpha, beta and gamma. Given that, membership of the image of
/// (a, b, c, d) only needs f(a) - f(b) + f(c) gamma f(a - b + c), since
/// f(d) gamma f(a - b + c) already holds. So only chains a alpha b beta c are
/// enumerated.
pub fn preserves_rho(f: &MixedFun, rel: RhoRelation) -> bool {
    if !(preserves_congruence(f, rel.alpha) && preserves_congruence(f, rel.beta) && preserves_congruence(f, rel.gamma)) {
        return false;
    }
    let s = Shape::of(f);
    let t = f.table();
    let (p, q) = (f.pp().p(), f.pp().q());
    let (px, qy) = (s.px, s.qy);
    let range = |fixed: bool, i: usize, len: usize| if fixed { i..i + 1 } else { 0..len };
    let ((afx, afy), (bfx, bfy)) = (rel.alpha.fixes(), rel.beta.fixes());
    for ay in 0..qy {
        for ax in 0..px {
            let ta = t[ax + px * ay];
            for by in range(afy, ay, qy) {
                for bx in range(afx, ax, px) {
                    let tb = t[bx + px * by];
                    for cy in range(bfy, by, qy) {
                        let my = px * s.my[ay + qy * (by + qy * cy)];
                        for cx in range(bfx, bx, px) {
                            let lhs = malcev(p, q, ta, tb, t[cx + px * cy]);
                            if !rel.gamma.relates(lhs, t[s.mx[ax + px * (bx + px * cx)] + my]) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
    }
    true
}

/// Literal check over every n-tuple of quadruples in rho. Exponential in the
/// arity; intended as a cross-check for arity <= 1.
pub fn preserves_rho_literal(f: &MixedFun, rel: RhoRelation) -> bool {
    let (p, q) = (f.pp().p(), f.pp().q());
    let mut quads = Vec::new();
    for a in elements(p, q) {
        for b in elements(p, q) {
            for c in elements(p, q) {
                for d in elements(p, q) {
                    if rel.contains(p, q, a, b, c, d) {
                        quads.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    let n = f.arity();
    let total = quads.len().pow(n as u32);
    for code in 0..total {
        let pick = digits(code, quads.len(), n);
        let mut image = [(0u8, 0u8); 4];
        for (k, slot) in image.iter_mut().enumerate() {
            let xs: Vec<u8> = pick.iter().map(|&i| quads[i as usize][k].0).collect();
            let ys: Vec<u8> = pick.iter().map(|&i| quads[i as usize][k].1).collect();
            *slot = f.eval(&xs, &ys);
        }
        if !rel.contains(p, q, image[0], image[1], image[2], image[3]) {
            return false;
        }
    }
    true
}

fn elements(p: u8, q: u8) -> impl Iterator<Item = (u8, u8)> {
    (0..q).flat_map(move |b| (0..p).map(move |a| (a, b)))
}

/// Exhaustive 3-point affineness of `g` on `[radix]^n`: g(u - v + w) = g(u) - g(v) + g(w).
fn affine_3pt(radix: usize, n: usize, modulus: u8, g: impl Fn(usize) -> u8) -> bool {
    let size = radix.pow(n as u32);
    let vals: Vec<u8> = (0..size).map(&g).collect();
    let mt = malcev_table(radix, n);
    mt.iter().enumerate().all(|(k, &m)| {
        let (u, v, w) = (k % size, (k / size) % size, k / (size * size));
        vals[m] == add(sub(vals[u], vals[v], modulus), vals[w], modulus)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub preserves_pi1: bool,
    pub preserves_pi2: bool,
    /// f_p does not depend on y.
    pub p_part_ignores_y: bool,
    /// f_q does not depend on x.
    pub q_part_ignores_x: bool,
    pub affine_in_first: bool,
    pub affine_in_second: bool,
    /// f_q restricted to {0} x Z_q^n is affine.
    pub q_part_affine_at_x0: bool,
    /// f_p restricted to Z_p^n x {0} is affine.
    pub p_part_affine_at_y0: bool,
    pub preserves_pi1_pi1_zero: bool,
    pub preserves_pi2_pi2_zero: bool,
    pub preserves_one_one_pi2: bool,
    pub preserves_one_one_pi1: bool,
}

/// Both components affine in x for every fixed y.
pub fn affine_in_first(f: &MixedFun) -> bool {
    let (p, q) = (f.pp().p(), f.pp().q());
    let (px, qy, n) = (f.x_points(), f.y_points(), f.arity());
    let t = f.table();
    (0..qy).all(|yi| {
        affine_3pt(p as usize, n, p, |xi| t[xi + px * yi].0) && affine_3pt(p as usize, n, q, |xi| t[xi + px * yi].1)
    })
}

/// Both components affine in y for every fixed x.
pub fn affine_in_second(f: &MixedFun) -> bool {
    let (p, q) = (f.pp().p(), f.pp().q());
    let (px, n) = (f.x_points(), f.arity());
    let t = f.table();
    (0..px).all(|xi| {
        affine_3pt(q as usize, n, p, |yi| t[xi + px * yi].0) && affine_3pt(q as usize, n, q, |yi| t[xi + px * yi].1)
    })
}

pub fn classify(f: &MixedFun) -> Result<StructureReport> {
    use CongruenceLabel::*;
    let (p, q) = (f.pp().p(), f.pp().q());
    let (px, qy, n) = (f.x_points(), f.y_points(), f.arity());
    let t = f.table();
    let p_part_ignores_y = (0..px).all(|xi| (0..qy).all(|yi| t[xi + px * yi].0 == t[xi].0));
    let q_part_ignores_x = (0..qy).all(|yi| (0..px).all(|xi| t[xi + px * yi].1 == t[px * yi].1));
    let report = StructureReport {
        preserves_pi1: preserves_congruence(f, Pi1),
        preserves_pi2: preserves_congruence(f, Pi2),
        p_part_ignores_y,
        q_part_ignores_x,
        affine_in_first: affine_in_first(f),
        affine_in_second: affine_in_second(f),
        q_part_affine_at_x0: affine_3pt(q as usize, n, q, |yi| t[px * yi].1),
        p_part_affine_at_y0: affine_3pt(p as usize, n, p, |xi| t[xi].0),
        preserves_pi1_pi1_zero: preserves_rho(f, RhoRelation::new(Pi1, Pi1, Zero)),
        preserves_pi2_pi2_zero: preserves_rho(f, RhoRelation::new(Pi2, Pi2, Zero)),
        preserves_one_one_pi2: preserves_rho(f, RhoRelation::new(One, One, Pi2)),
        preserves_one_one_pi1: preserves_rho(f, RhoRelation::new(One, One, Pi1)),
    };
    let r = &report;
    let checks = [
        ("pi1 vs p-part independent of y", true, r.preserves_pi1, r.p_part_ignores_y),
        ("pi2 vs q-part independent of x", true, r.preserves_pi2, r.q_part_ignores_x),
        ("[pi1,pi1]=0 vs affine in second", r.preserves_pi1, r.preserves_pi1_pi1_zero, r.affine_in_second),
        ("[pi2,pi2]=0 vs affine in first", r.preserves_pi2, r.preserves_pi2_pi2_zero, r.affine_in_first),
        ("[1,1]<=pi2 vs q-part affine at x=0", r.preserves_pi2, r.preserves_one_one_pi2, r.q_part_affine_at_x0),
        ("[1,1]<=pi1 vs p-part affine at y=0", r.preserves_pi1, r.preserves_one_one_pi1, r.p_part_affine_at_y0),
    ];
    for (name, applies, relational, syntactic) in checks {
        if applies && relational != syntactic {
            return Err(Error::InternalConsistency(format!(
                "{name}: relation side {relational}, syntactic side {syntactic}"
            )));
        }
    }
    Ok(report)
}
