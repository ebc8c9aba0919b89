//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Runtime limits are pinned per criterion and
//! apply to whatever profile the harness was built with.

use std::collections::{BTreeSet, HashSet};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use cloneforge::bounds::count_report;
use cloneforge::clonesig::*;
use cloneforge::clonoid::{enumerate_clonoids, Clonoid, Orientation};
use cloneforge::funtab::{crt_split, induced, CoeffFun, MixedFun};
use cloneforge::lattice::{enumerate_clones, LatticeGraph};
use cloneforge::poly::{factor_over_zp, PolyZp};
use cloneforge::polyring::*;
use cloneforge::relations::{classify, preserves_rho_literal, CongruenceLabel, RhoRelation};
use cloneforge::zmod::{digits, undigits, PrimePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed;
const RPOLY_INSTANCES: usize = 100;
const CRT_FUNCTIONS: usize = 1000;
const CLONE_LOWER: usize = 9;
const CLONE_UPPER: usize = 55296;
const DIAMOND: usize = 20;
const POLYNOMIAL: usize = 17;
const PI1_BOUND: usize = 64;
const GAMMA_PAIRS: usize = 15;
const UNARY_FUNCTIONS: usize = 46656;

type Outcome = Result<String, String>;

fn pp(p: u32, q: u32) -> PrimePair {
    PrimePair::new(p, q).unwrap()
}

fn graph23() -> &'static LatticeGraph {
    static CELL: OnceLock<LatticeGraph> = OnceLock::new();
    CELL.get_or_init(|| enumerate_clones(pp(2, 3), 3).unwrap())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: cloneforge::Error) -> String {
    err.to_string()
}

/// Closed subsets of Z_dst^(Z_src) under +, scalars and dilations, found by
/// closing from every single added element.
fn scan_closed_sets(src: u8, dst: u8) -> BTreeSet<BTreeSet<Vec<u8>>> {
    let n = (dst as usize).pow(src as u32);
    let funcs: Vec<Vec<u8>> = (0..n).map(|i| digits(i, dst as usize, src as usize)).collect();
    let code = |v: &[u8]| undigits(v, dst as usize);
    let close = |mut mask: u64| loop {
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let mut next = mask | 1;
        for &i in &members {
            for a in 0..src {
                let d: Vec<u8> = (0..src).map(|t| funcs[i][(a as usize * t as usize) % src as usize]).collect();
                next |= 1 << code(&d);
            }
            for c in 0..dst {
                next |= 1 << code(&funcs[i].iter().map(|&v| v * c % dst).collect::<Vec<_>>());
            }
            for &j in &members {
                next |= 1 << code(&funcs[i].iter().zip(&funcs[j]).map(|(&x, &y)| (x + y) % dst).collect::<Vec<_>>());
            }
        }
        if next == mask {
            return mask;
        }
        mask = next;
    };
    let mut found = BTreeSet::from([close(1)]);
    let mut frontier = vec![close(1)];
    while let Some(m) = frontier.pop() {
        for i in 0..n {
            let c = close(m | 1 << i);
            if found.insert(c) {
                frontier.push(c);
            }
        }
    }
    found.into_iter().map(|m| (0..n).filter(|&i| m >> i & 1 == 1).map(|i| funcs[i].clone()).collect()).collect()
}

fn clonoid_counts() -> Outcome {
    let mut parts = Vec::new();
    for (p, q, want) in [(2, 3, 6), (3, 2, 4), (2, 5, 10)] {
        let start = Instant::now();
        let got = enumerate_clonoids(pp(p, q), Orientation::Pq).map_err(e)?;
        let factors = factor_over_zp(&PolyZp::x_pow_minus_one(p as u8, q as usize - 1)).map_err(e)?;
        let formula: usize = 2 * factors.multiplicities().iter().map(|&k| k as usize + 1).product::<usize>();
        let scanned = scan_closed_sets(q as u8, p as u8);
        let mine: BTreeSet<BTreeSet<Vec<u8>>> =
            got.iter().map(|c| c.unary().elements().into_iter().collect()).collect();
        let took = start.elapsed();
        ensure(got.len() == want && formula == want && mine == scanned, || {
            format!("({p},{q}): enumerated {}, formula {formula}, scan {}", got.len(), scanned.len())
        })?;
        ensure(took < Duration::from_secs(1), || format!("({p},{q}) took {took:?}"))?;
        parts.push(format!("({p},{q})={want}"));
    }
    Ok(format!("{} equal the formula and the exhaustive scan", parts.join(" ")))
}

fn diamond() -> Outcome {
    let g = graph23();
    let nodes: Vec<&CloneSignature> =
        g.nodes.iter().filter(|n| n.flags.preserves_diamond).map(|n| &n.signature).collect();
    let lp = enumerate_prime_clones(2).map_err(e)?;
    let lq = enumerate_prime_clones(3).map_err(e)?;
    ensure(nodes.len() == DIAMOND && lp.len() * lq.len() == DIAMOND, || {
        format!("{} diamond clones, {} x {} pairs", nodes.len(), lp.len(), lq.len())
    })?;
    let splits: Vec<(PrimeClone, PrimeClone)> =
        nodes.iter().map(|s| independent_split(s)).collect::<Result<_, _>>().map_err(e)?;
    for (s, (a, b)) in nodes.iter().zip(&splits) {
        ensure(from_split(pp(2, 3), a, b).map_err(e)? == **s, || format!("{} is not rebuilt from its split", s.id()))?;
    }
    for a in &lp {
        for b in &lq {
            let s = from_split(pp(2, 3), a, b).map_err(e)?;
            ensure(independent_split(&s).map_err(e)? == (a.clone(), b.clone()), || "split of rebuilt pair differs".into())?;
            ensure(nodes.contains(&&s), || format!("pair {:?} {:?} is not a diamond clone", a.degrees(), b.degrees()))?;
        }
    }
    for (i, x) in splits.iter().enumerate() {
        for (j, y) in splits.iter().enumerate() {
            let product = x.0.is_subclone_of(&y.0) && x.1.is_subclone_of(&y.1);
            ensure(product == nodes[i].le(nodes[j]), || format!("order differs at {i} {j}"))?;
        }
    }
    Ok(format!("{DIAMOND} clones, split and rebuild mutually inverse, order matches {} x {}", lp.len(), lq.len()))
}

fn polynomial() -> Outcome {
    let g = graph23();
    let constants: Vec<MixedFun> = (0..2)
        .flat_map(|a| (0..3).map(move |b| (a, b)))
        .map(|v| MixedFun::constant(pp(2, 3), 1, v))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    let mut with_all = 0;
    for n in &g.nodes {
        let all = constants.iter().all(|c| member(&n.signature, c).unwrap());
        ensure(all == n.flags.polynomial, || format!("flag disagrees with membership at {}", n.id))?;
        with_all += usize::from(all);
    }
    ensure(with_all == POLYNOMIAL, || format!("{with_all} polynomial clones"))?;
    Ok(format!("{with_all} clones contain all 6 constants"))
}

fn total_count() -> Outcome {
    let three = graph23();
    let four = enumerate_clones(pp(2, 3), 4).map_err(e)?;
    let n = three.nodes.len();
    let ids = |g: &LatticeGraph| g.nodes.iter().map(|n| n.id.clone()).collect::<Vec<_>>();
    ensure((CLONE_LOWER..=CLONE_UPPER).contains(&n), || format!("{n} outside [{CLONE_LOWER}, {CLONE_UPPER}]"))?;
    ensure(ids(three) == ids(&four), || format!("work arity 3 gives {n}, 4 gives {}", four.nodes.len()))?;
    Ok(format!("computed {n} clones, in [{CLONE_LOWER}, {CLONE_UPPER}], same at work arity 3 and 4"))
}

fn catalog_idempotence() -> Outcome {
    let engine = Engine::new(pp(2, 3));
    let g = graph23();
    for n in &g.nodes {
        let cat = generator_catalog(&n.signature).map_err(e)?;
        ensure(engine.clg(&cat.functions, 3).map_err(e)? == n.signature, || format!("{} not reproduced", n.id))?;
    }
    Ok(format!("{} of {} clones reproduced by their catalog at arity 3", g.nodes.len(), g.nodes.len()))
}

fn gamma() -> Outcome {
    let engine = Engine::new(pp(2, 3));
    let cs: Vec<Clonoid> = enumerate_clonoids(pp(2, 3), Orientation::Pq).map_err(e)?;
    let img: Vec<CloneSignature> = cs.iter().map(|c| gamma_embed(&engine, c)).collect::<Result<_, _>>().map_err(e)?;
    let distinct: HashSet<String> = img.iter().map(CloneSignature::id).collect();
    ensure(distinct.len() == cs.len(), || format!("{} images of {} clonoids", distinct.len(), cs.len()))?;
    ensure(img.iter().all(|s| graph23().index_of(s).is_some()), || "an image is not an enumerated clone".into())?;
    let mut pairs = 0;
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            pairs += 1;
            let meet = gamma_embed(&engine, &cs[i].meet(&cs[j]).map_err(e)?).map_err(e)?;
            let join = gamma_embed(&engine, &cs[i].join(&cs[j]).map_err(e)?).map_err(e)?;
            ensure(meet == engine.meet(&img[i], &img[j]).map_err(e)?, || format!("meet of {i} and {j}"))?;
            ensure(join == engine.join(&img[i], &img[j]).map_err(e)?, || format!("join of {i} and {j}"))?;
        }
    }
    ensure(pairs == GAMMA_PAIRS, || format!("{pairs} pairs"))?;
    Ok(format!("injective on {} clonoids, meet and join preserved on {pairs} pairs", cs.len()))
}

fn pi1_family() -> Outcome {
    let g = graph23();
    let family: Vec<&CloneSignature> = g.nodes.iter().filter(|n| n.flags.pi1_pi1_zero).map(|n| &n.signature).collect();
    let triples: HashSet<_> = family.iter().map(|s| pi1_profile(s)).collect::<Result<_, _>>().map_err(e)?;
    let bound = count_report(pp(2, 3)).pi1_upper as usize;
    ensure(bound == PI1_BOUND, || format!("bound computed as {bound}"))?;
    ensure(family.len() <= PI1_BOUND, || format!("{} clones", family.len()))?;
    ensure(triples.len() == family.len(), || format!("{} triples for {} clones", triples.len(), family.len()))?;
    Ok(format!("{} clones, {} distinct triples, bound {PI1_BOUND}", family.len(), triples.len()))
}

fn random_rpoly(rng: &mut ChaCha8Rng) -> RPoly {
    let pp = [pp(2, 3), pp(3, 2)][rng.gen_range(0..2)];
    let (p, q) = (pp.p(), pp.q());
    let mut f = RPoly::zero(pp, 1);
    while f.is_zero() {
        for _ in 0..rng.gen_range(1..=4) {
            let exp: Vec<u8> = (0..3).map(|_| rng.gen_range(0..p)).collect();
            let c = CoeffFun::new(q, p, 1, (0..q).map(|_| rng.gen_range(0..p)).collect()).unwrap();
            f = f.add(&RPoly::monomial(pp, &c, &exp).unwrap()).unwrap();
        }
    }
    f
}

/// A shift witness for a random valid request, redrawn until its arity is at
/// most 5 so replay tables stay small.
fn random_shift(rng: &mut ChaCha8Rng, pp: PrimePair) -> (CoeffFun, ShiftWitness) {
    let (p, q) = (pp.p(), pp.q());
    loop {
        let d = rng.gen_range(2..=p as usize);
        let target: Vec<u8> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..p)).collect();
        let u: usize = target.iter().map(|&x| x as usize).sum();
        if u < 2 || u % (p as usize - 1) != d % (p as usize - 1) {
            continue;
        }
        let r = CoeffFun::new(q, p, 1, (0..q).map(|_| rng.gen_range(0..p)).collect()).unwrap();
        let w = degree_shift_witness(pp, &r, d, &target).unwrap();
        if w.arity <= 5 {
            return (r, w);
        }
    }
}

fn constructive_lemmas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut extractions, mut witnesses) = (0, 0);
    for i in 0..RPOLY_INSTANCES {
        let f = random_rpoly(&mut rng);
        for (exp, r) in f.terms() {
            let d = extract_monomial(&f, exp).map_err(e)?;
            let m = RPoly::monomial(f.pp(), r, exp).map_err(e)?;
            ensure(d.replay().map_err(e)? == m && *d.result() == m, || format!("instance {i}: replay differs"))?;
            let oracle = oracle_member(std::slice::from_ref(&f), &m, OracleCaps::default()).map_err(e)?;
            ensure(oracle == Membership::Member, || format!("instance {i}: oracle says {oracle:?}"))?;
            extractions += 1;
        }
        let (r, w) = random_shift(&mut rng, f.pp());
        let want = induced(f.pp(), &r, &w.target, w.arity).map_err(e)?;
        ensure(w.replay(f.pp()).map_err(e)? == want, || format!("instance {i}: shift witness replay differs"))?;
        witnesses += 1;
    }
    Ok(format!("{RPOLY_INSTANCES} instances: {extractions} extractions replayed and confirmed, {witnesses} shift witnesses"))
}

fn unary_sweep() -> Outcome {
    use CongruenceLabel::*;
    let pair = pp(2, 3);
    let rels = [
        RhoRelation::new(Pi1, Pi1, Zero),
        RhoRelation::new(Pi2, Pi2, Zero),
        RhoRelation::new(One, One, Pi2),
        RhoRelation::new(One, One, Pi1),
    ];
    let mut n = 0;
    for code in 0..UNARY_FUNCTIONS {
        let vals = digits(code, 6, 6);
        let f = MixedFun::new(pair, 1, vals.iter().map(|&v| (v % 2, v % 3)).collect()).map_err(e)?;
        let r = classify(&f).map_err(|err| format!("function {code}: {err}"))?;
        // relational sides again, from the literal quadruple check
        let lit: Vec<bool> = rels.iter().map(|&rel| preserves_rho_literal(&f, rel)).collect();
        let agree = [
            r.preserves_pi1 == r.p_part_ignores_y,
            r.preserves_pi2 == r.q_part_ignores_x,
            !r.preserves_pi1 || lit[0] == r.affine_in_second,
            !r.preserves_pi2 || lit[1] == r.affine_in_first,
            !r.preserves_pi2 || lit[2] == r.q_part_affine_at_x0,
            !r.preserves_pi1 || lit[3] == r.p_part_affine_at_y0,
        ];
        if let Some(k) = agree.iter().position(|&a| !a) {
            return Err(format!("function {code}: item {} disagrees", k + 1));
        }
        n += 1;
    }
    Ok(format!("all {n} unary functions agree on items 1-6"))
}

fn crt_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for i in 0..CRT_FUNCTIONS {
        let pair = [pp(2, 3), pp(3, 2)][i % 2];
        let (p, q) = (pair.p() as u64, pair.q() as u64);
        let n = rng.gen_range(0..=2);
        let len = (p * q).pow(n as u32) as usize;
        let f = MixedFun::new(pair, n, (0..len).map(|_| (rng.gen_range(0..p) as u8, rng.gen_range(0..q) as u8)).collect())
            .map_err(e)?;
        let (fp, fq) = crt_split(&f);
        ensure(fp.add(&fq).map_err(e)? == f, || format!("function {i}: parts do not sum to f"))?;
        // the same identity on Z_pq values, v = the CRT lift of (a, b)
        let lift = |(a, b): (u8, u8)| (0..p * q).find(|v| v % p == a as u64 && v % q == b as u64).unwrap();
        let (ep, eq) = (q.pow(p as u32 - 1), p.pow(q as u32 - 1));
        for (k, &v) in f.table().iter().enumerate() {
            let v = lift(v);
            ensure(lift(fp.table()[k]) == ep * v % (p * q) && lift(fq.table()[k]) == eq * v % (p * q), || {
                format!("function {i}: block values differ at {k}")
            })?;
            ensure((ep * v + eq * v) % (p * q) == v, || format!("function {i}: identity fails at {k}"))?;
        }
    }
    Ok(format!("{CRT_FUNCTIONS} functions of arity <= 2"))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("clonoid counts", 5, clonoid_counts),
        ("diamond-preserving clones", 60, diamond),
        ("polynomial clones", 60, polynomial),
        ("total clone count", 600, total_count),
        ("catalog idempotence", 600, catalog_idempotence),
        ("gamma embedding", 60, gamma),
        ("pi1 family", 60, pi1_family),
        ("constructive lemmas", 60, constructive_lemmas),
        ("unary equivalence sweep", 600, unary_sweep),
        ("CRT identity", 60, crt_identity),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= Duration::from_secs(limit) => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit} s limit")),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!("{} {:>2} {name}: {detail} ({:.2} s)", if ok { "PASS" } else { "FAIL" }, i + 1, took.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
