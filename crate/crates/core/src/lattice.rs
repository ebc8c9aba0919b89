//! The lattice of clones on Z_p x Z_q above the linear maps: enumeration,
//! cover relation, verification against the counting results, export.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{count_report, BoundsReport};
use crate::clonesig::{
    addition, enumerate_prime_clones, from_split, gamma_embed, generator_catalog, independent_split, member,
    pi1_profile, slot_monomial, CloneFlags, CloneSignature, Engine,
};
use crate::clonoid::{enumerate_clonoids, Orientation};
use crate::error::{invalid, Error, Result};
use crate::funtab::{CoeffFun, MixedFun, Side};
use crate::relations::{classify, StructureReport};
use crate::zmod::{digits, PrimePair};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneRecord {
    pub id: String,
    pub signature: CloneSignature,
    pub flags: CloneFlags,
}

impl CloneRecord {
    pub fn new(signature: CloneSignature) -> Self {
        CloneRecord { id: signature.id(), flags: signature.flags(), signature }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGraph {
    pub p: u8,
    pub q: u8,
    pub work_arity: usize,
    /// Sorted by id.
    pub nodes: Vec<CloneRecord>,
    /// (lower, upper) node indices of covering pairs.
    pub cover_edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<VerificationReport>,
}

/// Subfamilies selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    Diamond,
    Polynomial,
    /// Preserves pi1 and [pi1, pi1] = 0.
    Pi1,
}

impl Filter {
    fn keeps(self, f: &CloneFlags) -> bool {
        match self {
            Filter::Diamond => f.preserves_diamond,
            Filter::Polynomial => f.polynomial,
            Filter::Pi1 => f.pi1_pi1_zero,
        }
    }
}

impl LatticeGraph {
    pub fn from_signatures(pp: PrimePair, work_arity: usize, sigs: impl IntoIterator<Item = CloneSignature>) -> Self {
        let mut nodes: Vec<CloneRecord> = sigs.into_iter().map(CloneRecord::new).collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        nodes.dedup_by(|a, b| a.id == b.id);
        let cover_edges = cover_edges(&nodes);
        LatticeGraph { p: pp.p(), q: pp.q(), work_arity, nodes, cover_edges, report: None }
    }

    pub fn pp(&self) -> Result<PrimePair> {
        PrimePair::new(self.p as u32, self.q as u32)
    }

    pub fn index_of(&self, sig: &CloneSignature) -> Option<usize> {
        let id = sig.id();
        self.nodes.binary_search_by(|n| n.id.cmp(&id)).ok()
    }

    pub fn count(&self, pred: impl Fn(&CloneFlags) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.flags)).count()
    }

    /// Induced subposet on the nodes passing the filter.
    pub fn filtered(&self, filter: Filter) -> Result<LatticeGraph> {
        let pp = self.pp()?;
        let sigs = self.nodes.iter().filter(|n| filter.keeps(&n.flags)).map(|n| n.signature.clone());
        Ok(LatticeGraph::from_signatures(pp, self.work_arity, sigs))
    }

    /// Length of the longest chain from a minimal node, per node.
    pub fn heights(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| self.nodes[i].signature.dims().iter().sum::<usize>());
        let mut below: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &[lo, hi] in &self.cover_edges {
            below[hi].push(lo);
        }
        let mut h = vec![0usize; n];
        for &i in &order {
            h[i] = below[i].iter().map(|&j| h[j] + 1).max().unwrap_or(0);
        }
        h
    }
}

/// Covering pairs of slotwise containment, by transitive reduction.
pub fn cover_edges(nodes: &[CloneRecord]) -> Vec<[usize; 2]> {
    let n = nodes.len();
    let le: Vec<Vec<bool>> =
        (0..n).map(|i| (0..n).map(|j| nodes[i].signature.le(&nodes[j].signature)).collect()).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || !le[i][j] {
                continue;
            }
            if !(0..n).any(|k| k != i && k != j && le[i][k] && le[k][j]) {
                edges.push([i, j]);
            }
        }
    }
    edges
}

/// Every induced monomial (r(y) x_1..x_i, 0) and (0, r(x) y_1..y_i) with unary
/// nonzero r and i <= max(p, q).
pub fn generator_universe(pp: PrimePair) -> Result<Vec<MixedFun>> {
    let top = pp.p().max(pp.q()) as usize;
    let mut out = Vec::new();
    for side in [Side::P, Side::Q] {
        let (dst, src) = (side.modulus(pp), side.other().modulus(pp));
        let count = (dst as usize).pow(src as u32);
        for code in 1..count {
            let r = CoeffFun::new(src, dst, 1, digits(code, dst as usize, src as usize))?;
            for i in 0..=top {
                out.push(slot_monomial(pp, side, i, &r)?);
            }
        }
    }
    Ok(out)
}

pub fn enumerate_clones(pp: PrimePair, work_arity: usize) -> Result<LatticeGraph> {
    let engine = Engine::new(pp);
    let sigs = enumerate_signatures(&engine, &generator_universe(pp)?, work_arity)?;
    Ok(LatticeGraph::from_signatures(pp, work_arity, sigs))
}

/// Closures of bottom plus one universe member each, closed under joins.
pub fn enumerate_signatures(engine: &Engine, universe: &[MixedFun], work_arity: usize) -> Result<Vec<CloneSignature>> {
    let pp = engine.pp();
    let seeds: Vec<CloneSignature> = universe
        .par_iter()
        .map(|g| engine.clg(&[addition(pp), g.clone()], work_arity))
        .collect::<Result<_>>()?;
    let mut all = vec![engine.clg(&[addition(pp)], work_arity)?];
    let mut seen: HashSet<CloneSignature> = all.iter().cloned().collect();
    for s in seeds {
        if seen.insert(s.clone()) {
            all.push(s);
        }
    }
    // pairs among all[..done] are already joined
    let mut done = 0;
    while done < all.len() {
        let end = all.len();
        let pairs: Vec<(usize, usize)> = (done..end).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
        let joins: Vec<CloneSignature> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let s = all[i].slotwise_join(&all[j])?;
                if seen.contains(&s) {
                    Ok(s)
                } else {
                    engine.close(s)
                }
            })
            .collect::<Result<_>>()?;
        for s in joins {
            if seen.insert(s.clone()) {
                all.push(s);
            }
        }
        done = end;
    }
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub clones: usize,
    pub diamond: usize,
    pub polynomial: usize,
    pub pi1_family: usize,
    pub gamma_image: usize,
    pub clonoids_pq: usize,
    pub clonoids_qp: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub counts: ReportCounts,
    pub bounds: BoundsReport,
    pub checks: Vec<Check>,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

/// Enumerate and verify.
pub fn verify_report(pp: PrimePair, work_arity: usize) -> Result<LatticeGraph> {
    let engine = Engine::new(pp);
    let sigs = enumerate_signatures(&engine, &generator_universe(pp)?, work_arity)?;
    let mut graph = LatticeGraph::from_signatures(pp, work_arity, sigs);
    graph.report = Some(verify(&engine, &graph)?);
    Ok(graph)
}

pub fn verify(engine: &Engine, graph: &LatticeGraph) -> Result<VerificationReport> {
    let pp = engine.pp();
    if graph.pp()? != pp {
        return invalid("graph and engine over different prime pairs");
    }
    let bounds = count_report(pp);
    let sig_of = |i: usize| &graph.nodes[i].signature;
    let n = graph.nodes.len();
    let mut checks = Vec::new();

    // (a) clonoid counts against the factorization formula
    let pq = enumerate_clonoids(pp, Orientation::Pq)?;
    let qp = enumerate_clonoids(pp, Orientation::Qp)?;
    checks.push(check(
        "clonoid counts",
        pq.len() as u128 == bounds.clonoids_pq && qp.len() as u128 == bounds.clonoids_qp,
        format!("enumerated ({}, {}), formula ({}, {})", pq.len(), qp.len(), bounds.clonoids_pq, bounds.clonoids_qp),
    ));

    // (b) gamma is an injective lattice homomorphism into the clone lattice
    let images: Vec<CloneSignature> = pq.iter().map(|c| gamma_embed(engine, c)).collect::<Result<_>>()?;
    let image_ids: BTreeSet<String> = images.iter().map(CloneSignature::id).collect();
    let mut failures = Vec::new();
    if image_ids.len() != images.len() {
        failures.push("gamma is not injective".to_string());
    }
    if let Some(c) = images.iter().find(|s| graph.index_of(s).is_none()) {
        failures.push(format!("gamma image {} is not an enumerated clone", c.id()));
    }
    let mut pair_checks = 0;
    for i in 0..pq.len() {
        for j in i + 1..pq.len() {
            pair_checks += 1;
            let meet = gamma_embed(engine, &pq[i].meet(&pq[j])?)?;
            let join = gamma_embed(engine, &pq[i].join(&pq[j])?)?;
            if meet != engine.meet(&images[i], &images[j])? {
                failures.push(format!("meet of clonoids {i} and {j}"));
            }
            if join != engine.join(&images[i], &images[j])? {
                failures.push(format!("join of clonoids {i} and {j}"));
            }
        }
    }
    checks.push(check(
        "gamma embedding",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} images, {pair_checks} pairs preserve meet and join", images.len())
        } else {
            failures.join("; ")
        },
    ));

    // (c) diamond sublattice is the product of the prime-side lattices
    let diamond: Vec<usize> = (0..n).filter(|&i| graph.nodes[i].flags.preserves_diamond).collect();
    let lp = enumerate_prime_clones(pp.p())?;
    let lq = enumerate_prime_clones(pp.q())?;
    let mut failures = Vec::new();
    let mut splits = BTreeMap::new();
    for &i in &diamond {
        let pair = independent_split(sig_of(i))?;
        if from_split(pp, &pair.0, &pair.1)? != *sig_of(i) {
            failures.push(format!("node {i} is not rebuilt from its split"));
        }
        splits.insert(pair, i);
    }
    for a in &lp {
        for b in &lq {
            let s = from_split(pp, a, b)?;
            if !engine.is_closed(&s)? || graph.index_of(&s).is_none() {
                failures.push(format!("pair {:?} x {:?} is not an enumerated clone", a.degrees(), b.degrees()));
            }
        }
    }
    if splits.len() != lp.len() * lq.len() || splits.len() != diamond.len() {
        failures.push(format!("{} diamond clones, {} distinct splits, {} pairs", diamond.len(), splits.len(), lp.len() * lq.len()));
    }
    for (x, &i) in &splits {
        for (y, &j) in &splits {
            let prod_le = x.0.is_subclone_of(&y.0) && x.1.is_subclone_of(&y.1);
            if prod_le != sig_of(i).le(sig_of(j)) {
                failures.push(format!("order differs between nodes {i} and {j}"));
            }
        }
    }
    checks.push(check(
        "diamond product",
        failures.is_empty() && diamond.len() as u128 == bounds.diamond_count,
        if failures.is_empty() {
            format!("{} diamond clones = {} x {}, formula {}", diamond.len(), lp.len(), lq.len(), bounds.diamond_count)
        } else {
            failures.join("; ")
        },
    ));

    // (d) total count within the bounds
    checks.push(check(
        "clone count bounds",
        (bounds.clone_lower..=bounds.clone_upper).contains(&(n as u128)),
        format!("{n} clones, bounds [{}, {}]", bounds.clone_lower, bounds.clone_upper),
    ));

    // (e) each clone is generated by its catalog at arity max(p, q)
    let arity = pp.p().max(pp.q()) as usize;
    let misses: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Option<usize>> {
            let cat = generator_catalog(sig_of(i))?;
            Ok((engine.clg(&cat.functions, arity)? != *sig_of(i)).then_some(i))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    checks.push(check(
        "catalog reproduces clone",
        misses.is_empty(),
        format!("{} of {n} clones reproduced{}", n - misses.len(), fmt_nodes(&misses)),
    ));

    // (f) pi1 family bound and injective triple map
    let family: Vec<usize> = (0..n).filter(|&i| graph.nodes[i].flags.pi1_pi1_zero).collect();
    let triples: HashSet<_> = family.iter().map(|&i| pi1_profile(sig_of(i))).collect::<Result<_>>()?;
    checks.push(check(
        "pi1 family",
        family.len() as u128 <= bounds.pi1_upper && triples.len() == family.len(),
        format!("{} clones, {} distinct triples, bound {}", family.len(), triples.len(), bounds.pi1_upper),
    ));

    // polynomial flag means every constant is a member
    let constants: Vec<MixedFun> = (0..pp.p())
        .flat_map(|a| (0..pp.q()).map(move |b| (a, b)))
        .map(|v| MixedFun::constant(pp, 1, v))
        .collect::<Result<_>>()?;
    let mut bad = Vec::new();
    for i in 0..n {
        let all_in = constants.iter().map(|c| member(sig_of(i), c)).collect::<Result<Vec<_>>>()?.iter().all(|&b| b);
        if all_in != graph.nodes[i].flags.polynomial {
            bad.push(i);
        }
    }
    checks.push(check("polynomial flag", bad.is_empty(), format!("{} mismatches{}", bad.len(), fmt_nodes(&bad))));

    // flags agree with relation preservation on the catalog; catalogs share
    // most members, so each distinct function is classified once
    let catalogs: Vec<Vec<MixedFun>> =
        (0..n).map(|i| generator_catalog(sig_of(i)).map(|c| c.functions)).collect::<Result<_>>()?;
    let distinct: Vec<&MixedFun> = catalogs.iter().flatten().collect::<HashSet<_>>().into_iter().collect();
    let reports: HashMap<&MixedFun, StructureReport> =
        distinct.par_iter().map(|&f| classify(f).map(|r| (f, r))).collect::<Result<_>>()?;
    let mut bad = Vec::new();
    for i in 0..n {
        let flags = flags_from_reports(sig_of(i), catalogs[i].iter().map(|f| &reports[f]))?;
        let f = graph.nodes[i].flags;
        let same = (flags.preserves_pi1, flags.preserves_pi2, flags.pi1_pi1_zero, flags.one_one_le_pi1, flags.one_one_le_pi2)
            == (f.preserves_pi1, f.preserves_pi2, f.pi1_pi1_zero, f.one_one_le_pi1, f.one_one_le_pi2);
        if !same {
            bad.push(i);
        }
    }
    checks.push(check("flags match relations", bad.is_empty(), format!("{} mismatches{}", bad.len(), fmt_nodes(&bad))));

    let counts = ReportCounts {
        clones: n,
        diamond: diamond.len(),
        polynomial: graph.count(|f| f.polynomial),
        pi1_family: family.len(),
        gamma_image: image_ids.len(),
        clonoids_pq: pq.len(),
        clonoids_qp: qp.len(),
    };
    Ok(VerificationReport { passed: checks.iter().all(|c| c.passed), counts, bounds, checks })
}

fn fmt_nodes(ids: &[usize]) -> String {
    if ids.is_empty() {
        String::new()
    } else {
        format!("; first bad node {}", ids[0])
    }
}

/// Congruence flags recomputed from relation preservation of the catalog members.
pub fn catalog_flags(sig: &CloneSignature) -> Result<CloneFlags> {
    let reports = generator_catalog(sig)?.functions.iter().map(classify).collect::<Result<Vec<_>>>()?;
    flags_from_reports(sig, reports.iter())
}

fn flags_from_reports<'a>(
    sig: &CloneSignature,
    reports: impl Iterator<Item = &'a StructureReport>,
) -> Result<CloneFlags> {
    let mut f = CloneFlags {
        preserves_pi1: true,
        preserves_pi2: true,
        preserves_diamond: true,
        polynomial: false,
        pi1_pi1_zero: true,
        one_one_le_pi1: true,
        one_one_le_pi2: true,
    };
    for r in reports {
        f.preserves_pi1 &= r.preserves_pi1;
        f.preserves_pi2 &= r.preserves_pi2;
        f.pi1_pi1_zero &= r.preserves_pi1 && r.preserves_pi1_pi1_zero;
        f.one_one_le_pi1 &= r.preserves_one_one_pi1;
        f.one_one_le_pi2 &= r.preserves_one_one_pi2;
    }
    f.preserves_diamond = f.preserves_pi1 && f.preserves_pi2;
    let pp = sig.pp();
    f.polynomial = member(sig, &MixedFun::constant(pp, 1, (1, 0))?)? && member(sig, &MixedFun::constant(pp, 1, (0, 1))?)?;
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dot,
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(Format::Dot),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => invalid(format!("unknown format {other:?}; expected dot, json or csv")),
        }
    }
}

pub fn export(graph: &LatticeGraph, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(graph).expect("graph serializes") + "\n",
        Format::Csv => export_csv(graph),
        Format::Dot => export_dot(graph),
    }
}

fn export_csv(graph: &LatticeGraph) -> String {
    let mut out = String::from(
        "id,pi1,pi2,diamond,polynomial,pi1_pi1_zero,one_one_le_pi1,one_one_le_pi2,rho_dims,psi_dims\n",
    );
    let p = graph.p as usize;
    for n in &graph.nodes {
        let f = &n.flags;
        let dims = n.signature.dims();
        let join = |d: &[usize]| d.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            n.id,
            f.preserves_pi1,
            f.preserves_pi2,
            f.preserves_diamond,
            f.polynomial,
            f.pi1_pi1_zero,
            f.one_one_le_pi1,
            f.one_one_le_pi2,
            join(&dims[..=p]),
            join(&dims[p + 1..])
        );
    }
    out
}

fn export_dot(graph: &LatticeGraph) -> String {
    let mut out = format!("digraph clones_{}_{} {{\n  rankdir=BT;\n  node [shape=box];\n", graph.p, graph.q);
    let heights = graph.heights();
    for (i, n) in graph.nodes.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label=\"{}\\n{}\"];", &n.id[..12], n.flags.labels().join(" "));
    }
    let mut ranks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &h) in heights.iter().enumerate() {
        ranks.entry(h).or_default().push(i);
    }
    for nodes in ranks.values() {
        let names: Vec<String> = nodes.iter().map(|i| format!("n{i}")).collect();
        let _ = writeln!(out, "  {{ rank=same; {}; }}", names.join("; "));
    }
    for [lo, hi] in &graph.cover_edges {
        let _ = writeln!(out, "  n{lo} -> n{hi};");
    }
    out.push_str("}\n");
    out
}

/// Parse a JSON export; ids, flags and cover edges must match the signatures.
pub fn import_json(text: &str) -> Result<LatticeGraph> {
    let graph: LatticeGraph =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad lattice JSON: {e}")))?;
    let pp = graph.pp()?;
    let mut index = HashMap::new();
    for (i, n) in graph.nodes.iter().enumerate() {
        if n.signature.pp() != pp {
            return invalid(format!("node {i} is over a different prime pair"));
        }
        if n.id != n.signature.id() || n.flags != n.signature.flags() {
            return invalid(format!("node {i} has an id or flags that do not match its signature"));
        }
        index.insert(n.id.clone(), i);
    }
    let rebuilt = LatticeGraph::from_signatures(pp, graph.work_arity, graph.nodes.iter().map(|n| n.signature.clone()));
    if rebuilt.nodes != graph.nodes || rebuilt.cover_edges != graph.cover_edges {
        return invalid("nodes are not sorted by id or cover edges do not match the order");
    }
    Ok(graph)
}
