//! Exhaustive oracles for small degree sequences.
//!
//! Everything here works in exact rational arithmetic: configurations are
//! enumerated outright, the switching process is solved as an absorbing
//! Markov chain on configurations, and red-path weights are evaluated by
//! enumerating configuration lifts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::degseq::DegreeSequence;
use crate::error::{Error, Result};
use crate::multigraph::{next_permutation, Configuration, HalfEdge, HalfEdgeLayout, Multigraph};
use crate::switching::{bad_edge_choices, check_family, partner_pool, BadEdgeRule, SwitchVariant};

/// Largest half-edge count accepted by the enumerators; `13!! = 135135`.
pub const MAX_ENUMERATION_HALF_EDGES: u64 = 14;

/// Largest number of lifts [`path_family_weight_by_lifts`] will visit.
pub const MAX_LIFTS: u64 = 10_000_000;

fn check_cap(seq: &DegreeSequence) -> Result<()> {
    if seq.half_edges() > MAX_ENUMERATION_HALF_EDGES {
        return Err(Error::ScaleCap(seq.half_edges(), MAX_ENUMERATION_HALF_EDGES));
    }
    seq.require_even()
}

fn ratio(a: u64, b: u64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// `(N - 1)!!`, the number of configurations on `N` half-edges.
pub fn configuration_count(half_edges: u64) -> u64 {
    (1..half_edges).step_by(2).product()
}

/// Every perfect matching of the half-edges, in lexicographic order of the
/// mate arrays' construction.
pub fn enumerate_configurations(seq: &DegreeSequence) -> Result<Vec<Configuration>> {
    check_cap(seq)?;
    let layout = Arc::new(HalfEdgeLayout::new(seq));
    let total = layout.len();
    let mut out = Vec::with_capacity(configuration_count(total as u64) as usize);
    let mut mate = vec![u32::MAX; total];
    fn recurse(mate: &mut Vec<u32>, layout: &Arc<HalfEdgeLayout>, out: &mut Vec<Configuration>) {
        let Some(first) = mate.iter().position(|&m| m == u32::MAX) else {
            out.push(Configuration::from_mates(layout.clone(), mate.clone()).expect("complete matching"));
            return;
        };
        for other in first + 1..mate.len() {
            if mate[other] != u32::MAX {
                continue;
            }
            mate[first] = other as u32;
            mate[other] = first as u32;
            recurse(mate, layout, out);
            mate[first] = u32::MAX;
            mate[other] = u32::MAX;
        }
    }
    recurse(&mut mate, &layout, &mut out);
    Ok(out)
}

/// Canonical byte encoding of a labeled multigraph: `n` then the sorted edge
/// multiset, all as big-endian `u16`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphKey(Vec<u8>);

impl GraphKey {
    pub fn of(g: &Multigraph) -> Self {
        let mut bytes = Vec::with_capacity(2 + 4 * g.edge_count());
        bytes.extend_from_slice(&(g.n() as u16).to_be_bytes());
        for &(u, v) in g.edges() {
            bytes.extend_from_slice(&(u as u16).to_be_bytes());
            bytes.extend_from_slice(&(v as u16).to_be_bytes());
        }
        GraphKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_multigraph(&self) -> Multigraph {
        let word = |i: usize| u16::from_be_bytes([self.0[i], self.0[i + 1]]) as u32;
        let n = word(0) as usize;
        let edges = (2..self.0.len()).step_by(4).map(|i| (word(i), word(i + 2)));
        Multigraph::from_edges(n, edges).expect("key encodes a valid multigraph")
    }
}

/// Probability law over labeled graphs on a fixed vertex set.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<P> {
    n: usize,
    masses: BTreeMap<GraphKey, P>,
}

pub type ExactDistribution = DiscreteDistribution<BigRational>;

impl<P: Clone + Signed> DiscreteDistribution<P> {
    pub fn new(n: usize) -> Self {
        DiscreteDistribution { n, masses: BTreeMap::new() }
    }

    pub fn point_mass(g: &Multigraph) -> Self {
        let mut d = Self::new(g.n());
        d.add(GraphKey::of(g), P::one());
        d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, key: GraphKey, p: P) {
        if p.is_zero() {
            return;
        }
        let slot = self.masses.entry(key).or_insert_with(P::zero);
        *slot = slot.clone() + p;
    }

    pub fn get(&self, key: &GraphKey) -> P {
        self.masses.get(key).cloned().unwrap_or_else(P::zero)
    }

    pub fn prob(&self, g: &Multigraph) -> P {
        self.get(&GraphKey::of(g))
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GraphKey, &P)> {
        self.masses.iter()
    }

    pub fn total(&self) -> P {
        self.masses.values().cloned().fold(P::zero(), |a, b| a + b)
    }

    /// Mass of the set of graphs satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&Multigraph) -> bool) -> P {
        self.masses.iter().filter(|(k, _)| pred(&k.to_multigraph())).fold(P::zero(), |a, (_, p)| a + p.clone())
    }

    /// Marginal law of the unlabelled isomorphism type.
    pub fn type_marginals(&self) -> BTreeMap<String, P> {
        let mut out: BTreeMap<String, P> = BTreeMap::new();
        for (k, p) in &self.masses {
            let t = k.to_multigraph().isomorphism_type();
            let slot = out.entry(t).or_insert_with(P::zero);
            *slot = slot.clone() + p.clone();
        }
        out
    }

    /// Divides every mass by the total.
    pub fn normalized(&self) -> Self {
        let t = self.total();
        DiscreteDistribution {
            n: self.n,
            masses: self.masses.iter().map(|(k, p)| (k.clone(), p.clone() / t.clone())).collect(),
        }
    }
}

impl ExactDistribution {
    pub fn to_f64(&self) -> DiscreteDistribution<f64> {
        DiscreteDistribution {
            n: self.n,
            masses: self.masses.iter().map(|(k, p)| (k.clone(), p.to_f64().unwrap_or(f64::NAN))).collect(),
        }
    }

    pub fn to_json(&self) -> DistributionJson {
        DistributionJson {
            n: self.n,
            entries: self
                .masses
                .iter()
                .map(|(k, p)| DistributionEntry {
                    edges: k.to_multigraph().edges().iter().map(|&(u, v)| [u + 1, v + 1]).collect(),
                    probability: p.to_string(),
                })
                .collect(),
            type_marginals: self.type_marginals().into_iter().map(|(t, p)| (t, p.to_string())).collect(),
        }
    }
}

impl DiscreteDistribution<f64> {
    pub fn to_json(&self) -> DistributionJson {
        DistributionJson {
            n: self.n,
            entries: self
                .masses
                .iter()
                .map(|(k, p)| DistributionEntry {
                    edges: k.to_multigraph().edges().iter().map(|&(u, v)| [u + 1, v + 1]).collect(),
                    probability: format!("{p}"),
                })
                .collect(),
            type_marginals: self.type_marginals().into_iter().map(|(t, p)| (t, format!("{p}"))).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistributionEntry {
    /// 1-indexed edge multiset.
    pub edges: Vec<[u32; 2]>,
    pub probability: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistributionJson {
    pub n: usize,
    pub entries: Vec<DistributionEntry>,
    pub type_marginals: BTreeMap<String, String>,
}

/// `1/2 sum |p - q|` over the union of supports.
pub fn tv_distance<P: Clone + Signed>(p: &DiscreteDistribution<P>, q: &DiscreteDistribution<P>) -> Result<P> {
    if p.n != q.n {
        return Err(Error::VertexCountMismatch(p.n, q.n));
    }
    let keys: BTreeSet<&GraphKey> = p.masses.keys().chain(q.masses.keys()).collect();
    let sum = keys.into_iter().map(|k| (p.get(k) - q.get(k)).abs()).fold(P::zero(), |a, b| a + b);
    Ok(sum / (P::one() + P::one()))
}

/// Distance between the isomorphism-type marginals.
pub fn type_tv_distance(p: &ExactDistribution, q: &ExactDistribution) -> BigRational {
    let (a, b) = (p.type_marginals(), q.type_marginals());
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let zero = BigRational::zero();
    let sum = keys
        .into_iter()
        .map(|k| (a.get(k).unwrap_or(&zero) - b.get(k).unwrap_or(&zero)).abs())
        .fold(BigRational::zero(), |x, y| x + y);
    sum / BigRational::from_integer(2.into())
}

/// Law of the configuration multigraph, by full enumeration.
pub fn configuration_distribution(seq: &DegreeSequence) -> Result<ExactDistribution> {
    let configs = enumerate_configurations(seq)?;
    let w = ratio(1, configs.len() as u64);
    let mut d = ExactDistribution::new(seq.n());
    for c in &configs {
        d.add(GraphKey::of(&c.project()), w.clone());
    }
    Ok(d)
}

/// Uniform law on simple graphs with degree sequence `seq`, obtained by
/// conditioning the configuration model on simplicity.
pub fn uniform_simple_distribution(seq: &DegreeSequence) -> Result<ExactDistribution> {
    check_cap(seq)?;
    seq.require_graphical()?;
    let mut counts: BTreeMap<GraphKey, u64> = BTreeMap::new();
    let mut simple = 0u64;
    for c in enumerate_configurations(seq)? {
        if c.is_simple() {
            simple += 1;
            *counts.entry(GraphKey::of(&c.project())).or_default() += 1;
        }
    }
    let mut d = ExactDistribution::new(seq.n());
    for (k, c) in counts {
        d.add(k, ratio(c, simple));
    }
    Ok(d)
}

/// One row of the absorbing chain: transient successors and absorbing
/// targets with their probabilities.
#[derive(Default)]
struct Row {
    trans: BTreeMap<usize, BigRational>,
    absorb: BTreeMap<usize, BigRational>,
}

fn add_to<K: Ord>(map: &mut BTreeMap<K, BigRational>, k: K, p: BigRational) {
    let slot = map.entry(k).or_insert_with(BigRational::zero);
    *slot += p;
}

/// State of the switching chain: either a configuration, or a multigraph
/// when the bad-edge rule only looks at vertex pairs.
trait ChainState: Clone {
    type Key: std::hash::Hash + Eq;
    fn key(&self) -> Self::Key;
    fn is_simple(&self) -> bool;
    fn graph_key(&self) -> GraphKey;
    fn bad_count(&self) -> usize;
    fn successors(&self, rule: BadEdgeRule, variant: SwitchVariant) -> Result<Vec<(Self, BigRational)>>;
}

impl ChainState for Configuration {
    type Key = Vec<u32>;

    fn key(&self) -> Vec<u32> {
        self.mates().to_vec()
    }

    fn is_simple(&self) -> bool {
        Configuration::is_simple(self)
    }

    fn graph_key(&self) -> GraphKey {
        GraphKey::of(&self.project())
    }

    fn bad_count(&self) -> usize {
        self.bad_edges().len()
    }

    fn successors(&self, rule: BadEdgeRule, variant: SwitchVariant) -> Result<Vec<(Self, BigRational)>> {
        let choices = bad_edge_choices(self, rule);
        let mut out = Vec::new();
        for &bad in &choices {
            let pool = partner_pool(self, bad, variant);
            if pool.is_empty() {
                return Err(Error::EmptyPartnerPool);
            }
            let w = ratio(1, (choices.len() * pool.len() * 2) as u64);
            for &(lo, hi) in &pool {
                for partner in [(lo, hi), (hi, lo)] {
                    let mut c = self.clone();
                    c.switch(bad, partner);
                    out.push((c, w.clone()));
                }
            }
        }
        Ok(out)
    }
}

/// Distinct vertex pairs of `g` with their multiplicities.
fn edge_groups(g: &Multigraph) -> Vec<((u32, u32), u64)> {
    let mut groups: Vec<((u32, u32), u64)> = Vec::new();
    for &e in g.edges() {
        match groups.last_mut() {
            Some((last, c)) if *last == e => *c += 1,
            _ => groups.push((e, 1)),
        }
    }
    groups
}

/// Whether the chain can run on multigraphs: the rule picks a vertex pair
/// and every copy of that pair leads to the same multigraph law.
fn lumpable(rule: BadEdgeRule) -> bool {
    !matches!(rule, BadEdgeRule::EdgeOrder)
}

impl ChainState for Multigraph {
    type Key = Multigraph;

    fn key(&self) -> Multigraph {
        self.clone()
    }

    fn is_simple(&self) -> bool {
        Multigraph::is_simple(self)
    }

    fn graph_key(&self) -> GraphKey {
        GraphKey::of(self)
    }

    fn bad_count(&self) -> usize {
        self.bad_edges().len()
    }

    fn successors(&self, rule: BadEdgeRule, variant: SwitchVariant) -> Result<Vec<(Self, BigRational)>> {
        let groups = edge_groups(self);
        let bad: Vec<((u32, u32), u64)> = groups.iter().copied().filter(|&((u, v), c)| u == v || c >= 2).collect();
        let lex = |&&((u, v), _): &&((u32, u32), u64)| (u != v, u, v);
        let choices: Vec<((u32, u32), BigRational)> = match rule {
            BadEdgeRule::Lex => bad.iter().min_by_key(lex).map(|&(e, _)| (e, BigRational::one())).into_iter().collect(),
            BadEdgeRule::MultiFirst => bad
                .iter()
                .filter(|((u, v), _)| u != v)
                .min_by_key(lex)
                .or_else(|| bad.iter().min_by_key(lex))
                .map(|&(e, _)| (e, BigRational::one()))
                .into_iter()
                .collect(),
            BadEdgeRule::Random => {
                let total: u64 = bad.iter().map(|&(_, c)| c).sum();
                bad.iter().map(|&(e, c)| (e, ratio(c, total))).collect()
            }
            BadEdgeRule::EdgeOrder => {
                return Err(Error::InvalidParameter("edge-order rule depends on half-edge labels".into()))
            }
        };
        let mut out = Vec::new();
        for ((u, v), w) in choices {
            let pool: Vec<((u32, u32), u64)> = groups
                .iter()
                .map(|&(e, c)| (e, if e == (u, v) { c - 1 } else { c }))
                .filter(|&((k, l), c)| {
                    c > 0 && (variant == SwitchVariant::AnyEdge || ![k, l].iter().any(|x| *x == u || *x == v))
                })
                .collect();
            let total: u64 = pool.iter().map(|&(_, c)| c).sum();
            if total == 0 {
                return Err(Error::EmptyPartnerPool);
            }
            for ((k, l), c) in pool {
                let p = &w * ratio(c, 2 * total);
                for (k, l) in [(k, l), (l, k)] {
                    let mut edges = self.edges().to_vec();
                    for e in [(u, v), (k.min(l), k.max(l))] {
                        let at = edges.binary_search(&e).expect("edge present");
                        edges.remove(at);
                    }
                    edges.push((u, l));
                    edges.push((k, v));
                    let g = Multigraph::from_edges(self.n(), edges).expect("same vertex set");
                    out.push((g, p.clone()));
                }
            }
        }
        Ok(out)
    }
}

/// Switching process as an absorbing Markov chain.
struct Chain {
    rows: Vec<Row>,
    targets: Vec<GraphKey>,
    /// Elimination order of the transient states.
    order: Vec<usize>,
}

impl Chain {
    /// Explores every state reachable from `initial` and records transition
    /// probabilities. Row `rows.len() - 1` is a virtual source holding the
    /// initial law.
    fn build<S: ChainState>(initial: &[(S, BigRational)], rule: BadEdgeRule, variant: SwitchVariant) -> Result<Self> {
        let mut index: HashMap<S::Key, usize> = HashMap::new();
        let mut states: Vec<S> = Vec::new();
        let mut target_index: HashMap<GraphKey, usize> = HashMap::new();
        let mut targets: Vec<GraphKey> = Vec::new();
        let mut rows: Vec<Row> = Vec::new();

        let mut place = |s: S, p: BigRational, row: &mut Row, states: &mut Vec<S>, rows: &mut Vec<Row>| {
            if s.is_simple() {
                let key = s.graph_key();
                let next = targets.len();
                let t = *target_index.entry(key.clone()).or_insert_with(|| {
                    targets.push(key);
                    next
                });
                add_to(&mut row.absorb, t, p);
            } else {
                let next = states.len();
                let i = *index.entry(s.key()).or_insert(next);
                if i == next {
                    states.push(s);
                    rows.push(Row::default());
                }
                add_to(&mut row.trans, i, p);
            }
        };

        let mut source = Row::default();
        for (s, p) in initial {
            place(s.clone(), p.clone(), &mut source, &mut states, &mut rows);
        }
        let mut next = 0;
        while next < states.len() {
            let mut row = Row::default();
            for (s, p) in states[next].successors(rule, variant)? {
                place(s, p, &mut row, &mut states, &mut rows);
            }
            rows[next] = row;
            next += 1;
        }
        rows.push(source);
        // states near absorption first keeps fill-in small
        let bad: Vec<usize> = states.iter().map(ChainState::bad_count).collect();
        let mut order: Vec<usize> = (0..states.len()).collect();
        order.sort_by_key(|&s| (bad[s], std::cmp::Reverse(s)));
        Ok(Chain { rows, targets, order })
    }

    /// Absorption law from the source, by eliminating transient states one
    /// at a time.
    fn solve(mut self, n: usize) -> Result<ExactDistribution> {
        let source = self.rows.len() - 1;
        let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.rows.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row.trans.keys() {
                preds[j].insert(i);
            }
        }
        for k in std::mem::take(&mut self.order) {
            let mut row = std::mem::take(&mut self.rows[k]);
            let stay = row.trans.remove(&k).unwrap_or_else(BigRational::zero);
            preds[k].remove(&k);
            if preds[k].is_empty() {
                for &j in row.trans.keys() {
                    preds[j].remove(&k);
                }
                continue;
            }
            if stay.is_one() {
                return Err(Error::NoAbsorbingState);
            }
            let scale = (BigRational::one() - stay).recip();
            for p in row.trans.values_mut().chain(row.absorb.values_mut()) {
                *p *= &scale;
            }
            for &j in row.trans.keys() {
                preds[j].remove(&k);
            }
            for i in std::mem::take(&mut preds[k]) {
                let w = self.rows[i].trans.remove(&k).expect("predecessor edge");
                for (&j, p) in &row.trans {
                    add_to(&mut self.rows[i].trans, j, &w * p);
                    preds[j].insert(i);
                }
                for (&t, p) in &row.absorb {
                    add_to(&mut self.rows[i].absorb, t, &w * p);
                }
            }
        }
        let src = &self.rows[source];
        debug_assert!(src.trans.is_empty());
        let mut d = ExactDistribution::new(n);
        for (&t, p) in &src.absorb {
            d.add(self.targets[t].clone(), p.clone());
        }
        Ok(d)
    }
}

/// Exact law of the switched graph started from a uniform configuration.
pub fn switched_distribution_exact(
    seq: &DegreeSequence,
    rule: BadEdgeRule,
    variant: SwitchVariant,
) -> Result<ExactDistribution> {
    if !lumpable(rule) {
        return switched_distribution_by_configurations(seq, rule, variant);
    }
    seq.require_graphical()?;
    let start = configuration_distribution(seq)?;
    let initial: Vec<_> = start.iter().map(|(k, p)| (k.to_multigraph(), p.clone())).collect();
    Chain::build(&initial, rule, variant)?.solve(seq.n())
}

/// [`switched_distribution_exact`] with configurations as chain states,
/// for every rule.
pub fn switched_distribution_by_configurations(
    seq: &DegreeSequence,
    rule: BadEdgeRule,
    variant: SwitchVariant,
) -> Result<ExactDistribution> {
    check_cap(seq)?;
    seq.require_graphical()?;
    let configs = enumerate_configurations(seq)?;
    let w = ratio(1, configs.len() as u64);
    let initial: Vec<_> = configs.into_iter().map(|c| (c, w.clone())).collect();
    Chain::build(&initial, rule, variant)?.solve(seq.n())
}

/// Exact law of the switched graph started from a fixed configuration.
pub fn switched_distribution_from(
    start: &Configuration,
    rule: BadEdgeRule,
    variant: SwitchVariant,
) -> Result<ExactDistribution> {
    let seq = start.layout().degree_sequence();
    check_cap(&seq)?;
    seq.require_graphical()?;
    if lumpable(rule) {
        Chain::build(&[(start.project(), BigRational::one())], rule, variant)?.solve(seq.n())
    } else {
        Chain::build(&[(start.clone(), BigRational::one())], rule, variant)?.solve(seq.n())
    }
}

/// Joint laws `P(final = G, run has property, S = s)` for silver and golden
/// runs, indexed by `s`. Probabilities are unconditional, so each map sums
/// to `P(property, S = s)`.
#[derive(Clone, Debug, Default)]
pub struct HistoryLaw {
    pub silver: BTreeMap<u64, ExactDistribution>,
    pub golden: BTreeMap<u64, ExactDistribution>,
}

impl HistoryLaw {
    pub fn golden_conditional(&self, s: u64) -> Option<ExactDistribution> {
        self.golden.get(&s).filter(|d| !d.is_empty()).map(DiscreteDistribution::normalized)
    }

    pub fn silver_conditional(&self, s: u64) -> Option<ExactDistribution> {
        self.silver.get(&s).filter(|d| !d.is_empty()).map(DiscreteDistribution::normalized)
    }
}

struct HistoryState {
    b0: BTreeSet<u32>,
    used: BTreeSet<u32>,
    golden: bool,
}

/// Enumerates every switching history from every initial configuration,
/// following only histories that stay silver.
pub fn silver_history_law(seq: &DegreeSequence, rule: BadEdgeRule, variant: SwitchVariant) -> Result<HistoryLaw> {
    check_cap(seq)?;
    seq.require_graphical()?;
    let configs = enumerate_configurations(seq)?;
    let w = ratio(1, configs.len() as u64);
    let mut law = HistoryLaw::default();
    for c in configs {
        let bad = c.bad_edges();
        let summary = c.bad_summary();
        let b0: BTreeSet<u32> = bad.iter().flat_map(|&(a, b)| [c.vertex(a), c.vertex(b)]).collect();
        let structures_disjoint = {
            let mut seen = BTreeSet::new();
            let mut structures: BTreeSet<(u32, u32, HalfEdge)> = BTreeSet::new();
            for &(a, b) in &bad {
                let (u, v) = (c.vertex(a), c.vertex(b));
                // loops are separate structures; copies of a pair are one
                structures.insert((u, v, if u == v { a } else { 0 }));
            }
            structures.iter().all(|&(u, v, _)| seen.insert(u) && (u == v || seen.insert(v)))
        };
        let golden = !summary.has_higher_multiplicity() && structures_disjoint;
        let state = HistoryState { b0, used: BTreeSet::new(), golden };
        explore(&c, state, w.clone(), 0, rule, variant, &mut law)?;
    }
    Ok(law)
}

fn explore(
    config: &Configuration,
    state: HistoryState,
    p: BigRational,
    depth: u64,
    rule: BadEdgeRule,
    variant: SwitchVariant,
    law: &mut HistoryLaw,
) -> Result<()> {
    let choices = bad_edge_choices(config, rule);
    if choices.is_empty() {
        let key = GraphKey::of(&config.project());
        let n = config.n();
        law.silver.entry(depth).or_insert_with(|| ExactDistribution::new(n)).add(key.clone(), p.clone());
        if state.golden {
            law.golden.entry(depth).or_insert_with(|| ExactDistribution::new(n)).add(key, p);
        }
        return Ok(());
    }
    for &bad in &choices {
        let pool = partner_pool(config, bad, variant);
        if pool.is_empty() {
            return Err(Error::EmptyPartnerPool);
        }
        let w = &p * ratio(1, (choices.len() * pool.len() * 2) as u64);
        for &(lo, hi) in &pool {
            let (k, l) = (config.vertex(lo), config.vertex(hi));
            if state.b0.contains(&k) || state.b0.contains(&l) {
                continue;
            }
            for partner in [(lo, hi), (hi, lo)] {
                let mut next = config.clone();
                next.switch(bad, partner);
                let created = [(bad.0, partner.1), (partner.0, bad.1)];
                if created.iter().any(|&(a, _)| next.is_bad(a)) {
                    continue;
                }
                let overlap = state.used.contains(&k) || state.used.contains(&l);
                let mut used = state.used.clone();
                used.insert(k);
                used.insert(l);
                let child = HistoryState { b0: state.b0.clone(), used, golden: state.golden && !overlap };
                explore(&next, child, w.clone(), depth + 1, rule, variant, law)?;
            }
        }
    }
    Ok(())
}

/// Candidate red paths of a multigraph: vertex sequences on distinct
/// vertices whose gap is a non-edge, weighted by the product of edge
/// multiplicities (1 on simple graphs).
struct PathCandidates {
    p2: Vec<(Vec<u32>, u128)>,
    p3: Vec<(Vec<u32>, u128)>,
}

impl PathCandidates {
    fn of(g: &Multigraph) -> Self {
        let n = g.n();
        let mut nbrs: Vec<Vec<(u32, u128)>> = vec![Vec::new(); n];
        let edges = g.edges();
        let mut i = 0;
        while i < edges.len() {
            let mut j = i + 1;
            while j < edges.len() && edges[j] == edges[i] {
                j += 1;
            }
            let (u, v) = edges[i];
            if u != v {
                nbrs[u as usize].push((v, (j - i) as u128));
                nbrs[v as usize].push((u, (j - i) as u128));
            }
            i = j;
        }
        let mut p2 = Vec::new();
        let mut p3 = Vec::new();
        for b in 0..n as u32 {
            let nb = &nbrs[b as usize];
            for (x, &(a, wa)) in nb.iter().enumerate() {
                for &(c, wc) in &nb[x + 1..] {
                    if !g.has_edge(a, c) {
                        p2.push((vec![a, b, c], wa * wc));
                    }
                }
            }
            for &(c, wbc) in nb {
                if c <= b {
                    continue;
                }
                for &(a, wa) in nb {
                    if a == c {
                        continue;
                    }
                    for &(d, wd) in &nbrs[c as usize] {
                        if d == b || d == a || g.has_edge(a, d) {
                            continue;
                        }
                        // each path a-b-c-d is listed once, with b < c
                        p3.push((vec![a, b, c, d], wa * wbc * wd));
                    }
                }
            }
        }
        PathCandidates { p2, p3 }
    }
}

/// Weighted count of vertex-disjoint pairs `(x in xs, y in ys)`, unordered
/// when `same` is set.
fn disjoint_pair_weight(n: usize, xs: &[(Vec<u32>, u128)], ys: &[(Vec<u32>, u128)], same: bool) -> u128 {
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, (vs, _)) in ys.iter().enumerate() {
        for &v in vs {
            by_vertex[v as usize].push(idx);
        }
    }
    let total_y: u128 = ys.iter().map(|(_, w)| w).sum();
    let mut stamp = vec![usize::MAX; ys.len()];
    let mut sum = 0u128;
    for (xi, (vs, wx)) in xs.iter().enumerate() {
        let mut hit = 0u128;
        for &v in vs {
            for &yi in &by_vertex[v as usize] {
                if stamp[yi] != xi {
                    stamp[yi] = xi;
                    hit += ys[yi].1;
                }
            }
        }
        sum += wx * (total_y - hit);
    }
    if same {
        sum / 2
    } else {
        sum
    }
}

/// Number of sets of `l` P2's and `m` P3's, pairwise vertex-disjoint, whose
/// gaps are non-edges. On multigraphs each path counts with the product of
/// its edge multiplicities.
pub fn zeta_lm(g: &Multigraph, l: usize, m: usize) -> u128 {
    let cand = PathCandidates::of(g);
    match (l, m) {
        (0, 0) => 1,
        (1, 0) => cand.p2.iter().map(|(_, w)| w).sum(),
        (0, 1) => cand.p3.iter().map(|(_, w)| w).sum(),
        (1, 1) => disjoint_pair_weight(g.n(), &cand.p3, &cand.p2, false),
        (2, 0) => disjoint_pair_weight(g.n(), &cand.p2, &cand.p2, true),
        (0, 2) => disjoint_pair_weight(g.n(), &cand.p3, &cand.p3, true),
        _ => {
            let mut used = vec![false; g.n()];
            count_families(&cand.p2, 0, l, &cand.p3, m, &mut used)
        }
    }
}

fn count_families(
    p2: &[(Vec<u32>, u128)],
    from2: usize,
    l: usize,
    p3: &[(Vec<u32>, u128)],
    m: usize,
    used: &mut [bool],
) -> u128 {
    if l == 0 {
        return count_p3_families(p3, 0, m, used);
    }
    let mut total = 0;
    for i in from2..p2.len() {
        let (vs, w) = &p2[i];
        if vs.iter().any(|&v| used[v as usize]) {
            continue;
        }
        vs.iter().for_each(|&v| used[v as usize] = true);
        total += w * count_families(p2, i + 1, l - 1, p3, m, used);
        vs.iter().for_each(|&v| used[v as usize] = false);
    }
    total
}

fn count_p3_families(p3: &[(Vec<u32>, u128)], from: usize, m: usize, used: &mut [bool]) -> u128 {
    if m == 0 {
        return 1;
    }
    let mut total = 0;
    for i in from..p3.len() {
        let (vs, w) = &p3[i];
        if vs.iter().any(|&v| used[v as usize]) {
            continue;
        }
        vs.iter().for_each(|&v| used[v as usize] = true);
        total += w * count_p3_families(p3, i + 1, m - 1, used);
        vs.iter().for_each(|&v| used[v as usize] = false);
    }
    total
}

/// Total weight of golden families of `s` paths: `sum_{l+m=s} 2^-m zeta_lm`.
pub fn zeta_golden(g: &Multigraph, s: usize) -> BigRational {
    (0..=s)
        .map(|m| {
            let count = BigInt::from(zeta_lm(g, s - m, m));
            BigRational::new(count, BigInt::from(2u32).pow(m as u32))
        })
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Uniform law reweighted by `zeta_golden(G, s)`.
pub fn golden_reweighted_uniform(seq: &DegreeSequence, s: usize) -> Result<ExactDistribution> {
    let uniform = uniform_simple_distribution(seq)?;
    let mut d = ExactDistribution::new(seq.n());
    for (k, p) in uniform.iter() {
        d.add(k.clone(), zeta_golden(&k.to_multigraph(), s) * p);
    }
    if d.is_empty() {
        return Ok(d);
    }
    Ok(d.normalized())
}

fn pairwise_vertex_disjoint(paths: &[Vec<u32>]) -> bool {
    let mut seen = BTreeSet::new();
    paths.iter().flatten().all(|&v| seen.insert(v))
}

/// Probability that a uniform configuration lift of `g` orders every P3 of
/// `family` with its middle edge after its switched edge. Vertex-disjoint
/// families use the closed form `2^-m`; others are enumerated.
pub fn path_family_weight(g: &Multigraph, family: &[Vec<u32>]) -> Result<BigRational> {
    check_family(g, family).map_err(Error::PathFamily)?;
    if pairwise_vertex_disjoint(family) {
        let m = family.iter().filter(|p| p.len() == 4).count();
        return Ok(BigRational::new(BigInt::one(), BigInt::from(2u32).pow(m as u32)));
    }
    path_family_weight_by_lifts(g, family)
}

/// [`path_family_weight`] by enumerating every permutation of half-edges at
/// the interior vertices of the P3's; other vertices do not affect the order
/// condition.
pub fn path_family_weight_by_lifts(g: &Multigraph, family: &[Vec<u32>]) -> Result<BigRational> {
    check_family(g, family).map_err(Error::PathFamily)?;
    if !g.is_simple() {
        return Err(Error::InvalidConfiguration("lift weights need a simple graph".into()));
    }
    let n = g.n();
    let mut nbrs: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(u, v) in g.edges() {
        nbrs[u as usize].push(v);
        nbrs[v as usize].push(u);
    }
    nbrs.iter_mut().for_each(|l| l.sort_unstable());
    let base_slot = |v: u32, w: u32| nbrs[v as usize].binary_search(&w).expect("edge present");

    let p3s: Vec<&Vec<u32>> = family.iter().filter(|p| p.len() == 4).collect();
    let mut central: Vec<u32> = p3s.iter().flat_map(|p| [p[1], p[2]]).collect();
    central.sort_unstable();
    central.dedup();

    let mut lifts: u64 = 1;
    for &v in &central {
        let d = nbrs[v as usize].len() as u64;
        lifts = (1..=d).try_fold(lifts, |acc, x| acc.checked_mul(x)).unwrap_or(u64::MAX);
        if lifts > MAX_LIFTS {
            return Err(Error::ScaleCap(lifts, MAX_LIFTS));
        }
    }

    let mut perms: Vec<Vec<usize>> = central.iter().map(|&v| (0..nbrs[v as usize].len()).collect()).collect();
    let pos = |v: u32| central.binary_search(&v).expect("central vertex");
    let mut good = 0u64;
    let mut total = 0u64;
    loop {
        total += 1;
        let slot = |v: u32, w: u32| perms[pos(v)][base_slot(v, w)];
        let all_ordered = p3s.iter().all(|p| {
            let (a, j, k, b) = (p[0], p[1], p[2], p[3]);
            let (beta, gamma) = (slot(j, a), slot(j, k));
            let (delta, eps) = (slot(k, j), slot(k, b));
            if j < k {
                (gamma, delta) > (beta, eps)
            } else {
                (delta, gamma) > (eps, beta)
            }
        });
        if all_ordered {
            good += 1;
        }
        // odometer over the per-vertex permutations
        let mut i = 0;
        loop {
            if i == perms.len() {
                return Ok(ratio(good, total));
            }
            if next_permutation(&mut perms[i]) {
                break;
            }
            perms[i].sort_unstable();
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[u32]) -> DegreeSequence {
        DegreeSequence::new(v.to_vec())
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn graph(n: usize, edges: &[(u32, u32)]) -> Multigraph {
        Multigraph::from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_configurations(&seq(&[1, 1])).unwrap().len(), 1);
        assert_eq!(enumerate_configurations(&seq(&[2, 2, 1, 1, 1, 1])).unwrap().len(), 105);
        assert_eq!(configuration_count(14), 135135);
        assert_eq!(
            enumerate_configurations(&seq(&[3; 6])).err(),
            Some(Error::ScaleCap(18, MAX_ENUMERATION_HALF_EDGES))
        );
    }

    #[test]
    fn key_round_trip() {
        let g = graph(5, &[(0, 0), (1, 2), (1, 2), (3, 4)]);
        assert_eq!(GraphKey::of(&g).to_multigraph(), g);
    }

    #[test]
    fn uniform_small_cases() {
        let d = uniform_simple_distribution(&seq(&[1, 1])).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.total(), q(1, 1));
        let d = uniform_simple_distribution(&seq(&[2, 2, 2])).unwrap();
        assert_eq!(d.type_marginals().get("C3"), Some(&q(1, 1)));
    }

    #[test]
    fn tv_basics() {
        let a = ExactDistribution::point_mass(&graph(2, &[(0, 1)]));
        let b = ExactDistribution::point_mass(&graph(2, &[(0, 0), (1, 1)]));
        assert_eq!(tv_distance(&a, &a).unwrap(), q(0, 1));
        assert_eq!(tv_distance(&a, &b).unwrap(), q(1, 1));
        let c = ExactDistribution::point_mass(&graph(3, &[(0, 1)]));
        assert!(tv_distance(&a, &c).is_err());
    }

    #[test]
    fn zeta_examples() {
        let path = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(zeta_lm(&path, 0, 1), 1);
        assert_eq!(zeta_lm(&path, 1, 0), 2);
        assert_eq!(zeta_lm(&path, 0, 0), 1);
        assert_eq!(zeta_golden(&path, 1), q(5, 2));
        assert_eq!(zeta_golden(&path, 0), q(1, 1));
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(zeta_lm(&tri, 1, 0), 0);
        assert_eq!(zeta_golden(&tri, 1), q(0, 1));
    }

    #[test]
    fn zeta_pair_fast_path_matches_backtracking() {
        let g = graph(10, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9), (1, 7), (2, 8)]);
        let cand = PathCandidates::of(&g);
        for (l, m) in [(1, 1), (2, 0), (0, 2)] {
            let mut used = vec![false; g.n()];
            let slow = count_families(&cand.p2, 0, l, &cand.p3, m, &mut used);
            assert_eq!(zeta_lm(&g, l, m), slow, "l={l} m={m}");
        }
    }

    #[test]
    fn family_weight_closed_form() {
        let g = graph(8, &[(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)]);
        let fam = vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]];
        assert_eq!(path_family_weight(&g, &fam).unwrap(), q(1, 4));
        assert_eq!(path_family_weight_by_lifts(&g, &fam).unwrap(), q(1, 4));
        let p2s = vec![vec![0, 1, 2], vec![5, 6, 7]];
        assert_eq!(path_family_weight(&g, &p2s).unwrap(), q(1, 1));
    }

    #[test]
    fn family_weight_rejects_bad_family() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!(matches!(path_family_weight(&tri, &[vec![0, 1, 2]]), Err(Error::PathFamily(_))));
    }
}
