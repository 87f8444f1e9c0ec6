//! The switching engine.
//!
//! A bad edge `{i, j}` (a loop or one copy of a multiple edge) is switched
//! with a partner `{k, l}` by replacing the two edges with `{i, l}` and
//! `{k, j}`. The bad edge is always taken with its lower half-edge first; the
//! partner orientation is random. Runs repeat until the configuration is
//! simple, restarting from a fresh configuration if a switch budget runs out.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multigraph::{BadSummary, Configuration, HalfEdge, Multigraph};
use crate::samplers::sample_configuration_in;

/// Which bad edge to switch next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BadEdgeRule {
    /// Loops before multiple edges; loops by vertex, multiple edges by
    /// endpoint pair, and copies of one multiple edge by half-edge labels.
    Lex,
    /// Same order as `Lex` but multiple edges come before loops.
    MultiFirst,
    /// Uniform over bad edge instances.
    Random,
    /// The bad edge with the smallest lower half-edge.
    EdgeOrder,
}

/// Where the partner edge is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchVariant {
    /// Any edge other than the bad edge itself.
    AnyEdge,
    /// Only edges sharing no vertex with the bad edge.
    Disjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct LexKey {
    class: u8,
    u: u32,
    v: u32,
    lo: HalfEdge,
    hi: HalfEdge,
}

impl LexKey {
    fn of(config: &Configuration, (lo, hi): (HalfEdge, HalfEdge)) -> Self {
        let u = config.vertex(lo);
        let v = config.vertex(hi);
        LexKey { class: u8::from(u != v), u, v, lo, hi }
    }

    fn edge(&self) -> (HalfEdge, HalfEdge) {
        (self.lo, self.hi)
    }

    fn touches(&self, w: u32) -> bool {
        self.u == w || self.v == w
    }
}

/// Applies `rule` to an ordered set of bad edges. Deterministic rules give
/// one edge; `Random` gives all of them.
fn choices_from(bad: &BTreeSet<LexKey>, rule: BadEdgeRule) -> Vec<(HalfEdge, HalfEdge)> {
    match rule {
        BadEdgeRule::Lex => bad.iter().next().map(LexKey::edge).into_iter().collect(),
        BadEdgeRule::MultiFirst => {
            bad.iter().find(|k| k.class == 1).or_else(|| bad.iter().next()).map(LexKey::edge).into_iter().collect()
        }
        BadEdgeRule::EdgeOrder => bad.iter().min_by_key(|k| k.lo).map(LexKey::edge).into_iter().collect(),
        BadEdgeRule::Random => bad.iter().map(LexKey::edge).collect(),
    }
}

fn bad_key_set(config: &Configuration) -> BTreeSet<LexKey> {
    config.bad_edges().into_iter().map(|e| LexKey::of(config, e)).collect()
}

/// Bad edges `rule` may pick next, each equally likely. Empty iff simple.
pub fn bad_edge_choices(config: &Configuration, rule: BadEdgeRule) -> Vec<(HalfEdge, HalfEdge)> {
    choices_from(&bad_key_set(config), rule)
}

pub fn pick_bad_edge<R: Rng + ?Sized>(
    config: &Configuration,
    rule: BadEdgeRule,
    rng: &mut R,
) -> Result<(HalfEdge, HalfEdge)> {
    let choices = bad_edge_choices(config, rule);
    match choices.len() {
        0 => Err(Error::AlreadySimple),
        1 => Ok(choices[0]),
        len => Ok(choices[rng.gen_range(0..len)]),
    }
}

/// Edges `{lo, hi}` admissible as partners of `bad`, in half-edge order.
pub fn partner_pool(
    config: &Configuration,
    bad: (HalfEdge, HalfEdge),
    variant: SwitchVariant,
) -> Vec<(HalfEdge, HalfEdge)> {
    let bi = config.vertex(bad.0);
    let bj = config.vertex(bad.1);
    config
        .edges()
        .filter(|&(lo, _)| lo != bad.0 && lo != bad.1)
        .filter(|&(lo, hi)| match variant {
            SwitchVariant::AnyEdge => true,
            SwitchVariant::Disjoint => {
                let (k, l) = (config.vertex(lo), config.vertex(hi));
                k != bi && k != bj && l != bi && l != bj
            }
        })
        .collect()
}

fn disjoint_pool_size(config: &Configuration, bad: (HalfEdge, HalfEdge)) -> usize {
    let layout = config.layout();
    let bi = config.vertex(bad.0);
    let bj = config.vertex(bad.1);
    let mut incident: Vec<HalfEdge> = layout
        .half_edges_of(bi)
        .chain(if bi == bj { 0..0 } else { layout.half_edges_of(bj) })
        .map(|h| h.min(config.mate(h)))
        .collect();
    incident.sort_unstable();
    incident.dedup();
    config.edge_count() - incident.len()
}

/// Draws a partner for `bad` and returns it oriented as `(k, l)`.
///
/// Draw order: repeated uniform half-edge indices until one lies on an
/// admissible edge; that half-edge becomes `k` and its mate `l`. This makes
/// the edge uniform over the pool and the orientation a fair coin.
fn draw_partner<R: Rng + ?Sized>(
    config: &Configuration,
    bad: (HalfEdge, HalfEdge),
    variant: SwitchVariant,
    rng: &mut R,
) -> Result<(HalfEdge, HalfEdge)> {
    let total = config.mates().len() as u32;
    let bi = config.vertex(bad.0);
    let bj = config.vertex(bad.1);
    match variant {
        SwitchVariant::AnyEdge => {
            if config.edge_count() < 2 {
                return Err(Error::EmptyPartnerPool);
            }
            loop {
                let h = rng.gen_range(0..total);
                if h != bad.0 && h != bad.1 {
                    return Ok((h, config.mate(h)));
                }
            }
        }
        SwitchVariant::Disjoint => {
            if disjoint_pool_size(config, bad) == 0 {
                return Err(Error::EmptyPartnerPool);
            }
            loop {
                let h = rng.gen_range(0..total);
                let m = config.mate(h);
                let (k, l) = (config.vertex(h), config.vertex(m));
                if k != bi && k != bj && l != bi && l != bj {
                    return Ok((h, m));
                }
            }
        }
    }
}

/// One switching step on `config`. Returns the step record.
pub fn switch_step<R: Rng + ?Sized>(
    config: &mut Configuration,
    bad: (HalfEdge, HalfEdge),
    variant: SwitchVariant,
    rng: &mut R,
) -> Result<SwitchStep> {
    let bad = (bad.0.min(bad.1), bad.0.max(bad.1));
    if config.mate(bad.0) != bad.1 {
        return Err(Error::InvalidConfiguration(format!("{bad:?} is not an edge")));
    }
    let partner = draw_partner(config, bad, variant, rng)?;
    let step = SwitchStep::new(config, bad, partner);
    config.switch(bad, partner);
    Ok(step)
}

/// Record of a single switching.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchStep {
    /// The bad edge, lower half-edge first.
    pub bad: [HalfEdge; 2],
    /// Partner half-edges in the order used: `(k, l)`.
    pub partner: [HalfEdge; 2],
    /// True when the partner was used upper half-edge first.
    pub flipped: bool,
    pub was_loop: bool,
}

impl SwitchStep {
    fn new(config: &Configuration, bad: (HalfEdge, HalfEdge), partner: (HalfEdge, HalfEdge)) -> Self {
        SwitchStep {
            bad: [bad.0, bad.1],
            partner: [partner.0, partner.1],
            flipped: partner.0 > partner.1,
            was_loop: config.vertex(bad.0) == config.vertex(bad.1),
        }
    }

    /// The two edges created by this step.
    pub fn created(&self) -> [(HalfEdge, HalfEdge); 2] {
        let [i, j] = self.bad;
        let [k, l] = self.partner;
        [(i.min(l), i.max(l)), (k.min(j), k.max(j))]
    }
}

/// Full record of one run from its last (re)start to a simple graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchTrace {
    /// Number of switchings since the last restart.
    #[serde(rename = "S")]
    pub switches: u64,
    pub steps: Vec<SwitchStep>,
    pub initial: BadSummary,
    /// Endpoints of the initial bad edges, sorted.
    pub initial_bad_vertices: Vec<u32>,
    pub new_bad_created: bool,
    pub silver: bool,
    pub golden: bool,
    pub restarted: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub silver: bool,
    pub golden: bool,
}

#[derive(Clone, Debug)]
pub struct SwitchOutcome {
    pub graph: Multigraph,
    pub trace: SwitchTrace,
    /// Configuration the trace starts from (after any restart).
    pub initial: Configuration,
    pub final_config: Configuration,
}

/// Default per-attempt switch budget, `50 (L + M + 1)`.
pub fn default_max_switches(initial: &BadSummary) -> u64 {
    50 * (initial.loops + initial.parallel_pairs + 1)
}

/// Incrementally maintained bad-edge set of a configuration being switched.
struct Switcher {
    config: Configuration,
    bad: BTreeSet<LexKey>,
    scratch: Vec<u32>,
}

impl Switcher {
    fn new(config: Configuration) -> Self {
        let mut s = Switcher { bad: BTreeSet::new(), scratch: vec![0; config.n()], config };
        for v in 0..s.config.n() as u32 {
            s.scan_vertex(v);
        }
        s
    }

    /// Inserts every bad edge at `v` into the set.
    fn scan_vertex(&mut self, v: u32) {
        let range = self.config.layout().half_edges_of(v);
        for h in range.clone() {
            let w = self.config.vertex(self.config.mate(h));
            self.scratch[w as usize] += 1;
        }
        for h in range.clone() {
            let m = self.config.mate(h);
            let w = self.config.vertex(m);
            if w == v || self.scratch[w as usize] >= 2 {
                self.bad.insert(LexKey::of(&self.config, (h.min(m), h.max(m))));
            }
        }
        for h in range {
            let w = self.config.vertex(self.config.mate(h));
            self.scratch[w as usize] = 0;
        }
    }

    fn apply(&mut self, bad: (HalfEdge, HalfEdge), partner: (HalfEdge, HalfEdge)) {
        let mut touched = [bad.0, bad.1, partner.0, partner.1].map(|h| self.config.vertex(h));
        self.config.switch(bad, partner);
        touched.sort_unstable();
        self.bad.retain(|k| !touched.iter().any(|&w| k.touches(w)));
        let mut prev = u32::MAX;
        for w in touched {
            if w != prev {
                self.scan_vertex(w);
                prev = w;
            }
        }
    }

    fn is_bad_edge(&self, e: (HalfEdge, HalfEdge)) -> bool {
        self.bad.contains(&LexKey::of(&self.config, e))
    }
}

/// Switches `config` until it is simple.
///
/// When an attempt exceeds its budget (`max_switches`, or
/// [`default_max_switches`] when `None`), a fresh uniform configuration is
/// drawn and the run restarts; the trace then describes the last attempt.
pub fn run_to_simple<R: Rng + ?Sized>(
    config: Configuration,
    rule: BadEdgeRule,
    variant: SwitchVariant,
    rng: &mut R,
    max_switches: Option<u64>,
) -> Result<SwitchOutcome> {
    if !config.layout().is_graphical() {
        return Err(config.layout().degree_sequence().require_graphical().err().unwrap_or(Error::NotGraphical));
    }
    let mut current = config;
    let mut restarted = 0u32;
    loop {
        if let Some(outcome) = attempt(current.clone(), rule, variant, rng, max_switches, restarted)? {
            return Ok(outcome);
        }
        restarted += 1;
        current = sample_configuration_in(current.layout().clone(), rng);
    }
}

fn attempt<R: Rng + ?Sized>(
    config: Configuration,
    rule: BadEdgeRule,
    variant: SwitchVariant,
    rng: &mut R,
    max_switches: Option<u64>,
    restarted: u32,
) -> Result<Option<SwitchOutcome>> {
    let initial = config.clone();
    let mut sw = Switcher::new(config);
    let pairs: Vec<(u32, u32)> = sw.bad.iter().map(|k| (k.u, k.v)).collect();
    let summary = BadSummary::from_sorted_edges(&pairs);
    let budget = max_switches.unwrap_or_else(|| default_max_switches(&summary));

    let mut b0: Vec<u32> = sw.bad.iter().flat_map(|k| [k.u, k.v]).collect();
    b0.sort_unstable();
    b0.dedup();
    let structures_disjoint = bad_structures_disjoint(&sw.bad);

    let mut steps = Vec::new();
    let mut new_bad = false;
    let mut partner_hits_b0 = false;
    let mut partners_overlap = false;
    let mut partner_vertices: HashSet<u32> = HashSet::new();

    loop {
        let choices = choices_from(&sw.bad, rule);
        let bad = match choices.len() {
            0 => break,
            1 => choices[0],
            len => choices[rng.gen_range(0..len)],
        };
        if steps.len() as u64 >= budget {
            return Ok(None);
        }
        let partner = draw_partner(&sw.config, bad, variant, rng)?;
        let step = SwitchStep::new(&sw.config, bad, partner);
        let (k, l) = (sw.config.vertex(partner.0), sw.config.vertex(partner.1));
        if b0.binary_search(&k).is_ok() || b0.binary_search(&l).is_ok() {
            partner_hits_b0 = true;
        }
        let fresh_k = partner_vertices.insert(k);
        let fresh_l = k == l || partner_vertices.insert(l);
        if !(fresh_k && fresh_l) {
            partners_overlap = true;
        }
        sw.apply(bad, partner);
        if step.created().iter().any(|&e| sw.is_bad_edge(e)) {
            new_bad = true;
        }
        steps.push(step);
    }

    let silver = restarted == 0 && !new_bad && !partner_hits_b0;
    let golden = silver && !summary.has_higher_multiplicity() && structures_disjoint && !partners_overlap;
    let trace = SwitchTrace {
        switches: steps.len() as u64,
        steps,
        initial: summary,
        initial_bad_vertices: b0,
        new_bad_created: new_bad,
        silver,
        golden,
        restarted,
    };
    let graph = sw.config.project();
    Ok(Some(SwitchOutcome { graph, trace, initial, final_config: sw.config }))
}

/// True when distinct loops and distinct multiple edges share no vertex.
fn bad_structures_disjoint(bad: &BTreeSet<LexKey>) -> bool {
    let mut structures: Vec<(u32, u32)> = Vec::new();
    for k in bad {
        // every loop is its own structure; copies of one pair form one
        if k.u == k.v || structures.last() != Some(&(k.u, k.v)) {
            structures.push((k.u, k.v));
        }
    }
    let mut seen = HashSet::new();
    for (u, v) in structures {
        if !seen.insert(u) || (u != v && !seen.insert(v)) {
            return false;
        }
    }
    true
}

/// Recomputes the silver and golden properties by replaying `trace` from
/// `initial`, checking full bad-edge sets after every step.
pub fn classify(initial: &Configuration, trace: &SwitchTrace) -> Result<Classification> {
    if trace.restarted > 0 {
        return Ok(Classification { silver: false, golden: false });
    }
    let mut config = initial.clone();
    let summary = config.bad_summary();
    let mut bad: BTreeSet<(HalfEdge, HalfEdge)> = config.bad_edges().into_iter().collect();
    let b0: BTreeSet<u32> = bad.iter().flat_map(|&(a, b)| [config.vertex(a), config.vertex(b)]).collect();
    let disjoint = bad_structures_disjoint(&bad.iter().map(|&e| LexKey::of(&config, e)).collect());

    let mut s1 = true;
    let mut s2 = true;
    let mut g3 = true;
    let mut used: BTreeSet<u32> = BTreeSet::new();
    for step in &trace.steps {
        let b = (step.bad[0], step.bad[1]);
        let p = (step.partner[0], step.partner[1]);
        if config.mate(b.0) != b.1 || config.mate(p.0) != p.1 || !bad.contains(&b) {
            return Err(Error::InvalidConfiguration("trace does not replay".into()));
        }
        let (k, l) = (config.vertex(p.0), config.vertex(p.1));
        if b0.contains(&k) || b0.contains(&l) {
            s2 = false;
        }
        let mut ends = vec![k, l];
        ends.dedup();
        if ends.iter().any(|v| used.contains(v)) {
            g3 = false;
        }
        used.extend(ends);
        config.switch(b, p);
        let after: BTreeSet<(HalfEdge, HalfEdge)> = config.bad_edges().into_iter().collect();
        if !after.is_subset(&bad) {
            s1 = false;
        }
        bad = after;
    }
    if !bad.is_empty() {
        return Err(Error::InvalidConfiguration("trace does not end simple".into()));
    }
    let silver = s1 && s2;
    Ok(Classification { silver, golden: silver && !summary.has_higher_multiplicity() && disjoint && g3 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PathKind {
    P2,
    P3,
}

/// A path left behind by one switching of a silver run.
///
/// For a `P2` from a loop at `a` switched with partner `(k, l)`,
/// `half_edges = [l, a_1, a_2, k]`. For a `P3` from a copy `{j_b, k_e}` of a
/// multiple edge, `half_edges = [l, j_b, j_g, k_d, k_e, k]` where `{j_g, k_d}`
/// is the surviving middle copy.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RedPath {
    pub kind: PathKind,
    pub vertices: Vec<u32>,
    pub half_edges: Vec<HalfEdge>,
    /// Endpoints of the path, which are the endpoints of the partner edge.
    pub gap: (u32, u32),
}

impl RedPath {
    /// For a `P3`, whether the middle copy comes after the switched copy in
    /// half-edge order. Always true for `P2`.
    pub fn middle_after_switched(&self) -> bool {
        match self.kind {
            PathKind::P2 => true,
            PathKind::P3 => {
                let h = &self.half_edges;
                let switched = (h[1].min(h[4]), h[1].max(h[4]));
                let middle = (h[2].min(h[3]), h[2].max(h[3]));
                middle > switched
            }
        }
    }
}

/// Red paths of a silver run, in step order.
pub fn red_paths(trace: &SwitchTrace, final_config: &Configuration) -> Result<Vec<RedPath>> {
    if !trace.silver {
        return Err(Error::NotSilver);
    }
    let layout = final_config.layout();
    let mut out = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        let [p, q] = step.bad;
        let [k, l] = step.partner;
        let (vk, vl) = (final_config.vertex(k), final_config.vertex(l));
        let gap = (vk.min(vl), vk.max(vl));
        let (j, jj) = (final_config.vertex(p), final_config.vertex(q));
        if step.was_loop {
            out.push(RedPath { kind: PathKind::P2, vertices: vec![vl, j, vk], half_edges: vec![l, p, q, k], gap });
        } else {
            let mid_j = layout
                .half_edges_of(j)
                .find(|&h| final_config.vertex(final_config.mate(h)) == jj)
                .ok_or_else(|| Error::InvalidConfiguration("multiple edge has no surviving copy".into()))?;
            let mid_k = final_config.mate(mid_j);
            out.push(RedPath {
                kind: PathKind::P3,
                vertices: vec![vl, j, jj, vk],
                half_edges: vec![l, p, mid_j, mid_k, q, k],
                gap,
            });
        }
    }
    Ok(out)
}

/// A structural condition a family of red paths must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyViolation {
    /// A path is not a P2 or P3 on distinct vertices of the graph.
    PathShape(usize),
    /// Two paths share an edge other than a common P3 middle edge.
    SharedEdge(usize, usize),
    /// A leaf of one path is an interior vertex of another.
    LeafInterior(usize, usize),
    /// Two paths have the same gap.
    RepeatedGap(usize, usize),
    /// A gap is an edge of the graph.
    GapIsEdge(usize),
}

impl fmt::Display for FamilyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyViolation::PathShape(i) => write!(f, "path shape: path {i} is not a P2/P3 in the graph"),
            FamilyViolation::SharedEdge(a, b) => write!(f, "edge disjointness: paths {a} and {b} share an edge"),
            FamilyViolation::LeafInterior(a, b) => {
                write!(f, "leaf/interior separation: a leaf of path {a} is interior to path {b}")
            }
            FamilyViolation::RepeatedGap(a, b) => write!(f, "distinct gaps: paths {a} and {b} have the same gap"),
            FamilyViolation::GapIsEdge(i) => write!(f, "gap non-edge: the gap of path {i} is an edge"),
        }
    }
}

/// Checks the structural red-path conditions for paths given as vertex
/// sequences in the simple graph `g`.
pub fn check_family(g: &Multigraph, paths: &[Vec<u32>]) -> std::result::Result<(), FamilyViolation> {
    let norm = |a: u32, b: u32| (a.min(b), a.max(b));
    for (i, p) in paths.iter().enumerate() {
        let mut vs = p.clone();
        vs.sort_unstable();
        vs.dedup();
        let ok_len = p.len() == 3 || p.len() == 4;
        let ok = ok_len
            && vs.len() == p.len()
            && p.iter().all(|&v| (v as usize) < g.n())
            && p.windows(2).all(|w| g.has_edge(w[0], w[1]));
        if !ok {
            return Err(FamilyViolation::PathShape(i));
        }
    }
    for (a, pa) in paths.iter().enumerate() {
        for (b, pb) in paths.iter().enumerate().skip(a + 1) {
            let middle = |p: &Vec<u32>| (p.len() == 4).then(|| norm(p[1], p[2]));
            for ea in pa.windows(2).map(|w| norm(w[0], w[1])) {
                for eb in pb.windows(2).map(|w| norm(w[0], w[1])) {
                    if ea == eb && !(middle(pa) == Some(ea) && middle(pb) == Some(eb)) {
                        return Err(FamilyViolation::SharedEdge(a, b));
                    }
                }
            }
        }
    }
    for (a, pa) in paths.iter().enumerate() {
        let leaves = [pa[0], pa[pa.len() - 1]];
        for (b, pb) in paths.iter().enumerate() {
            if a != b && leaves.iter().any(|l| pb[1..pb.len() - 1].contains(l)) {
                return Err(FamilyViolation::LeafInterior(a, b));
            }
        }
    }
    let gaps: Vec<(u32, u32)> = paths.iter().map(|p| norm(p[0], p[p.len() - 1])).collect();
    for a in 0..gaps.len() {
        for b in a + 1..gaps.len() {
            if gaps[a] == gaps[b] {
                return Err(FamilyViolation::RepeatedGap(a, b));
            }
        }
    }
    for (i, &(u, v)) in gaps.iter().enumerate() {
        if g.has_edge(u, v) {
            return Err(FamilyViolation::GapIsEdge(i));
        }
    }
    Ok(())
}
