//! Half-edge configurations, their multigraph projections, and exact
//! counting of small subgraphs and components.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::degseq::DegreeSequence;
use crate::error::{Error, Result};

/// Global half-edge index. Half-edges of vertex `v` occupy a contiguous
/// range, so ordering by index is ordering by `(vertex, slot)`.
pub type HalfEdge = u32;

/// Maps half-edges to their vertices and back.
#[derive(Clone, Debug)]
pub struct HalfEdgeLayout {
    offsets: Vec<u32>,
    owner: Vec<u32>,
    graphical: OnceLock<bool>,
}

impl PartialEq for HalfEdgeLayout {
    fn eq(&self, other: &Self) -> bool {
        self.offsets == other.offsets
    }
}

impl Eq for HalfEdgeLayout {}

impl HalfEdgeLayout {
    pub fn new(seq: &DegreeSequence) -> Self {
        let mut offsets = Vec::with_capacity(seq.n() + 1);
        let mut owner = Vec::with_capacity(seq.half_edges() as usize);
        offsets.push(0);
        for (v, &d) in seq.degrees().iter().enumerate() {
            owner.extend(std::iter::repeat_n(v as u32, d as usize));
            offsets.push(owner.len() as u32);
        }
        HalfEdgeLayout { offsets, owner, graphical: OnceLock::new() }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Whether the degree sequence is graphical, computed once per layout.
    pub fn is_graphical(&self) -> bool {
        *self.graphical.get_or_init(|| self.degree_sequence().validate().graphical)
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    #[inline]
    pub fn vertex(&self, h: HalfEdge) -> u32 {
        self.owner[h as usize]
    }

    /// Zero-based position of `h` among the half-edges of its vertex.
    #[inline]
    pub fn slot(&self, h: HalfEdge) -> u32 {
        h - self.offsets[self.owner[h as usize] as usize]
    }

    #[inline]
    pub fn half_edge(&self, v: u32, slot: u32) -> HalfEdge {
        self.offsets[v as usize] + slot
    }

    #[inline]
    pub fn half_edges_of(&self, v: u32) -> std::ops::Range<u32> {
        self.offsets[v as usize]..self.offsets[v as usize + 1]
    }

    #[inline]
    pub fn degree(&self, v: u32) -> u32 {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence::new((0..self.n() as u32).map(|v| self.degree(v)).collect())
    }
}

/// Loop and parallel-edge census of a configuration or multigraph.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadSummary {
    #[serde(rename = "L")]
    pub loops: u64,
    /// `m -> M_m`, the number of maximal m-fold non-loop edges, for `m >= 2`.
    #[serde(rename = "M_m")]
    pub multi_edges: BTreeMap<u32, u64>,
    /// Number of pairs of parallel edges, `sum_m C(m, 2) M_m`.
    #[serde(rename = "M")]
    pub parallel_pairs: u64,
}

impl BadSummary {
    /// `edges` must list equal vertex pairs contiguously.
    pub(crate) fn from_sorted_edges(edges: &[(u32, u32)]) -> Self {
        let mut s = BadSummary::default();
        let mut i = 0;
        while i < edges.len() {
            let mut j = i + 1;
            while j < edges.len() && edges[j] == edges[i] {
                j += 1;
            }
            let m = (j - i) as u64;
            if edges[i].0 == edges[i].1 {
                s.loops += m;
            } else if m >= 2 {
                *s.multi_edges.entry(m as u32).or_default() += 1;
                s.parallel_pairs += m * (m - 1) / 2;
            }
            i = j;
        }
        s
    }

    /// Switchings needed when no new bad edge is ever created:
    /// `L + sum_m (m - 1) M_m`.
    pub fn silver_switches(&self) -> u64 {
        self.loops + self.multi_edges.iter().map(|(&m, &c)| (m as u64 - 1) * c).sum::<u64>()
    }

    pub fn has_higher_multiplicity(&self) -> bool {
        self.multi_edges.keys().any(|&m| m >= 3)
    }
}

/// A perfect matching of the half-edges.
#[derive(Clone, Debug)]
pub struct Configuration {
    layout: Arc<HalfEdgeLayout>,
    mate: Vec<u32>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.mate == other.mate && self.layout == other.layout
    }
}

impl Eq for Configuration {}

impl std::hash::Hash for Configuration {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.mate.hash(state);
    }
}

impl Configuration {
    pub fn from_mates(layout: Arc<HalfEdgeLayout>, mate: Vec<u32>) -> Result<Self> {
        if mate.len() != layout.len() {
            return Err(Error::InvalidConfiguration(format!("{} mates for {} half-edges", mate.len(), layout.len())));
        }
        for (h, &m) in mate.iter().enumerate() {
            if m as usize >= mate.len() || m as usize == h || mate[m as usize] as usize != h {
                return Err(Error::InvalidConfiguration(format!("half-edge {h} is not properly matched")));
            }
        }
        Ok(Configuration { layout, mate })
    }

    /// Builds the configuration whose edges are the given half-edge pairs.
    pub fn from_pairs(layout: Arc<HalfEdgeLayout>, pairs: &[(HalfEdge, HalfEdge)]) -> Result<Self> {
        let mut mate = vec![u32::MAX; layout.len()];
        for &(a, b) in pairs {
            for h in [a, b] {
                if h as usize >= mate.len() || mate[h as usize] != u32::MAX {
                    return Err(Error::InvalidConfiguration(format!("half-edge {h} used twice or out of range")));
                }
            }
            if a == b {
                return Err(Error::InvalidConfiguration(format!("half-edge {a} paired with itself")));
            }
            mate[a as usize] = b;
            mate[b as usize] = a;
        }
        Self::from_mates(layout, mate)
    }

    /// Lifts a list of vertex pairs to a configuration, handing out each
    /// vertex's slots in the order its edges appear. Degrees are read off the
    /// edge list.
    pub fn from_vertex_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut deg = vec![0u32; n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidConfiguration(format!("vertex out of range in ({u},{v})")));
            }
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let layout = Arc::new(HalfEdgeLayout::new(&DegreeSequence::new(deg)));
        let mut next = vec![0u32; n];
        let mut take = |v: u32| {
            let h = layout.half_edge(v, next[v as usize]);
            next[v as usize] += 1;
            h
        };
        let pairs: Vec<_> = edges.iter().map(|&(u, v)| (take(u), take(v))).collect();
        Self::from_pairs(layout, &pairs)
    }

    pub fn layout(&self) -> &Arc<HalfEdgeLayout> {
        &self.layout
    }

    pub fn mates(&self) -> &[u32] {
        &self.mate
    }

    #[inline]
    pub fn mate(&self, h: HalfEdge) -> HalfEdge {
        self.mate[h as usize]
    }

    #[inline]
    pub fn vertex(&self, h: HalfEdge) -> u32 {
        self.layout.vertex(h)
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn edge_count(&self) -> usize {
        self.mate.len() / 2
    }

    /// Edges as `(lower, upper)` half-edge pairs, ordered by lower half-edge.
    pub fn edges(&self) -> impl Iterator<Item = (HalfEdge, HalfEdge)> + '_ {
        self.mate.iter().enumerate().filter(|&(h, &m)| (h as u32) < m).map(|(h, &m)| (h as u32, m))
    }

    /// Number of edges joining `u` and `v` (loops at `u` when `u == v`).
    pub fn multiplicity(&self, u: u32, v: u32) -> u32 {
        let (a, b) = if self.layout.degree(u) <= self.layout.degree(v) { (u, v) } else { (v, u) };
        let hits = self.layout.half_edges_of(a).filter(|&h| self.vertex(self.mate(h)) == b).count() as u32;
        if u == v {
            hits / 2
        } else {
            hits
        }
    }

    /// An edge is bad when it is a loop or has a parallel copy.
    pub fn is_bad(&self, h: HalfEdge) -> bool {
        let u = self.vertex(h);
        let v = self.vertex(self.mate(h));
        u == v || self.multiplicity(u, v) >= 2
    }

    pub fn bad_edges(&self) -> Vec<(HalfEdge, HalfEdge)> {
        self.edges().filter(|&(h, _)| self.is_bad(h)).collect()
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = vec![u32::MAX; self.n()];
        for v in 0..self.n() as u32 {
            for h in self.layout.half_edges_of(v) {
                let w = self.vertex(self.mate(h));
                if w == v || seen[w as usize] == v {
                    return false;
                }
                seen[w as usize] = v;
            }
        }
        true
    }

    pub fn bad_summary(&self) -> BadSummary {
        BadSummary::from_sorted_edges(&self.sorted_vertex_pairs())
    }

    fn sorted_vertex_pairs(&self) -> Vec<(u32, u32)> {
        let mut pairs: Vec<(u32, u32)> = self.edges().map(|(a, b)| (self.vertex(a), self.vertex(b))).collect();
        // lower endpoints already come in order; sort each run by the other end
        let mut start = 0;
        while start < pairs.len() {
            let u = pairs[start].0;
            let mut end = start + 1;
            while end < pairs.len() && pairs[end].0 == u {
                end += 1;
            }
            if end - start > 1 {
                pairs[start..end].sort_unstable();
            }
            start = end;
        }
        pairs
    }

    pub fn project(&self) -> Multigraph {
        Multigraph { n: self.n(), edges: self.sorted_vertex_pairs() }
    }

    /// Replaces edges `{i, j}` and `{k, l}` by `{i, l}` and `{k, j}`.
    pub fn switch(&mut self, bad: (HalfEdge, HalfEdge), partner: (HalfEdge, HalfEdge)) {
        let (i, j) = bad;
        let (k, l) = partner;
        debug_assert_eq!(self.mate(i), j);
        debug_assert_eq!(self.mate(k), l);
        self.mate[i as usize] = l;
        self.mate[l as usize] = i;
        self.mate[k as usize] = j;
        self.mate[j as usize] = k;
    }
}

/// Small patterns counted by [`Multigraph::count_subgraphs`]. `P_k` is a path
/// with `k` edges, `C_k` a cycle on `k` vertices (`C1` a loop, `C2` a pair of
/// parallel edges).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    P1,
    P2,
    P3,
    C1,
    C2,
    C3,
    C4,
}

impl Pattern {
    pub const ALL: [Pattern; 7] =
        [Pattern::P1, Pattern::P2, Pattern::P3, Pattern::C1, Pattern::C2, Pattern::C3, Pattern::C4];

    pub fn edge_count(self) -> usize {
        match self {
            Pattern::P1 | Pattern::C1 => 1,
            Pattern::P2 | Pattern::C2 => 2,
            Pattern::P3 | Pattern::C3 => 3,
            Pattern::C4 => 4,
        }
    }
}

/// A labeled multigraph on vertices `0..n`. Edge instances are kept sorted,
/// and an instance's index in that order is its id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multigraph {
    n: usize,
    edges: Vec<(u32, u32)>,
}

/// Non-loop neighbourhoods with multiplicities, plus loop counts.
struct Adjacency {
    nbrs: Vec<Vec<(u32, u32)>>,
    loops: Vec<u32>,
}

impl Adjacency {
    fn nonloop_degree(&self, v: usize) -> u64 {
        self.nbrs[v].iter().map(|&(_, m)| m as u64).sum()
    }
}

impl Multigraph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut out = Vec::new();
        for (u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidConfiguration(format!("edge ({u},{v}) outside 0..{n}")));
            }
            out.push((u.min(v), u.max(v)));
        }
        out.sort_unstable();
        Ok(Multigraph { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Degrees with loops counted twice.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n];
        for &(u, v) in &self.edges {
            d[u as usize] += 1;
            d[v as usize] += 1;
        }
        d
    }

    pub fn bad_summary(&self) -> BadSummary {
        BadSummary::from_sorted_edges(&self.edges)
    }

    pub fn loops(&self) -> u64 {
        self.edges.iter().filter(|(u, v)| u == v).count() as u64
    }

    pub fn is_simple(&self) -> bool {
        self.edges.windows(2).all(|w| w[0] != w[1]) && self.edges.iter().all(|(u, v)| u != v)
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    pub fn multiplicity(&self, u: u32, v: u32) -> usize {
        let key = (u.min(v), u.max(v));
        let lo = self.edges.partition_point(|e| *e < key);
        let hi = self.edges.partition_point(|e| *e <= key);
        hi - lo
    }

    /// Ids of every loop instance and every instance of an edge with
    /// multiplicity at least two.
    pub fn bad_edges(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.edges.len() {
            let mut j = i + 1;
            while j < self.edges.len() && self.edges[j] == self.edges[i] {
                j += 1;
            }
            if self.edges[i].0 == self.edges[i].1 || j - i >= 2 {
                out.extend(i..j);
            }
            i = j;
        }
        out
    }

    fn adjacency(&self) -> Adjacency {
        let mut nbrs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); self.n];
        let mut loops = vec![0u32; self.n];
        let mut i = 0;
        while i < self.edges.len() {
            let mut j = i + 1;
            while j < self.edges.len() && self.edges[j] == self.edges[i] {
                j += 1;
            }
            let (u, v) = self.edges[i];
            let m = (j - i) as u32;
            if u == v {
                loops[u as usize] += m;
            } else {
                nbrs[u as usize].push((v, m));
                nbrs[v as usize].push((u, m));
            }
            i = j;
        }
        for list in &mut nbrs {
            list.sort_unstable();
        }
        Adjacency { nbrs, loops }
    }

    /// Number of edge-instance sets whose union is isomorphic to `pattern`.
    /// Paths use pairwise-distinct vertices and no loops; parallel copies are
    /// distinct instances.
    pub fn count_subgraphs(&self, pattern: Pattern) -> u64 {
        let adj = self.adjacency();
        match pattern {
            Pattern::P1 => self.edges.iter().filter(|(u, v)| u != v).count() as u64,
            Pattern::C1 => adj.loops.iter().map(|&l| l as u64).sum(),
            Pattern::C2 => self.bad_summary().parallel_pairs,
            Pattern::P2 => (0..self.n)
                .map(|b| {
                    let d = adj.nonloop_degree(b);
                    let same: u64 = adj.nbrs[b].iter().map(|&(_, m)| choose2(m as u64)).sum();
                    choose2(d) - same
                })
                .sum(),
            Pattern::P3 => count_p3(&adj),
            Pattern::C3 => count_c3(&adj),
            Pattern::C4 => count_c4(&adj),
        }
    }

    /// Vertex sets of the connected components, largest first (ties broken
    /// by smallest vertex).
    pub fn component_vertex_sets(&self) -> Vec<Vec<u32>> {
        let mut uf = UnionFind::new(self.n);
        for &(u, v) in &self.edges {
            uf.union(u as usize, v as usize);
        }
        let mut groups: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for v in 0..self.n {
            groups.entry(uf.find(v)).or_default().push(v as u32);
        }
        let mut sets: Vec<Vec<u32>> = groups.into_values().collect();
        sets.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        sets
    }

    /// Component orders in descending order.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n);
        for &(u, v) in &self.edges {
            uf.union(u as usize, v as usize);
        }
        let mut sizes = Vec::new();
        for v in 0..self.n {
            if uf.find(v) == v {
                sizes.push(uf.size[v]);
            }
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// Number of components isomorphic to the tree `tree`.
    pub fn count_tree_components(&self, tree: &Multigraph) -> usize {
        let Some(target) = tree_code(tree.n, &tree.edges) else {
            return 0;
        };
        let order = tree.n;
        let mut by_root: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
        let sets = self.component_vertex_sets();
        let mut comp_of = vec![0u32; self.n];
        for (c, set) in sets.iter().enumerate() {
            for &v in set {
                comp_of[v as usize] = c as u32;
            }
        }
        for &(u, v) in &self.edges {
            let c = comp_of[u as usize];
            if sets[c as usize].len() == order {
                by_root.entry(c).or_default().push((u, v));
            }
        }
        sets.iter()
            .enumerate()
            .filter(|(_, set)| set.len() == order)
            .filter(|(c, set)| {
                let edges = by_root.get(&(*c as u32)).map(Vec::as_slice).unwrap_or(&[]);
                let local = relabel(set, edges);
                tree_code(order, &local).as_deref() == Some(target.as_str())
            })
            .count()
    }

    /// Unlabelled isomorphism type, written as a sum of components such as
    /// `C1+P2+P1` or `2P2`. Cycles (ascending) come before paths
    /// (descending); other components get a canonical adjacency code, exact
    /// for components of at most 8 vertices.
    pub fn isomorphism_type(&self) -> String {
        let sets = self.component_vertex_sets();
        let mut comp_of = vec![0usize; self.n];
        for (c, set) in sets.iter().enumerate() {
            for &v in set {
                comp_of[v as usize] = c;
            }
        }
        let mut comp_edges: Vec<Vec<(u32, u32)>> = vec![Vec::new(); sets.len()];
        for &(u, v) in &self.edges {
            comp_edges[comp_of[u as usize]].push((u, v));
        }
        let mut names: Vec<(u8, i64, String)> =
            sets.iter().zip(&comp_edges).map(|(set, edges)| component_name(set.len(), &relabel(set, edges))).collect();
        names.sort();
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < names.len() {
            let mut j = i + 1;
            while j < names.len() && names[j].2 == names[i].2 {
                j += 1;
            }
            let count = j - i;
            if count == 1 {
                parts.push(names[i].2.clone());
            } else {
                parts.push(format!("{count}{}", names[i].2));
            }
            i = j;
        }
        parts.join("+")
    }

    /// `# n=<n>` header followed by one 1-indexed `u v` line per edge
    /// instance.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# n={}\n", self.n);
        for &(u, v) in &self.edges {
            s.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("n=") {
                    n = Some(v.trim().parse().map_err(|_| Error::Parse(format!("bad header '{line}'")))?);
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = || -> Result<u32> {
                let tok = it.next().ok_or_else(|| Error::Parse(format!("short line '{line}'")))?;
                let x: u32 = tok.parse().map_err(|_| Error::Parse(format!("bad vertex '{tok}'")))?;
                if x == 0 {
                    return Err(Error::Parse("vertices are 1-indexed".into()));
                }
                Ok(x - 1)
            };
            let u = next()?;
            let v = next()?;
            edges.push((u, v));
        }
        let n = match n {
            Some(n) => n,
            None => edges.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0),
        };
        Multigraph::from_edges(n, edges)
    }

    pub fn to_json(&self) -> MultigraphJson {
        let s = self.bad_summary();
        MultigraphJson { n: self.n, edges: self.edges.iter().map(|&(u, v)| [u + 1, v + 1]).collect(), summary: s }
    }
}

impl fmt::Display for Multigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list())
    }
}

/// JSON form of a multigraph; vertices are 1-indexed as in the edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultigraphJson {
    pub n: usize,
    pub edges: Vec<[u32; 2]>,
    pub summary: BadSummary,
}

impl MultigraphJson {
    pub fn to_multigraph(&self) -> Result<Multigraph> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &[u, v] in &self.edges {
            if u == 0 || v == 0 {
                return Err(Error::Parse("vertices are 1-indexed".into()));
            }
            edges.push((u - 1, v - 1));
        }
        Multigraph::from_edges(self.n, edges)
    }
}

fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

fn count_p3(adj: &Adjacency) -> u64 {
    let n = adj.nbrs.len();
    let mut mark = vec![0u32; n];
    let mut total: u64 = 0;
    for b in 0..n {
        for &(a, m) in &adj.nbrs[b] {
            mark[a as usize] = m;
        }
        let db = adj.nonloop_degree(b);
        for &(c, m_bc) in &adj.nbrs[b] {
            if (c as usize) < b {
                continue;
            }
            let dc = adj.nonloop_degree(c as usize);
            let m_bc = m_bc as u64;
            // endpoints a ~ b and d ~ c, both outside {b, c}, minus a == d
            let mut common = 0u64;
            for &(a, m_ac) in &adj.nbrs[c as usize] {
                if a as usize != b {
                    common += mark[a as usize] as u64 * m_ac as u64;
                }
            }
            total += m_bc * ((db - m_bc) * (dc - m_bc) - common);
        }
        for &(a, _) in &adj.nbrs[b] {
            mark[a as usize] = 0;
        }
    }
    total
}

fn count_c3(adj: &Adjacency) -> u64 {
    let n = adj.nbrs.len();
    let mut mark = vec![0u32; n];
    let mut total = 0u64;
    for a in 0..n {
        for &(x, m) in &adj.nbrs[a] {
            mark[x as usize] = m;
        }
        for &(b, m_ab) in &adj.nbrs[a] {
            if (b as usize) <= a {
                continue;
            }
            for &(c, m_bc) in &adj.nbrs[b as usize] {
                if c <= b {
                    continue;
                }
                total += m_ab as u64 * m_bc as u64 * mark[c as usize] as u64;
            }
        }
        for &(x, _) in &adj.nbrs[a] {
            mark[x as usize] = 0;
        }
    }
    total
}

fn count_c4(adj: &Adjacency) -> u64 {
    // Each 4-cycle a-b-c-d has two diagonals {a,c} and {b,d}. For a fixed
    // diagonal the cycle is an unordered pair of distinct middle vertices.
    let n = adj.nbrs.len();
    let mut w = vec![0u64; n];
    let mut q = vec![0u64; n];
    let mut touched = Vec::new();
    let mut twice = 0u64;
    for a in 0..n {
        for &(b, m_ab) in &adj.nbrs[a] {
            for &(c, m_bc) in &adj.nbrs[b as usize] {
                if (c as usize) <= a {
                    continue;
                }
                let p = m_ab as u64 * m_bc as u64;
                if w[c as usize] == 0 {
                    touched.push(c as usize);
                }
                w[c as usize] += p;
                q[c as usize] += p * p;
            }
        }
        for &c in &touched {
            twice += (w[c] * w[c] - q[c]) / 2;
            w[c] = 0;
            q[c] = 0;
        }
        touched.clear();
    }
    twice / 2
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Renumbers the edges of a component onto `0..set.len()`; `set` is sorted.
fn relabel(set: &[u32], edges: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let idx = |v: u32| set.binary_search(&v).expect("vertex in component") as u32;
    edges.iter().map(|&(u, v)| (idx(u), idx(v))).collect()
}

/// Center-rooted AHU code of a tree; `None` unless the graph is a tree.
fn tree_code(n: usize, edges: &[(u32, u32)]) -> Option<String> {
    if n == 0 || edges.len() + 1 != n {
        return None;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u == v {
            return None;
        }
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    // peel leaves to find the center(s); also detects disconnection
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut layer: Vec<usize> = (0..n).filter(|&v| deg[v] <= 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &v in &layer {
            for &w in &adj[v] {
                deg[w] -= 1;
                if deg[w] == 1 {
                    next.push(w);
                }
            }
        }
        if next.is_empty() && remaining > 0 {
            return None;
        }
        layer = next;
    }
    let mut seen = vec![false; n];
    let codes: Vec<String> = layer
        .iter()
        .map(|&root| {
            seen.iter_mut().for_each(|s| *s = false);
            ahu(root, &adj, &mut seen)
        })
        .collect();
    if seen.iter().any(|&s| !s) {
        return None;
    }
    codes.into_iter().min()
}

fn ahu(v: usize, adj: &[Vec<usize>], seen: &mut [bool]) -> String {
    seen[v] = true;
    let mut kids: Vec<String> = Vec::new();
    for &w in &adj[v] {
        if !seen[w] {
            kids.push(ahu(w, adj, seen));
        }
    }
    kids.sort();
    format!("({})", kids.concat())
}

/// Sort key and name of a component on vertices `0..k`.
fn component_name(k: usize, edges: &[(u32, u32)]) -> (u8, i64, String) {
    let e = edges.len();
    let mut deg = vec![0usize; k];
    for &(u, v) in edges {
        deg[u as usize] += 1;
        deg[v as usize] += 1;
    }
    let has_loop = edges.iter().any(|(u, v)| u == v);
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    let has_multi = sorted.windows(2).any(|w| w[0] == w[1]);
    if e == k && deg.iter().all(|&d| d == 2) {
        return (0, k as i64, format!("C{k}"));
    }
    if e + 1 == k && !has_loop && !has_multi && deg.iter().all(|&d| d <= 2) {
        return (1, -(e as i64), format!("P{e}"));
    }
    (2, 0, format!("G{k}.{e}[{}]", canonical_code(k, &sorted)))
}

/// Lexicographically least sorted edge list over all vertex relabellings;
/// falls back to a degree signature above 8 vertices.
fn canonical_code(k: usize, edges: &[(u32, u32)]) -> String {
    if k > 8 {
        let mut deg = vec![0usize; k];
        for &(u, v) in edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg.sort_unstable();
        return format!("deg{deg:?}");
    }
    let mut perm: Vec<u32> = (0..k as u32).collect();
    let mut best: Option<Vec<(u32, u32)>> = None;
    loop {
        let mut mapped: Vec<(u32, u32)> = edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (perm[u as usize], perm[v as usize]);
                (a.min(b), a.max(b))
            })
            .collect();
        mapped.sort_unstable();
        if best.as_ref().is_none_or(|b| mapped < *b) {
            best = Some(mapped);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best.unwrap_or_default().iter().map(|(u, v)| format!("{u}{v}")).collect::<Vec<_>>().join(",")
}

pub(crate) fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Expected number of loops in the configuration multigraph,
/// `sum_i d_i (d_i - 1) / (2 (N - 1))`.
pub fn expected_loops(seq: &DegreeSequence) -> Result<BigRational> {
    let n_half = seq.half_edges();
    if n_half < 2 {
        return Err(Error::TooFewHalfEdges { what: "expected loop count", min: 2, got: n_half });
    }
    let num: BigInt = seq.degrees().iter().map(|&d| BigInt::from(d as u64 * (d as u64).saturating_sub(1))).sum();
    Ok(BigRational::new(num, BigInt::from(2 * (n_half - 1))))
}

/// Expected number of pairs of parallel edges,
/// `sum_{i<j} d_i(d_i-1) d_j(d_j-1) / (2 (N-1) (N-3))`.
pub fn expected_pairs(seq: &DegreeSequence) -> Result<BigRational> {
    let n_half = seq.half_edges();
    if n_half < 4 {
        return Err(Error::TooFewHalfEdges { what: "expected parallel pair count", min: 4, got: n_half });
    }
    let mut sum = BigInt::from(0);
    let mut sum_sq = BigInt::from(0);
    for &d in seq.degrees() {
        let a = BigInt::from(d as u64 * (d as u64).saturating_sub(1));
        sum_sq += &a * &a;
        sum += a;
    }
    // sum_{i<j} a_i a_j = (S^2 - sum a_i^2) / 2
    let pair_sum = (&sum * &sum - sum_sq) / BigInt::from(2);
    Ok(BigRational::new(pair_sum, BigInt::from(2) * BigInt::from(n_half - 1) * BigInt::from(n_half - 3)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(u32, u32)]) -> Multigraph {
        Multigraph::from_edges(n, edges.iter().copied()).unwrap()
    }

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn projection_examples() {
        let c = Configuration::from_vertex_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(c.project(), graph(2, &[(0, 1)]));

        let c = Configuration::from_vertex_edges(1, &[(0, 0)]).unwrap();
        let g = c.project();
        assert_eq!(g.bad_summary().loops, 1);

        let c = Configuration::from_vertex_edges(2, &[(0, 1), (0, 1)]).unwrap();
        let s = c.project().bad_summary();
        assert_eq!(s.multi_edges.get(&2), Some(&1));
        assert_eq!(s.parallel_pairs, 1);
        assert_eq!(c.bad_summary(), s);
    }

    #[test]
    fn bad_edge_examples() {
        assert!(graph(3, &[(0, 1), (1, 2), (0, 2)]).bad_edges().is_empty());
        let triple = graph(2, &[(0, 1), (0, 1), (0, 1)]);
        assert_eq!(triple.bad_edges().len(), 3);
        assert_eq!(triple.bad_summary().multi_edges.get(&3), Some(&1));
        assert_eq!(triple.bad_summary().parallel_pairs, 3);
        // loop at 0, double edge 1-2, two isolated edges
        let pick = graph(7, &[(0, 0), (1, 2), (1, 2), (3, 4), (5, 6)]);
        assert_eq!(pick.degrees(), vec![2, 2, 2, 1, 1, 1, 1]);
        assert_eq!(pick.bad_edges().len(), 3);
    }

    #[test]
    fn configuration_badness_matches_projection() {
        let c = Configuration::from_vertex_edges(7, &[(0, 0), (1, 2), (1, 2), (3, 4), (5, 6)]).unwrap();
        assert_eq!(c.bad_edges().len(), 3);
        assert!(!c.is_simple());
        assert_eq!(c.multiplicity(1, 2), 2);
        assert_eq!(c.multiplicity(0, 0), 1);
    }

    #[test]
    fn subgraph_count_examples() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(tri.count_subgraphs(Pattern::P2), 3);
        assert_eq!(tri.count_subgraphs(Pattern::C3), 1);
        assert_eq!(tri.count_subgraphs(Pattern::P3), 0);
        let star = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(star.count_subgraphs(Pattern::P2), 3);
        let path = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(path.count_subgraphs(Pattern::P3), 1);
        let c4 = graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        assert_eq!(c4.count_subgraphs(Pattern::P3), 4);
        assert_eq!(c4.count_subgraphs(Pattern::C4), 1);
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(k4.count_subgraphs(Pattern::C3), 4);
        assert_eq!(k4.count_subgraphs(Pattern::C4), 3);
        // double edge counted per instance
        let dbl = graph(3, &[(0, 1), (0, 1), (1, 2)]);
        assert_eq!(dbl.count_subgraphs(Pattern::P2), 2);
        assert_eq!(dbl.count_subgraphs(Pattern::C2), 1);
    }

    #[test]
    fn component_examples() {
        let g = graph(4, &[(0, 1), (2, 3)]);
        assert_eq!(g.component_sizes(), vec![2, 2]);
        let p1 = graph(2, &[(0, 1)]);
        assert_eq!(g.count_tree_components(&p1), 2);

        let g = graph(6, &[(0, 2), (0, 1), (1, 3), (4, 5)]);
        assert_eq!(g.component_sizes(), vec![4, 2]);
        assert_eq!(g.isomorphism_type(), "P3+P1");

        let g = graph(3, &[(0, 0), (1, 2)]);
        assert_eq!(g.component_sizes(), vec![2, 1]);
        assert_eq!(g.count_tree_components(&p1), 1);
    }

    #[test]
    fn tree_matching_distinguishes_shapes() {
        let star = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        let path = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let g = graph(8, &[(0, 1), (0, 2), (0, 3), (4, 5), (5, 6), (6, 7)]);
        assert_eq!(g.count_tree_components(&star), 1);
        assert_eq!(g.count_tree_components(&path), 1);
        let cyc = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(cyc.count_tree_components(&path), 0);
    }

    #[test]
    fn type_names() {
        assert_eq!(graph(6, &[(0, 0), (1, 2), (1, 3), (4, 5)]).isomorphism_type(), "C1+P2+P1");
        assert_eq!(graph(6, &[(0, 1), (0, 1), (2, 3), (4, 5)]).isomorphism_type(), "C2+2P1");
        assert_eq!(graph(6, &[(0, 0), (1, 1), (2, 3), (4, 5)]).isomorphism_type(), "2C1+2P1");
        assert_eq!(graph(6, &[(0, 2), (0, 3), (1, 4), (1, 5)]).isomorphism_type(), "2P2");
        assert_eq!(graph(7, &[(0, 0), (1, 2), (1, 2), (3, 4), (5, 6)]).isomorphism_type(), "C1+C2+2P1");
        assert_eq!(graph(4, &[(0, 1), (0, 2), (0, 3)]).isomorphism_type(), "G4.3[01,02,03]");
    }

    #[test]
    fn expected_formula_examples() {
        let s = DegreeSequence::new(vec![2, 2, 1, 1, 1, 1]);
        assert_eq!(expected_loops(&s).unwrap(), ratio(2, 7));
        assert_eq!(expected_pairs(&s).unwrap(), ratio(2, 35));
        assert_eq!(expected_loops(&DegreeSequence::new(vec![1, 1])).unwrap(), ratio(0, 1));
        assert_eq!(expected_loops(&DegreeSequence::new(vec![2])).unwrap(), ratio(1, 1));
        assert_eq!(expected_pairs(&DegreeSequence::new(vec![1, 1, 1, 1])).unwrap(), ratio(0, 1));
        assert_eq!(expected_pairs(&DegreeSequence::new(vec![2, 2])).unwrap(), ratio(2, 3));
        assert!(expected_loops(&DegreeSequence::new(vec![0])).is_err());
        assert!(expected_pairs(&DegreeSequence::new(vec![1, 1])).is_err());
    }

    #[test]
    fn edge_list_and_json_round_trip() {
        let g = graph(5, &[(0, 0), (1, 2), (1, 2), (3, 4)]);
        let text = g.to_edge_list();
        assert!(text.starts_with("# n=5\n1 1\n2 3\n2 3\n4 5\n"));
        assert_eq!(Multigraph::from_edge_list(&text).unwrap(), g);
        let json = serde_json::to_string(&g.to_json()).unwrap();
        assert!(json.contains("\"L\":1"));
        assert!(json.contains("\"M\":1"));
        let back: MultigraphJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_multigraph().unwrap(), g);
    }

    #[test]
    fn invalid_configurations_rejected() {
        let layout = Arc::new(HalfEdgeLayout::new(&DegreeSequence::new(vec![1, 1])));
        assert!(Configuration::from_mates(layout.clone(), vec![0, 1]).is_err());
        assert!(Configuration::from_mates(layout.clone(), vec![1, 0]).is_ok());
        assert!(Configuration::from_pairs(layout, &[(0, 0)]).is_err());
    }
}
