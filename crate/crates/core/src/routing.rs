//! Shortest paths, link-and-node-disjoint (LAND) path pairs and dual homing.
//!
//! The graph algorithms work on [`Graph<W>`], an undirected multigraph with
//! integer node indices and a generic [`Weight`]. Topology-facing helpers at the
//! bottom of the module build graphs from a [`Topology`] (node indices follow
//! sorted node ids, so index order is id order) and translate results back.
//!
//! Tie-breaking: among equal-length shortest paths the lexicographically
//! smallest node sequence wins. Disjoint pairs are computed with a two-unit
//! min-cost flow over the node-split graph; the flow search visits arcs in a
//! fixed order, so results never depend on hash or thread ordering.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NodeKind, Segment, Topology};
use crate::scalar::Weight;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("source and destination are both `{0}`")]
    SameEndpoints(String),
    #[error("`{dst}` is unreachable from `{src}`")]
    Unreachable { src: String, dst: String },
    #[error("no link-and-node-disjoint path pair between `{src}` and `{dst}`")]
    NoDisjointPair { src: String, dst: String },
    #[error("leaf `{leaf}` reaches {found} CO(s); dual homing needs two")]
    FewerThanTwoCos { leaf: String, found: usize },
    #[error("`{0}` is not a leaf")]
    NotALeaf(String),
    #[error("CO `{co}` has no disjoint pair to any of the {targets} aggregation target(s)")]
    NoAggregationRoute { co: String, targets: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge<W> {
    pub to: usize,
    pub weight: W,
    pub id: usize,
}

/// Undirected multigraph with sorted adjacency lists.
#[derive(Clone, Debug)]
pub struct Graph<W> {
    adj: Vec<Vec<Edge<W>>>,
    edges: Vec<(usize, usize, W)>,
}

/// A simple path: node sequence, traversed edge ids, total weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path<W> {
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
    pub length: W,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPair<W> {
    pub primary: Path<W>,
    pub secondary: Path<W>,
}

impl<W: Weight> Path<W> {
    pub fn hops(&self) -> usize {
        self.links.len()
    }

    /// Nodes strictly between the endpoints.
    pub fn intermediates(&self) -> &[usize] {
        if self.nodes.len() <= 2 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.nodes.cmp(&other.nodes)
    }
}

impl<W: Weight> PathPair<W> {
    pub fn combined_length(&self) -> W {
        self.primary.length + self.secondary.length
    }

    /// True when the paths share no link and no intermediate node.
    pub fn is_disjoint(&self) -> bool {
        let shared_link = self.primary.links.iter().any(|l| self.secondary.links.contains(l));
        let shared_node = self.primary.intermediates().iter().any(|n| self.secondary.nodes.contains(n))
            || self.secondary.intermediates().iter().any(|n| self.primary.nodes.contains(n));
        !shared_link && !shared_node
    }

    fn ordered(a: Path<W>, b: Path<W>) -> Self {
        let swap = match b.length.partial_cmp(&a.length) {
            Some(Ordering::Less) if !b.length.tol_eq(a.length) => true,
            _ if b.length.tol_eq(a.length) => b.lex_cmp(&a) == Ordering::Less,
            _ => false,
        };
        if swap {
            PathPair { primary: b, secondary: a }
        } else {
            PathPair { primary: a, secondary: b }
        }
    }
}

#[derive(Clone, Copy)]
struct HeapItem<W> {
    dist: W,
    node: usize,
}

impl<W: PartialOrd> PartialEq for HeapItem<W> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<W: PartialOrd> Eq for HeapItem<W> {}
impl<W: PartialOrd> PartialOrd for HeapItem<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<W: PartialOrd> Ord for HeapItem<W> {
    // min-heap on distance, then node index
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.partial_cmp(&self.dist).unwrap_or(Ordering::Equal).then_with(|| other.node.cmp(&self.node))
    }
}

impl<W: Weight> Graph<W> {
    pub fn new(nodes: usize) -> Self {
        Graph { adj: vec![Vec::new(); nodes], edges: Vec::new() }
    }

    /// Builds a graph from `(a, b, weight)` triples; edge ids are positions.
    pub fn from_edges(nodes: usize, edges: impl IntoIterator<Item = (usize, usize, W)>) -> Self {
        let mut g = Graph::new(nodes);
        for (a, b, w) in edges {
            g.add_edge(a, b, w);
        }
        g
    }

    /// Adds an undirected edge and returns its id.
    pub fn add_edge(&mut self, a: usize, b: usize, weight: W) -> usize {
        let id = self.edges.len();
        self.edges.push((a, b, weight));
        let pos = |list: &Vec<Edge<W>>, to: usize| list.partition_point(|e| (e.to, e.id) < (to, id));
        let i = pos(&self.adj[a], b);
        self.adj[a].insert(i, Edge { to: b, weight, id });
        if a != b {
            let j = pos(&self.adj[b], a);
            self.adj[b].insert(j, Edge { to: a, weight, id });
        }
        id
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: usize) -> (usize, usize, W) {
        self.edges[id]
    }

    pub fn neighbors(&self, u: usize) -> &[Edge<W>] {
        &self.adj[u]
    }

    /// Single-source distances.
    pub fn dijkstra(&self, src: usize) -> Vec<Option<W>> {
        self.dijkstra_filtered(src, |_| true)
    }

    /// Dijkstra that only relaxes out of nodes accepted by `expand`
    /// (the source is always expanded). Rejected nodes still get a distance.
    pub fn dijkstra_filtered(&self, src: usize, expand: impl Fn(usize) -> bool) -> Vec<Option<W>> {
        let mut dist: Vec<Option<W>> = vec![None; self.node_count()];
        let mut done = vec![false; self.node_count()];
        let mut heap = BinaryHeap::new();
        dist[src] = Some(W::zero());
        heap.push(HeapItem { dist: W::zero(), node: src });
        while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u != src && !expand(u) {
                continue;
            }
            for e in &self.adj[u] {
                let nd = d + e.weight;
                let better = match dist[e.to] {
                    None => true,
                    Some(old) => nd < old,
                };
                if better && !done[e.to] {
                    dist[e.to] = Some(nd);
                    heap.push(HeapItem { dist: nd, node: e.to });
                }
            }
        }
        dist
    }

    /// Minimum-weight path; ties go to the lexicographically smallest node
    /// sequence, then to the smallest edge id on parallel edges.
    pub fn shortest_path(&self, src: usize, dst: usize) -> Option<Path<W>> {
        if src == dst {
            return Some(Path { nodes: vec![src], links: vec![], length: W::zero() });
        }
        let from_src = self.dijkstra(src);
        let to_dst = self.dijkstra(dst);
        let total = to_dst[src]?;
        let mut nodes = vec![src];
        let mut links = Vec::new();
        let mut visited = vec![false; self.node_count()];
        visited[src] = true;
        let mut cur = src;
        let mut acc = W::zero();
        while cur != dst {
            let here = from_src[cur].expect("on shortest path");
            // adjacency is sorted by (to, id), so the first match is the lexicographic choice
            let next =
                self.adj[cur].iter().find(|e| !visited[e.to] && to_dst[e.to].is_some_and(|rest| (here + e.weight + rest).tol_eq(total)))?;
            acc = acc + next.weight;
            visited[next.to] = true;
            nodes.push(next.to);
            links.push(next.id);
            cur = next.to;
        }
        Some(Path { nodes, links, length: acc })
    }

    /// Minimum combined-weight pair of link-and-node-disjoint paths.
    ///
    /// Node-split transform: every node `v` becomes `v_in -> v_out` with unit
    /// capacity (two units at the endpoints), every edge `u-v` becomes arcs
    /// `u_out -> v_in` and `v_out -> u_in` with unit capacity. Two successive
    /// shortest-path augmentations (Dijkstra with node potentials, i.e.
    /// Suurballe's scheme) give the optimum. Weights must be non-negative.
    pub fn disjoint_pair(&self, src: usize, dst: usize) -> Option<PathPair<W>> {
        if src == dst {
            return None;
        }
        let mut net = FlowNet::new(2 * self.node_count());
        for v in 0..self.node_count() {
            let cap = if v == src || v == dst { 2 } else { 1 };
            net.add_arc(2 * v, 2 * v + 1, cap, W::zero(), None);
        }
        for (id, &(a, b, w)) in self.edges.iter().enumerate() {
            if a == b {
                continue;
            }
            net.add_arc(2 * a + 1, 2 * b, 1, w, Some((id, a, b)));
            net.add_arc(2 * b + 1, 2 * a, 1, w, Some((id, b, a)));
        }
        let (s, t) = (2 * src + 1, 2 * dst);
        for _ in 0..2 {
            if !net.augment(s, t) {
                return None;
            }
        }

        // net flow per directed original edge
        let mut succ: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        let mut flow_on: BTreeMap<usize, i32> = BTreeMap::new();
        for arc in &net.arcs {
            if let Some((id, from, _)) = arc.edge {
                if arc.flow > 0 {
                    let sign = if from == self.edges[id].0 { 1 } else { -1 };
                    *flow_on.entry(id).or_insert(0) += sign * arc.flow;
                }
            }
        }
        for (&id, &f) in &flow_on {
            let (a, b, _) = self.edges[id];
            match f.cmp(&0) {
                Ordering::Greater => succ.entry(a).or_default().push((b, id)),
                Ordering::Less => succ.entry(b).or_default().push((a, id)),
                Ordering::Equal => {}
            }
        }
        let mut walk = || -> Option<Path<W>> {
            let mut nodes = vec![src];
            let mut links = Vec::new();
            let mut length = W::zero();
            let mut cur = src;
            while cur != dst {
                let list = succ.get_mut(&cur)?;
                if list.is_empty() {
                    return None;
                }
                let (next, id) = list.remove(0);
                nodes.push(next);
                links.push(id);
                length = length + self.edges[id].2;
                cur = next;
                if nodes.len() > self.node_count() + 1 {
                    return None;
                }
            }
            Some(Path { nodes, links, length })
        };
        let a = walk()?;
        let b = walk()?;
        let pair = PathPair::ordered(a, b);
        debug_assert!(pair.is_disjoint(), "disjoint_pair returned overlapping paths");
        Some(pair)
    }

    /// Edge ids whose removal disconnects their component.
    pub fn bridges(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        let mut out = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // iterative DFS: (node, parent edge id, next adjacency index)
            let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (u, parent, ref mut idx)) = stack.last_mut() {
                if *idx < self.adj[u].len() {
                    let e = self.adj[u][*idx];
                    *idx += 1;
                    if Some(e.id) == parent {
                        continue;
                    }
                    if disc[e.to] == usize::MAX {
                        disc[e.to] = timer;
                        low[e.to] = timer;
                        timer += 1;
                        stack.push((e.to, Some(e.id), 0));
                    } else {
                        low[u] = low[u].min(disc[e.to]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            out.push(parent.expect("non-root has parent edge"));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// True when every node in `subset` reaches every other one.
    pub fn connects(&self, subset: &[usize]) -> bool {
        let Some(&first) = subset.first() else {
            return true;
        };
        let dist = self.dijkstra(first);
        subset.iter().all(|&v| dist[v].is_some())
    }
}

struct FlowArc<W> {
    to: usize,
    cap: i32,
    flow: i32,
    cost: W,
    rev: usize,
    edge: Option<(usize, usize, usize)>,
}

struct FlowNet<W> {
    arcs: Vec<FlowArc<W>>,
    out: Vec<Vec<usize>>,
    pot: Vec<W>,
}

impl<W: Weight> FlowNet<W> {
    fn new(n: usize) -> Self {
        FlowNet { arcs: Vec::new(), out: vec![Vec::new(); n], pot: vec![W::zero(); n] }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: i32, cost: W, edge: Option<(usize, usize, usize)>) {
        let fwd = self.arcs.len();
        self.arcs.push(FlowArc { to, cap, flow: 0, cost, rev: fwd + 1, edge });
        self.arcs.push(FlowArc { to: from, cap: 0, flow: 0, cost: -cost, rev: fwd, edge: None });
        self.out[from].push(fwd);
        self.out[to].push(fwd + 1);
    }

    /// Pushes one unit along a cheapest residual path.
    fn augment(&mut self, s: usize, t: usize) -> bool {
        // Dijkstra on reduced costs; potentials keep them non-negative
        let n = self.out.len();
        let mut dist: Vec<Option<W>> = vec![None; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[s] = Some(W::zero());
        heap.push(HeapItem { dist: W::zero(), node: s });
        while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &ai in &self.out[u] {
                let arc = &self.arcs[ai];
                if arc.cap - arc.flow <= 0 || done[arc.to] {
                    continue;
                }
                let mut rc = arc.cost + self.pot[u] - self.pot[arc.to];
                if rc < W::zero() {
                    // rounding residue on float weights
                    rc = W::zero();
                }
                let nd = d + rc;
                let better = match dist[arc.to] {
                    None => true,
                    Some(old) => nd < old && !nd.tol_eq(old),
                };
                if better {
                    dist[arc.to] = Some(nd);
                    via[arc.to] = Some(ai);
                    heap.push(HeapItem { dist: nd, node: arc.to });
                }
            }
        }
        if dist[t].is_none() {
            return false;
        }
        for (p, d) in self.pot.iter_mut().zip(&dist) {
            if let Some(d) = d {
                *p = *p + *d;
            }
        }
        let mut v = t;
        while v != s {
            let ai = via[v].expect("predecessor on augmenting path");
            self.arcs[ai].flow += 1;
            let r = self.arcs[ai].rev;
            self.arcs[r].flow -= 1;
            v = self.arcs[r].to;
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Topology-facing operations
// ---------------------------------------------------------------------------

/// Dual-homing entry for one leaf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomingEntry {
    pub leaf: String,
    pub primary: String,
    pub secondary: String,
    pub primary_km: f64,
    pub secondary_km: f64,
}

/// Per-leaf homing, keyed by leaf id.
pub type HomingAssignment = BTreeMap<String, HomingEntry>;

/// Serializable route record for the optional route dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub src: String,
    pub dst: String,
    pub primary: Vec<String>,
    pub secondary: Vec<String>,
    pub primary_km: f64,
    pub secondary_km: f64,
    pub km: f64,
}

impl RouteRecord {
    pub fn new(t: &Topology, pair: &PathPair<f64>) -> Self {
        let ids = |p: &Path<f64>| p.nodes.iter().map(|&i| t.node(i).id.clone()).collect::<Vec<_>>();
        RouteRecord {
            src: t.node(pair.primary.nodes[0]).id.clone(),
            dst: t.node(*pair.primary.nodes.last().expect("non-empty")).id.clone(),
            primary: ids(&pair.primary),
            secondary: ids(&pair.secondary),
            primary_km: pair.primary.length,
            secondary_km: pair.secondary.length,
            km: pair.combined_length(),
        }
    }
}

fn endpoints(t: &Topology, src: &str, dst: &str) -> Result<(usize, usize), RoutingError> {
    let s = t.index_of(src).ok_or_else(|| RoutingError::UnknownNode(src.to_string()))?;
    let d = t.index_of(dst).ok_or_else(|| RoutingError::UnknownNode(dst.to_string()))?;
    if s == d {
        return Err(RoutingError::SameEndpoints(src.to_string()));
    }
    Ok((s, d))
}

/// Shortest path in km over all links of the topology.
pub fn shortest_path(t: &Topology, src: &str, dst: &str) -> Result<Path<f64>, RoutingError> {
    let (s, d) = endpoints(t, src, dst)?;
    t.graph(None).shortest_path(s, d).ok_or_else(|| RoutingError::Unreachable { src: src.to_string(), dst: dst.to_string() })
}

/// Minimum combined-km LAND pair over all links of the topology.
pub fn land_pair(t: &Topology, src: &str, dst: &str) -> Result<PathPair<f64>, RoutingError> {
    let (s, d) = endpoints(t, src, dst)?;
    t.graph(None).disjoint_pair(s, d).ok_or_else(|| RoutingError::NoDisjointPair { src: src.to_string(), dst: dst.to_string() })
}

/// Feeder distances from a leaf to every CO reachable over AtM links, with
/// other leaves allowed as tree intermediates but COs never transited.
pub(crate) fn feeder_distances(t: &Topology, atm: &Graph<f64>, leaf: usize) -> Vec<(f64, usize)> {
    let dist = atm.dijkstra_filtered(leaf, |v| t.node(v).kind == NodeKind::Leaf);
    let mut out: Vec<(f64, usize)> = dist
        .iter()
        .enumerate()
        .filter_map(|(v, d)| match (d, t.node(v).kind) {
            (Some(km), NodeKind::CO) => Some((*km, v)),
            _ => None,
        })
        .collect();
    // index order is id order
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    out
}

/// Primary = nearest CO by feeder km, secondary = next nearest; ties by CO id.
pub fn dual_home(t: &Topology, leaf: &str) -> Result<HomingEntry, RoutingError> {
    let li = t.index_of(leaf).ok_or_else(|| RoutingError::UnknownNode(leaf.to_string()))?;
    if t.node(li).kind != NodeKind::Leaf {
        return Err(RoutingError::NotALeaf(leaf.to_string()));
    }
    let atm = t.graph(Some(Segment::AtM));
    dual_home_in(t, &atm, li)
}

fn dual_home_in(t: &Topology, atm: &Graph<f64>, li: usize) -> Result<HomingEntry, RoutingError> {
    let cos = feeder_distances(t, atm, li);
    if cos.len() < 2 {
        return Err(RoutingError::FewerThanTwoCos { leaf: t.node(li).id.clone(), found: cos.len() });
    }
    Ok(HomingEntry {
        leaf: t.node(li).id.clone(),
        primary: t.node(cos[0].1).id.clone(),
        secondary: t.node(cos[1].1).id.clone(),
        primary_km: cos[0].0,
        secondary_km: cos[1].0,
    })
}

/// Homes every leaf of the topology.
pub fn home_all(t: &Topology) -> Result<HomingAssignment, RoutingError> {
    let atm = t.graph(Some(Segment::AtM));
    t.leaf_indices().map(|li| dual_home_in(t, &atm, li).map(|h| (h.leaf.clone(), h))).collect()
}

/// LAND pair over the MtC mesh from `co` to the candidate target minimizing
/// combined km (ties by target id). The CO itself is skipped if listed.
pub fn mtc_route(t: &Topology, co: &str, targets: &[&str]) -> Result<(String, PathPair<f64>), RoutingError> {
    let ci = t.index_of(co).ok_or_else(|| RoutingError::UnknownNode(co.to_string()))?;
    let mtc = t.graph(Some(Segment::MtC));
    let link_of = t.segment_links(Some(Segment::MtC));
    let mut tix: Vec<usize> =
        targets.iter().map(|id| t.index_of(id).ok_or_else(|| RoutingError::UnknownNode(id.to_string()))).collect::<Result<_, _>>()?;
    tix.sort_unstable();
    tix.dedup();
    let mut best: Option<(usize, PathPair<f64>)> = None;
    for &h in tix.iter().filter(|&&h| h != ci) {
        if let Some(pair) = mtc.disjoint_pair(ci, h) {
            let better = match &best {
                None => true,
                Some((_, b)) => {
                    let (x, y) = (pair.combined_length(), b.combined_length());
                    x < y && !x.tol_eq(y)
                }
            };
            if better {
                best = Some((h, pair));
            }
        }
    }
    best.map(|(h, mut p)| {
        for path in [&mut p.primary, &mut p.secondary] {
            path.links.iter_mut().for_each(|l| *l = link_of[*l]);
        }
        (t.node(h).id.clone(), p)
    })
    .ok_or_else(|| RoutingError::NoAggregationRoute { co: co.to_string(), targets: tix.len() })
}
