//! Network data model, topology document format and validation.
//!
//! A topology document is JSON with `nodes`, `links`, a `fibers` table and an
//! optional `meta` header written by the synthesizer. [`Topology`] is the
//! validated, immutable form; node indices follow sorted node ids.

use std::collections::{btree_map::Entry, BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::routing::{feeder_distances, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Leaf,
    CO,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    HL3,
    HL4,
    HL5,
    #[serde(rename = "none")]
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Geotype {
    DenseUrban,
    Urban,
    Suburban,
    Rural,
}

impl Geotype {
    pub const ALL: [Geotype; 4] = [Geotype::DenseUrban, Geotype::Urban, Geotype::Suburban, Geotype::Rural];
}

impl fmt::Display for Geotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Segment {
    AtM,
    MtC,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// AtM architecture under study. The MtC segment is the same in all three.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Gray client optics plus standalone transponders.
    Benchmark,
    /// 100G ZR pluggables, one pair per channel.
    PtP,
    /// DSCM 100G leaves homed on 400G hubs through passive splitters.
    PtMP,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Benchmark, Scenario::PtP, Scenario::PtMP];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Benchmark" => Ok(Scenario::Benchmark),
            "PtP" => Ok(Scenario::PtP),
            "PtMP" => Ok(Scenario::PtMP),
            other => Err(format!("unknown scenario `{other}` (expected Benchmark, PtP or PtMP)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub level: Level,
    pub geotype: Geotype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xy: Option<[f64; 2]>,
}

/// Link as written in the document (endpoints by id).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub a: String,
    pub b: String,
    pub length_km: f64,
    pub segment: Segment,
    pub fiber: String,
}

/// Validated link (endpoints by node index).
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub length_km: f64,
    pub segment: Segment,
    pub fiber: String,
}

impl Link {
    pub fn other(&self, n: usize) -> usize {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberParams {
    pub alpha_db_km: f64,
    pub beta2_ps2_km: f64,
    pub gamma_w_km: f64,
}

impl Default for FiberParams {
    /// Standard single-mode fiber.
    fn default() -> Self {
        FiberParams { alpha_db_km: 0.2, beta2_ps2_km: -21.7, gamma_w_km: 1.3 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TopologyMeta {
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub synthetic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geotype: Option<Geotype>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mtc_diameter_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<TopologyMeta>,
    #[serde(default)]
    pub fibers: BTreeMap<String, FiberParams>,
    pub nodes: Vec<Node>,
    pub links: Vec<LinkDoc>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadOptions {
    pub max_leaf_distance_km: f64,
    /// Also require two node-disjoint AtM routes to distinct COs per leaf.
    pub require_dual_homing: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { max_leaf_distance_km: 13.0, require_dual_homing: false }
    }
}

/// Validated, immutable topology.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    meta: Option<TopologyMeta>,
    fibers: BTreeMap<String, FiberParams>,
    nodes: Vec<Node>,
    links: Vec<Link>,
    index: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyStats {
    pub leaves: usize,
    pub cos: usize,
    pub hl3: usize,
    pub hl4: usize,
    pub hl5: usize,
    pub links: usize,
    pub atm_links: usize,
    pub mtc_links: usize,
    /// Mean over MtC links; over all links when the topology has no MtC segment.
    pub mean_link_km: f64,
    pub mean_mtc_link_km: Option<f64>,
    /// Largest feeder distance from a leaf to either of its two nearest COs.
    pub max_leaf_to_co_km: Option<f64>,
}

fn check_fiber(name: &str, f: &FiberParams) -> Result<(), ModelError> {
    if !(f.alpha_db_km.is_finite() && f.alpha_db_km > 0.0) {
        return Err(ModelError::Invariant(format!("fiber `{name}`: alpha_db_km must be > 0")));
    }
    if !(f.gamma_w_km.is_finite() && f.gamma_w_km >= 0.0) {
        return Err(ModelError::Invariant(format!("fiber `{name}`: gamma_w_km must be >= 0")));
    }
    if !f.beta2_ps2_km.is_finite() {
        return Err(ModelError::Invariant(format!("fiber `{name}`: beta2_ps2_km must be finite")));
    }
    Ok(())
}

impl Topology {
    /// Validates a document.
    pub fn from_doc(doc: TopologyDoc, opts: &LoadOptions) -> Result<Self, ModelError> {
        for (name, f) in &doc.fibers {
            check_fiber(name, f)?;
        }

        let mut nodes = doc.nodes;
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(ModelError::DuplicateId(w[0].id.clone()));
            }
        }
        for n in &nodes {
            if n.id.is_empty() {
                return Err(ModelError::Schema("nodes[].id: empty identifier".into()));
            }
            match (n.kind, n.level) {
                (NodeKind::CO, Level::None) => return Err(ModelError::Invariant(format!("CO `{}` has level none", n.id))),
                (NodeKind::Leaf, l) if l != Level::None => return Err(ModelError::Invariant(format!("leaf `{}` has level {l:?}", n.id))),
                _ => {}
            }
            if let Some([x, y]) = n.xy {
                if !(x.is_finite() && y.is_finite()) {
                    return Err(ModelError::Schema(format!("node `{}`: xy must be finite", n.id)));
                }
            }
        }
        let index: BTreeMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();

        let mut links = Vec::with_capacity(doc.links.len());
        let mut seen = BTreeSet::new();
        for (k, l) in doc.links.into_iter().enumerate() {
            let a = *index.get(&l.a).ok_or_else(|| ModelError::Schema(format!("links[{k}].a: unknown node `{}`", l.a)))?;
            let b = *index.get(&l.b).ok_or_else(|| ModelError::Schema(format!("links[{k}].b: unknown node `{}`", l.b)))?;
            let name = format!("{}-{}", l.a, l.b);
            if a == b {
                return Err(ModelError::Invariant(format!("link {name} is a self-loop")));
            }
            if !(l.length_km.is_finite() && l.length_km > 0.0) {
                return Err(ModelError::Invariant(format!("link {name}: length_km must be finite and > 0")));
            }
            if !doc.fibers.contains_key(&l.fiber) {
                return Err(ModelError::Schema(format!("links[{k}].fiber: unknown fiber `{}`", l.fiber)));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(ModelError::Invariant(format!("duplicate link {name}")));
            }
            let (ka, kb) = (nodes[a].kind, nodes[b].kind);
            match l.segment {
                Segment::AtM if ka == NodeKind::CO && kb == NodeKind::CO => {
                    return Err(ModelError::Invariant(format!("AtM link {name} joins two COs")))
                }
                Segment::MtC if ka != NodeKind::CO || kb != NodeKind::CO => {
                    return Err(ModelError::Invariant(format!("MtC link {name} touches a leaf")))
                }
                _ => {}
            }
            links.push(Link { a, b, length_km: l.length_km, segment: l.segment, fiber: l.fiber });
        }

        let t = Topology { meta: doc.meta, fibers: doc.fibers, nodes, links, index };
        t.check_invariants(opts)?;
        Ok(t)
    }

    fn check_invariants(&self, opts: &LoadOptions) -> Result<(), ModelError> {
        let mtc = self.graph(Some(Segment::MtC));
        let cos: Vec<usize> = self.co_indices().collect();
        if !mtc.connects(&cos) {
            return Err(ModelError::Invariant("MtC subgraph is not connected".into()));
        }
        let atm = self.graph(Some(Segment::AtM));
        for li in self.leaf_indices() {
            let reach = feeder_distances(self, &atm, li);
            let leaf = &self.nodes[li].id;
            if reach.is_empty() {
                return Err(ModelError::Invariant(format!("leaf `{leaf}` reaches no CO over AtM links")));
            }
            for &(km, co) in reach.iter().take(2) {
                if km > opts.max_leaf_distance_km + 1e-9 {
                    return Err(ModelError::Invariant(format!(
                        "leaf `{leaf}` is {km} km from CO `{}` (max {} km)",
                        self.nodes[co].id, opts.max_leaf_distance_km
                    )));
                }
            }
        }
        if opts.require_dual_homing {
            self.check_dual_homing()?;
        }
        Ok(())
    }

    /// Every leaf needs two node-disjoint AtM routes ending at distinct COs.
    /// Routes may pass through other leaves but never through a CO.
    pub fn check_dual_homing(&self) -> Result<(), ModelError> {
        let atm = self.graph(Some(Segment::AtM));
        for li in self.leaf_indices() {
            // local AtM region: leaves reachable through leaves, plus the COs they touch
            let mut local = vec![li];
            let mut seen = BTreeMap::from([(li, 0usize)]);
            let mut k = 0;
            while k < local.len() {
                let u = local[k];
                k += 1;
                if self.nodes[u].kind == NodeKind::CO {
                    continue;
                }
                for e in atm.neighbors(u) {
                    if let Entry::Vacant(slot) = seen.entry(e.to) {
                        slot.insert(local.len());
                        local.push(e.to);
                    }
                }
            }
            let sink = local.len();
            let mut g = Graph::new(sink + 1);
            for (i, &u) in local.iter().enumerate() {
                if self.nodes[u].kind == NodeKind::CO {
                    g.add_edge(i, sink, 0.0);
                    continue;
                }
                for e in atm.neighbors(u) {
                    let j = seen[&e.to];
                    // each undirected edge once, from its lower local index or from a leaf to a CO
                    if i < j || self.nodes[e.to].kind == NodeKind::CO {
                        g.add_edge(i, j, e.weight);
                    }
                }
            }
            if g.disjoint_pair(0, sink).is_none() {
                return Err(ModelError::Invariant(format!(
                    "leaf `{}` lacks two node-disjoint AtM routes to distinct COs",
                    self.nodes[li].id
                )));
            }
        }
        Ok(())
    }

    pub fn meta(&self) -> Option<&TopologyMeta> {
        self.meta.as_ref()
    }

    pub fn fibers(&self) -> &BTreeMap<String, FiberParams> {
        &self.fibers
    }

    pub fn fiber(&self, name: &str) -> Option<&FiberParams> {
        self.fibers.get(name)
    }

    pub fn fiber_of(&self, link: usize) -> &FiberParams {
        &self.fibers[&self.links[link].fiber]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, i: usize) -> &Link {
        &self.links[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn leaf_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == NodeKind::Leaf)
    }

    pub fn co_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == NodeKind::CO)
    }

    pub fn cos_at(&self, level: Level) -> impl Iterator<Item = usize> + '_ {
        self.co_indices().filter(move |&i| self.nodes[i].level == level)
    }

    /// Km-weighted graph over one segment (or all links). Edge ids are link indices
    /// only when `segment` is `None`; otherwise use [`Topology::segment_links`].
    pub fn graph(&self, segment: Option<Segment>) -> Graph<f64> {
        let mut g = Graph::new(self.nodes.len());
        for l in &self.links {
            if segment.is_none_or(|s| s == l.segment) {
                g.add_edge(l.a, l.b, l.length_km);
            }
        }
        g
    }

    /// Link indices in the order [`Topology::graph`] assigns edge ids.
    pub fn segment_links(&self, segment: Option<Segment>) -> Vec<usize> {
        (0..self.links.len()).filter(|&i| segment.is_none_or(|s| s == self.links[i].segment)).collect()
    }

    pub fn to_doc(&self) -> TopologyDoc {
        TopologyDoc {
            meta: self.meta.clone(),
            fibers: self.fibers.clone(),
            nodes: self.nodes.clone(),
            links: self
                .links
                .iter()
                .map(|l| LinkDoc {
                    a: self.nodes[l.a].id.clone(),
                    b: self.nodes[l.b].id.clone(),
                    length_km: l.length_km,
                    segment: l.segment,
                    fiber: l.fiber.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_doc()).expect("topology serializes");
        s.push('\n');
        s
    }
}

/// Parses and validates a topology document.
pub fn load_topology(text: &str, opts: &LoadOptions) -> Result<Topology, ModelError> {
    let doc: TopologyDoc = serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))?;
    Topology::from_doc(doc, opts)
}

pub fn load_topology_file(path: &FsPath, opts: &LoadOptions) -> Result<Topology, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
    load_topology(&text, opts)
}

pub fn save_topology(t: &Topology, path: &FsPath) -> Result<(), ModelError> {
    std::fs::write(path, t.to_json()).map_err(|source| ModelError::Io { path: path.display().to_string(), source })
}

pub fn topology_stats(t: &Topology) -> TopologyStats {
    let count = |k: NodeKind, l: Option<Level>| t.nodes.iter().filter(|n| n.kind == k && l.is_none_or(|l| n.level == l)).count();
    let mean = |it: &mut dyn Iterator<Item = f64>| {
        let (s, c) = it.fold((crate::scalar::CompensatedSum::default(), 0usize), |(mut s, c), x| {
            s.add(x);
            (s, c + 1)
        });
        (c > 0).then(|| s.value() / c as f64)
    };
    let mtc_links = t.links.iter().filter(|l| l.segment == Segment::MtC).count();
    let mean_mtc = mean(&mut t.links.iter().filter(|l| l.segment == Segment::MtC).map(|l| l.length_km));
    let mean_all = mean(&mut t.links.iter().map(|l| l.length_km)).unwrap_or(0.0);
    let atm = t.graph(Some(Segment::AtM));
    let max_leaf =
        t.leaf_indices().filter_map(|li| feeder_distances(t, &atm, li).iter().take(2).map(|d| d.0).reduce(f64::max)).reduce(f64::max);
    TopologyStats {
        leaves: count(NodeKind::Leaf, None),
        cos: count(NodeKind::CO, None),
        hl3: count(NodeKind::CO, Some(Level::HL3)),
        hl4: count(NodeKind::CO, Some(Level::HL4)),
        hl5: count(NodeKind::CO, Some(Level::HL5)),
        links: t.links.len(),
        atm_links: t.links.len() - mtc_links,
        mtc_links,
        mean_link_km: mean_mtc.unwrap_or(mean_all),
        mean_mtc_link_km: mean_mtc,
        max_leaf_to_co_km: max_leaf,
    }
}
