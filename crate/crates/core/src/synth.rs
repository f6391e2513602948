//! Seeded synthesis of reference topologies.
//!
//! COs sit on a jittered grid. The MtC mesh is a ring over the COs in
//! serpentine grid order plus chords to geometrically close COs, which keeps it
//! 2-edge-connected. MtC link lengths are drawn independently of the grid from
//! a truncated normal and rescaled to the exact target mean. Each leaf is
//! dropped near a random CO and fed from its two nearest COs; placements whose
//! second feeder exceeds the distance cap are redrawn.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    FiberParams, Geotype, Level, LinkDoc, LoadOptions, ModelError, Node, NodeKind, Segment, Topology, TopologyDoc, TopologyMeta,
};
use crate::scalar::CompensatedSum;

pub const GENERATOR: &str = "ChaCha8Rng";
const FIBER: &str = "smf";
const MAX_LEAF_DRAWS: usize = 100_000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),
    #[error("generated topology failed validation: {0}")]
    Invalid(#[from] ModelError),
}

/// Default shape per geotype: `(CO grid spacing km, mean leaf offset km)`.
pub fn geotype_shape(g: Geotype) -> (f64, f64) {
    match g {
        Geotype::DenseUrban => (4.0, 1.2),
        Geotype::Urban => (6.0, 2.0),
        Geotype::Suburban => (8.0, 3.0),
        Geotype::Rural => (11.0, 5.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub n_leaves: usize,
    pub n_co: usize,
    /// `(HL3, HL4, HL5)` counts.
    pub level_split: (usize, usize, usize),
    pub n_mtc_links: usize,
    pub mean_mtc_len: f64,
    pub mtc_len_spread: f64,
    pub max_leaf_dist: f64,
    pub geotype_mix: BTreeMap<Geotype, f64>,
    /// Distance between ring neighbours; defaults to the mix-weighted geotype value.
    pub co_spacing_km: Option<f64>,
    /// Mean leaf offset from its anchor CO; defaults to the CO's geotype value.
    pub mean_feeder_km: Option<f64>,
    pub seed: u64,
}

impl Default for SynthParams {
    /// The reference network: 876 leaves, 38 COs, 46 MtC links averaging 21.2 km.
    fn default() -> Self {
        SynthParams {
            n_leaves: 876,
            n_co: 38,
            level_split: (2, 10, 26),
            n_mtc_links: 46,
            mean_mtc_len: 21.2,
            mtc_len_spread: 8.0,
            max_leaf_dist: 13.0,
            geotype_mix: [(Geotype::DenseUrban, 0.2), (Geotype::Urban, 0.4), (Geotype::Suburban, 0.3), (Geotype::Rural, 0.1)].into(),
            co_spacing_km: None,
            mean_feeder_km: None,
            seed: 1,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InfeasibleParams(m));
        let (h3, h4, h5) = self.level_split;
        if self.n_leaves == 0 || self.n_co == 0 || h3 == 0 || h4 == 0 || h5 == 0 {
            return bad("all counts must be > 0".into());
        }
        if h3 + h4 + h5 != self.n_co {
            return bad(format!("level split {h3}+{h4}+{h5} != n_co {}", self.n_co));
        }
        if self.n_co < 3 {
            return bad("a 2-edge-connected MtC mesh needs at least 3 COs".into());
        }
        if self.n_mtc_links < self.n_co {
            return bad(format!(
                "{} MtC links over {} COs cannot be 2-edge-connected (needs >= {})",
                self.n_mtc_links, self.n_co, self.n_co
            ));
        }
        if self.n_mtc_links > self.n_co * (self.n_co - 1) / 2 {
            return bad(format!("{} MtC links exceed the simple-graph maximum", self.n_mtc_links));
        }
        if !(self.mean_mtc_len > 1.0 && self.mean_mtc_len.is_finite()) {
            return bad("mean_mtc_len must exceed the 1 km minimum".into());
        }
        if !(self.mtc_len_spread >= 0.0 && self.max_leaf_dist > 0.0) {
            return bad("spread must be >= 0 and max_leaf_dist > 0".into());
        }
        let total: f64 = self.geotype_mix.values().sum();
        if self.geotype_mix.values().any(|&f| !(0.0..=1.0).contains(&f)) || (total - 1.0).abs() > 1e-9 {
            return bad(format!("geotype fractions must be in [0,1] and sum to 1 (sum {total})"));
        }
        for v in [self.co_spacing_km, self.mean_feeder_km].into_iter().flatten() {
            if !(v > 0.0 && v.is_finite()) {
                return bad("shape knobs must be positive".into());
            }
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `n` items over the mix, in geotype order.
fn apportion(n: usize, mix: &BTreeMap<Geotype, f64>) -> Vec<Geotype> {
    let mut parts: Vec<(Geotype, usize, f64)> = mix
        .iter()
        .map(|(&g, &f)| {
            let exact = f * n as f64;
            (g, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = parts.iter().map(|p| p.1).sum();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| parts[b].2.partial_cmp(&parts[a].2).unwrap().then(a.cmp(&b)));
    for &i in order.iter().take(n - assigned) {
        parts[i].1 += 1;
    }
    parts.into_iter().flat_map(|(g, k, _)| std::iter::repeat_n(g, k)).collect()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Positions on a ring whose circumference is `n * spacing`, jittered by up
/// to a fifth of the spacing so ring neighbours stay each other's nearest COs.
fn co_positions(n: usize, spacing: f64, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let radius = spacing * n as f64 / std::f64::consts::TAU;
    (0..n)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / n as f64;
            let jx = rng.random_range(-0.2..0.2) * spacing;
            let jy = rng.random_range(-0.2..0.2) * spacing;
            [round3(radius * th.cos() + jx), round3(radius * th.sin() + jy)]
        })
        .collect()
}

/// Chords as spokes from the hub nodes to points spread evenly around the
/// ring, hubs taken in turn.
///
/// Spokes keep every CO a few hops from a hub on both sides, so protection
/// routes stay short in hops as well as km.
fn hub_chords(n: usize, m: usize, hubs: &[usize], edges: &mut BTreeSet<(usize, usize)>, rng: &mut ChaCha8Rng) {
    let key = |u: usize, v: usize| (u.min(v), u.max(v));
    let usable = |e: &BTreeSet<(usize, usize)>, u: usize, v: usize| u != v && !e.contains(&key(u, v));
    for k in 0..m {
        let hub = hubs[k % hubs.len()];
        let target = ((2 * k + 1) * n / (2 * m) + rng.random_range(0..2)) % n;
        let near = (0..n).flat_map(|d| [(target + d) % n, (target + n - d % n) % n]);
        let placed = near.take(2 * n).find(|&v| usable(edges, hub, v));
        let pair = placed.map(|v| key(hub, v)).or_else(|| {
            // hub saturated; take the first free pair overall
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).find(|&(u, v)| usable(edges, u, v))
        });
        if let Some(e) = pair {
            edges.insert(e);
        }
    }
}

/// Truncated normal lengths (min 1 km) rescaled to the exact target mean.
fn mtc_lengths(n: usize, mean: f64, spread: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut xs: Vec<f64> = if spread > 0.0 {
        let normal = Normal::new(mean, spread).expect("positive spread");
        (0..n)
            .map(|_| loop {
                let x = normal.sample(rng);
                if (1.0..=mean + 4.0 * spread).contains(&x) {
                    break x;
                }
            })
            .collect()
    } else {
        vec![mean; n]
    };
    for _ in 0..200 {
        let cur = xs.iter().copied().collect::<CompensatedSum>().value() / n as f64;
        if ((cur - mean) / mean).abs() < 1e-12 {
            break;
        }
        let k = mean / cur;
        xs.iter_mut().for_each(|x| *x = (*x * k).max(1.0));
    }
    xs.into_iter().map(round3).collect()
}

fn level_layout(n: usize, (h3, h4, _): (usize, usize, usize)) -> Vec<Level> {
    let mut levels = vec![Level::HL5; n];
    for k in 0..h3 {
        levels[k * n / h3] = Level::HL3;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| levels[i] != Level::HL3).collect();
    for k in 0..h4 {
        levels[rest[k * rest.len() / h4]] = Level::HL4;
    }
    levels
}

/// Synthesizes a topology with the configured geotype mix.
pub fn synth_reference(p: &SynthParams) -> Result<Topology, SynthError> {
    synth_inner(p, None)
}

/// Synthesizes a single-geotype topology; shape knobs default to the geotype's.
pub fn synth_geotype(g: Geotype, p: &SynthParams) -> Result<Topology, SynthError> {
    let mut q = p.clone();
    q.geotype_mix = [(g, 1.0)].into();
    synth_inner(&q, Some(g))
}

fn synth_inner(p: &SynthParams, label: Option<Geotype>) -> Result<Topology, SynthError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.n_co;

    let spacing = p.co_spacing_km.unwrap_or_else(|| p.geotype_mix.iter().map(|(&g, &f)| f * geotype_shape(g).0).sum());
    let pos = co_positions(n, spacing, &mut rng);
    let mut geos = apportion(n, &p.geotype_mix);
    // spread geotypes around the ring without clustering by index
    for i in (1..geos.len()).rev() {
        let j = rng.random_range(0..=i);
        geos.swap(i, j);
    }
    let levels = level_layout(n, p.level_split);
    let co_id = |i: usize| format!("CO-{i:03}");

    // ring + chords
    let mut edges: BTreeSet<(usize, usize)> = (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect();
    let hubs: Vec<usize> = (0..n).filter(|&i| levels[i] == Level::HL3).collect();
    hub_chords(n, p.n_mtc_links - edges.len(), &hubs, &mut edges, &mut rng);
    if edges.len() != p.n_mtc_links {
        return Err(SynthError::InfeasibleParams("could not place MtC chords".into()));
    }
    let lengths = mtc_lengths(edges.len(), p.mean_mtc_len, p.mtc_len_spread, &mut rng);

    let mut nodes: Vec<Node> =
        (0..n).map(|i| Node { id: co_id(i), kind: NodeKind::CO, level: levels[i], geotype: geos[i], xy: Some(pos[i]) }).collect();
    let mut links: Vec<LinkDoc> = edges
        .iter()
        .zip(&lengths)
        .map(|(&(a, b), &len)| LinkDoc { a: co_id(a), b: co_id(b), length_km: len, segment: Segment::MtC, fiber: FIBER.into() })
        .collect();

    // leaves
    let leaf_width = (p.n_leaves as f64).log10().floor() as usize + 1;
    for l in 0..p.n_leaves {
        let mut draws = 0;
        let (xy, near) = loop {
            draws += 1;
            if draws > MAX_LEAF_DRAWS {
                return Err(SynthError::InfeasibleParams(format!(
                    "no leaf placement within {} km of two COs; raise max_leaf_dist or shrink spacing",
                    p.max_leaf_dist
                )));
            }
            let anchor = rng.random_range(0..n);
            let mean = p.mean_feeder_km.unwrap_or_else(|| geotype_shape(geos[anchor]).1);
            let r = Exp::new(1.0 / mean).expect("positive mean").sample(&mut rng);
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            let xy = [round3(pos[anchor][0] + r * th.cos()), round3(pos[anchor][1] + r * th.sin())];
            let mut ds: Vec<(f64, usize)> = (0..n).map(|c| (round3(dist(xy, pos[c])).max(0.05), c)).collect();
            ds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            if ds[1].0 <= p.max_leaf_dist {
                break (xy, [ds[0], ds[1]]);
            }
        };
        let id = format!("L-{l:0leaf_width$}");
        nodes.push(Node { id: id.clone(), kind: NodeKind::Leaf, level: Level::None, geotype: geos[near[0].1], xy: Some(xy) });
        for (km, c) in near {
            links.push(LinkDoc { a: id.clone(), b: co_id(c), length_km: km, segment: Segment::AtM, fiber: FIBER.into() });
        }
    }

    let doc = TopologyDoc {
        meta: Some(TopologyMeta {
            generator: GENERATOR.into(),
            seed: Some(p.seed),
            synthetic: true,
            geotype: label,
            mtc_diameter_km: None,
            note: Some("synthetic topology; matches aggregate statistics only".into()),
        }),
        fibers: [(FIBER.to_string(), FiberParams::default())].into(),
        nodes,
        links,
    };
    let opts = LoadOptions { max_leaf_distance_km: p.max_leaf_dist, require_dual_homing: true };
    let t = Topology::from_doc(doc, &opts)?;

    let mtc = t.graph(Some(Segment::MtC));
    assert!(mtc.bridges().is_empty(), "ring construction leaves no bridges");
    let diameter = t.co_indices().flat_map(|c| mtc.dijkstra(c).into_iter().flatten()).fold(0.0f64, f64::max);
    let mut doc = t.to_doc();
    if let Some(m) = doc.meta.as_mut() {
        m.mtc_diameter_km = Some(round3(diameter));
    }
    Ok(Topology::from_doc(doc, &opts)?)
}
