//! Equipment placement per scenario and year.
//!
//! Each year produces a *requirement*: units needed per `(node, kind, cause)`.
//! A [`BuildPlan`] keeps the installed base as the running maximum of the
//! requirements, so counts never decrease and every unit traces back to the
//! leaf, splitter group or MtC demand that caused it.
//!
//! No unit is placed for a lightpath whose QoT or reach verdict fails; such
//! demands produce an [`Infeasibility`] record instead.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Catalog, EquipmentKind, KindCounts};
use crate::model::{NodeKind, Scenario, Segment, Topology};
use crate::qot::{gsnr_path, osnr_atm, reach_feasible, LimitingFactor, QotConfig, QotError, QotResult, SpanPlan};
use crate::routing::{mtc_route, HomingAssignment, PathPair, RouteRecord};
use crate::traffic::{channels_needed, CoAggregate, DemandSet};

#[derive(Debug, Error)]
pub enum DimError {
    #[error("leaf `{0}` is not homed")]
    Unhomed(String),
    #[error("leaf `{0}` has no demand")]
    MissingDemand(String),
    #[error("year {year} precedes the last planned year {last}")]
    YearOrder { year: u32, last: u32 },
    #[error("invalid dimensioning config: {0}")]
    Config(String),
    #[error(transparent)]
    Qot(#[from] QotError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimConfig {
    /// Homing legs equipped per leaf: 2 duplicates the whole AtM chain, 1 equips the primary only.
    pub protection_chain_factor: u32,
    /// Feeders longer than this get ER gray optics, LR otherwise.
    pub lr_reach_km: f64,
    pub atm_channel_gbps: f64,
    pub mtc_channel_gbps: f64,
    /// Client channels served by one benchmark transponder.
    pub tp_client_ports: u32,
    /// Transponders per channel group along a leg (one per line end).
    pub tp_line_ends: u32,
    pub splitter_fanout: u32,
    pub mcs_ports: u32,
    pub rob_line_ports: u32,
}

impl Default for DimConfig {
    fn default() -> Self {
        DimConfig {
            protection_chain_factor: 2,
            lr_reach_km: 10.0,
            atm_channel_gbps: 100.0,
            mtc_channel_gbps: 400.0,
            tp_client_ports: 1,
            tp_line_ends: 2,
            splitter_fanout: 4,
            mcs_ports: 16,
            rob_line_ports: 9,
        }
    }
}

impl DimConfig {
    pub fn validate(&self) -> Result<(), DimError> {
        let bad = |m: &str| Err(DimError::Config(m.into()));
        if !(1..=2).contains(&self.protection_chain_factor) {
            return bad("protection_chain_factor must be 1 or 2");
        }
        if [self.tp_client_ports, self.tp_line_ends, self.splitter_fanout, self.mcs_ports, self.rob_line_ports].contains(&0) {
            return bad("port and group sizes must be >= 1");
        }
        if !(self.atm_channel_gbps > 0.0 && self.mtc_channel_gbps > 0.0 && self.lr_reach_km > 0.0) {
            return bad("rates and reach must be positive");
        }
        Ok(())
    }
}

/// Units required or added at one node for one cause.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placement {
    pub year: u32,
    pub node: String,
    pub kind: EquipmentKind,
    pub count: u64,
    pub cause: String,
}

/// Requirement for one year: `(node, kind, cause) -> units`.
pub type Requirement = BTreeMap<(String, EquipmentKind, String), u64>;

fn need(req: &mut Requirement, node: &str, kind: EquipmentKind, cause: &str, n: u64) {
    if n > 0 {
        *req.entry((node.to_string(), kind, cause.to_string())).or_insert(0) += n;
    }
}

/// A demand that was not served.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Infeasibility {
    pub segment: Segment,
    pub scenario: Option<Scenario>,
    pub year: u32,
    pub demand: String,
    pub leg: String,
    pub transceiver: EquipmentKind,
    pub km: f64,
    pub value_db: f64,
    pub threshold_db: f64,
    pub limiting: LimitingFactor,
}

/// QoT verdict of one lightpath, for the report dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightpathQot {
    pub segment: Segment,
    pub scenario: Option<Scenario>,
    pub demand: String,
    pub leg: String,
    pub transceiver: EquipmentKind,
    pub km: f64,
    pub result: QotResult<f64>,
    pub feasible: bool,
    pub limiting: LimitingFactor,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AtmOutcome {
    pub requirement: Requirement,
    pub failures: Vec<Infeasibility>,
    pub qot: Vec<LightpathQot>,
}

const LEGS: [&str; 2] = ["primary", "secondary"];

/// Places AtM equipment for one scenario and year.
///
/// Per 100G channel and equipped homing leg:
/// - Benchmark: a gray optic at the leaf and at the CO (ER iff the leg's
///   feeder exceeds `lr_reach_km`) plus `tp_line_ends` transponders per
///   `tp_client_ports` channels, split between leaf and CO.
/// - PtP: a 100G ZR at each end.
/// - PtMP: a DSCM100G at the leaf; at the CO, the channels of all legs homed
///   there fill splitter groups of `splitter_fanout` in leaf-id order, one
///   DSCM400G hub per group.
#[allow(clippy::too_many_arguments)]
pub fn dimension_atm(
    t: &Topology,
    demands: &DemandSet,
    homing: &HomingAssignment,
    scenario: Scenario,
    year: u32,
    cfg: &DimConfig,
    cat: &Catalog,
    qot: &QotConfig,
) -> Result<AtmOutcome, DimError> {
    use EquipmentKind::*;
    cfg.validate()?;
    let mut out = AtmOutcome::default();
    // per CO: channels awaiting hubs, in leaf-id order
    let mut hub_queue: BTreeMap<String, u64> = BTreeMap::new();

    for li in t.leaf_indices() {
        let leaf = &t.node(li).id;
        let h = homing.get(leaf).ok_or_else(|| DimError::Unhomed(leaf.clone()))?;
        let &gbps = demands.demands.get(leaf).ok_or_else(|| DimError::MissingDemand(leaf.clone()))?;
        let ch = channels_needed(gbps, cfg.atm_channel_gbps) as u64;
        let legs = [(&h.primary, h.primary_km), (&h.secondary, h.secondary_km)];
        for (leg_i, &(co, km)) in legs.iter().enumerate().take(cfg.protection_chain_factor as usize) {
            let leg = LEGS[leg_i];
            let transceiver = match scenario {
                Scenario::Benchmark if km > cfg.lr_reach_km => Gray100G_ER,
                Scenario::Benchmark => Gray100G_LR,
                Scenario::PtP => ZR100G,
                Scenario::PtMP => DSCM100G,
            };
            let entry = cat.get(transceiver);
            let verdict = if scenario == Scenario::Benchmark {
                // gray optics: reach only
                let ok = entry.reach_km.is_none_or(|r| km <= r);
                (ok, if ok { LimitingFactor::None } else { LimitingFactor::Reach }, None)
            } else {
                let mut plan = qot.atm;
                plan.fanout = if scenario == Scenario::PtMP { cfg.splitter_fanout } else { 1 };
                let thr = entry.threshold_db.unwrap_or(f64::NEG_INFINITY);
                let r = osnr_atm(km, &plan, &qot.amp, &qot.margins, scenario, thr)?;
                let v = reach_feasible(cat, &transceiver.to_string(), km, &r)?;
                (v.feasible, v.limiting, Some(r))
            };
            if let Some(r) = verdict.2 {
                out.qot.push(LightpathQot {
                    segment: Segment::AtM,
                    scenario: Some(scenario),
                    demand: leaf.clone(),
                    leg: leg.into(),
                    transceiver,
                    km,
                    result: r,
                    feasible: verdict.0,
                    limiting: verdict.1,
                });
            }
            if !verdict.0 {
                out.failures.push(Infeasibility {
                    segment: Segment::AtM,
                    scenario: Some(scenario),
                    year,
                    demand: leaf.clone(),
                    leg: leg.into(),
                    transceiver,
                    km,
                    value_db: verdict.2.map_or(f64::NAN, |r| r.value_db),
                    threshold_db: entry.threshold_db.unwrap_or(f64::NAN),
                    limiting: verdict.1,
                });
                continue;
            }
            let cause = format!("leaf:{leaf}/{leg}");
            match scenario {
                Scenario::Benchmark => {
                    need(&mut out.requirement, leaf, transceiver, &cause, ch);
                    need(&mut out.requirement, co, transceiver, &cause, ch);
                    let groups = ch.div_ceil(cfg.tp_client_ports as u64);
                    let ends = cfg.tp_line_ends as u64;
                    // first end at the CO, second at the leaf, further ends at the CO
                    let at_leaf = ends / 2;
                    need(&mut out.requirement, co, TP400G, &cause, groups * (ends - at_leaf));
                    need(&mut out.requirement, leaf, TP400G, &cause, groups * at_leaf);
                }
                Scenario::PtP => {
                    need(&mut out.requirement, leaf, ZR100G, &cause, ch);
                    need(&mut out.requirement, co, ZR100G, &cause, ch);
                }
                Scenario::PtMP => {
                    need(&mut out.requirement, leaf, DSCM100G, &cause, ch);
                    *hub_queue.entry(co.clone()).or_insert(0) += ch;
                }
            }
        }
    }
    for (co, channels) in hub_queue {
        let n = cfg.splitter_fanout as u64;
        for g in 0..channels.div_ceil(n) {
            need(&mut out.requirement, &co, DSCM400G, &format!("splitter:{co}#{g}"), 1);
        }
    }
    Ok(out)
}

/// Protected MtC route of one CO toward its aggregation target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtcRoute {
    pub co: String,
    pub target: String,
    pub pair: PathPair<f64>,
    pub feasible: bool,
}

impl MtcRoute {
    pub fn record(&self, t: &Topology) -> RouteRecord {
        RouteRecord::new(t, &self.pair)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MtcRouting {
    pub routes: BTreeMap<String, MtcRoute>,
    pub failures: Vec<Infeasibility>,
    pub qot: Vec<LightpathQot>,
}

/// Routes every CO to the nearest HL3 (by combined LAND km; an HL3 routes to
/// the other HL3s) and checks both paths for 400G ZR+ QoT and reach.
pub fn plan_mtc_routes(t: &Topology, cat: &Catalog, qot: &QotConfig) -> Result<MtcRouting, DimError> {
    use crate::model::Level;
    let hl3: Vec<&str> = t.cos_at(Level::HL3).map(|i| t.node(i).id.as_str()).collect();
    let entry = cat.get(EquipmentKind::ZRp400G);
    let thr = entry.threshold_db.unwrap_or(f64::NEG_INFINITY);
    let mut out = MtcRouting::default();
    for ci in t.co_indices() {
        let co = t.node(ci).id.as_str();
        let targets: Vec<&str> = hl3.iter().copied().filter(|&h| h != co).collect();
        if targets.is_empty() {
            continue;
        }
        let Ok((target, pair)) = mtc_route(t, co, &targets) else {
            out.failures.push(Infeasibility {
                segment: Segment::MtC,
                scenario: None,
                year: 1,
                demand: co.to_string(),
                leg: "pair".into(),
                transceiver: EquipmentKind::ZRp400G,
                km: f64::NAN,
                value_db: f64::NAN,
                threshold_db: thr,
                limiting: LimitingFactor::Reach,
            });
            continue;
        };
        let mut feasible = true;
        for (leg, path) in LEGS.iter().zip([&pair.primary, &pair.secondary]) {
            let spans = SpanPlan::<f64>::from_path(t, path, qot.max_span_km);
            let r = gsnr_path(&spans, &qot.mtc, &qot.amp, &qot.margins, &qot.gn, thr);
            let v = reach_feasible(cat, "ZRp400G", path.length, &r)?;
            out.qot.push(LightpathQot {
                segment: Segment::MtC,
                scenario: None,
                demand: co.to_string(),
                leg: leg.to_string(),
                transceiver: EquipmentKind::ZRp400G,
                km: path.length,
                result: r,
                feasible: v.feasible,
                limiting: v.limiting,
            });
            if !v.feasible {
                feasible = false;
                out.failures.push(Infeasibility {
                    segment: Segment::MtC,
                    scenario: None,
                    year: 1,
                    demand: co.to_string(),
                    leg: leg.to_string(),
                    transceiver: EquipmentKind::ZRp400G,
                    km: path.length,
                    value_db: r.value_db,
                    threshold_db: thr,
                    limiting: v.limiting,
                });
            }
        }
        out.routes.insert(co.to_string(), MtcRoute { co: co.to_string(), target, pair, feasible });
    }
    Ok(out)
}

/// MtC requirement for one year.
///
/// Per CO: `channels400 = ceil(protected aggregate / 400G)`, with
/// `2 legs × channels400` ZR+ at the CO and the same at its HL3 target.
/// MCS per node is `ceil(ZR+ ports / mcs_ports)`; every CO with MtC links is a
/// ROADM node with `max(1, ceil(degree / rob_line_ports))` blades.
pub fn dimension_mtc(
    t: &Topology,
    aggregates: &BTreeMap<String, CoAggregate>,
    routing: &MtcRouting,
    cfg: &DimConfig,
) -> Result<Requirement, DimError> {
    use EquipmentKind::*;
    cfg.validate()?;
    let mut req = Requirement::new();
    let mut ports: BTreeMap<String, u64> = BTreeMap::new();
    for (co, agg) in aggregates {
        let Some(route) = routing.routes.get(co) else { continue };
        if !route.feasible || agg.protected() <= 0.0 {
            continue;
        }
        let ch = channels_needed(agg.protected(), cfg.mtc_channel_gbps) as u64;
        let cause = format!("mtc:{co}->{}", route.target);
        for node in [co, &route.target] {
            need(&mut req, node, ZRp400G, &cause, 2 * ch);
            *ports.entry(node.clone()).or_insert(0) += 2 * ch;
        }
    }
    for (node, p) in ports {
        need(&mut req, &node, MCS, "add-drop", p.div_ceil(cfg.mcs_ports as u64));
    }
    let mut degree = vec![0u64; t.nodes().len()];
    for l in t.links().iter().filter(|l| l.segment == Segment::MtC) {
        degree[l.a] += 1;
        degree[l.b] += 1;
    }
    for ci in t.co_indices() {
        if t.node(ci).kind == NodeKind::CO && degree[ci] > 0 {
            let blades = degree[ci].div_ceil(cfg.rob_line_ports as u64).max(1);
            need(&mut req, &t.node(ci).id, RoB, "roadm", blades);
        }
    }
    Ok(req)
}

/// Cumulative installed base of one scenario.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildPlan {
    pub scenario: Option<Scenario>,
    /// Installed base after each planned year.
    installed: BTreeMap<u32, Requirement>,
    /// Units added in each planned year.
    added: BTreeMap<u32, Vec<Placement>>,
}

impl BuildPlan {
    pub fn new(scenario: Scenario) -> Self {
        BuildPlan { scenario: Some(scenario), ..Default::default() }
    }

    pub fn last_year(&self) -> Option<u32> {
        self.installed.keys().next_back().copied()
    }

    /// Installs whatever `req` needs beyond the current base.
    pub fn advance(&mut self, year: u32, req: &Requirement) -> Result<(), DimError> {
        if let Some(last) = self.last_year() {
            if year <= last {
                return Err(DimError::YearOrder { year, last });
            }
        }
        let mut base = self.last_year().map(|y| self.installed[&y].clone()).unwrap_or_default();
        let mut added = Vec::new();
        for (key, &n) in req {
            let have = base.entry(key.clone()).or_insert(0);
            if n > *have {
                added.push(Placement { year, node: key.0.clone(), kind: key.1, count: n - *have, cause: key.2.clone() });
                *have = n;
            }
        }
        self.installed.insert(year, base);
        self.added.insert(year, added);
        Ok(())
    }

    /// Installed base in effect at `year` (the latest planned year not after it).
    pub fn installed_at(&self, year: u32) -> Option<&Requirement> {
        self.installed.range(..=year).next_back().map(|(_, r)| r)
    }

    pub fn added_in(&self, year: u32) -> &[Placement] {
        self.added.get(&year).map_or(&[], |v| v.as_slice())
    }

    pub fn years(&self) -> impl Iterator<Item = u32> + '_ {
        self.installed.keys().copied()
    }
}

/// Cumulative counts by kind at `year`, restricted to `segment` if given.
pub fn element_count(plan: &BuildPlan, year: u32, segment: Option<Segment>) -> KindCounts {
    let mut out = KindCounts::new();
    if let Some(base) = plan.installed_at(year) {
        for ((_, kind, _), &n) in base {
            if segment.is_none_or(|s| kind.segment() == s) {
                *out.entry(*kind).or_insert(0) += n;
            }
        }
    }
    out
}

pub fn total_elements(counts: &KindCounts) -> u64 {
    counts.values().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_topology, LoadOptions};
    use crate::routing::home_all;

    fn star(leaves: &[(&str, f64, f64)]) -> Topology {
        let mut nodes = vec![
            r#"{"id":"C1","kind":"CO","level":"HL3","geotype":"Urban"}"#.to_string(),
            r#"{"id":"C2","kind":"CO","level":"HL4","geotype":"Urban"}"#.to_string(),
        ];
        let mut links = vec![r#"{"a":"C1","b":"C2","length_km":20,"segment":"MtC","fiber":"smf"}"#.to_string()];
        for (id, k1, k2) in leaves {
            nodes.push(format!(r#"{{"id":"{id}","kind":"Leaf","level":"none","geotype":"Urban"}}"#));
            links.push(format!(r#"{{"a":"{id}","b":"C1","length_km":{k1},"segment":"AtM","fiber":"smf"}}"#));
            links.push(format!(r#"{{"a":"{id}","b":"C2","length_km":{k2},"segment":"AtM","fiber":"smf"}}"#));
        }
        let doc = format!(
            r#"{{"fibers":{{"smf":{{"alpha_db_km":0.2,"beta2_ps2_km":-21.7,"gamma_w_km":1.3}}}},"nodes":[{}],"links":[{}]}}"#,
            nodes.join(","),
            links.join(",")
        );
        load_topology(&doc, &LoadOptions::default()).unwrap()
    }

    fn demands(items: &[(&str, f64)]) -> DemandSet {
        DemandSet { year: 1, seed: None, growth_rate: None, demands: items.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }

    fn counts(req: &Requirement) -> KindCounts {
        let mut c = KindCounts::new();
        for ((_, k, _), n) in req {
            *c.entry(*k).or_insert(0) += n;
        }
        c
    }

    #[test]
    fn single_leaf_ptp_is_four_zr() {
        let t = star(&[("L1", 5.0, 8.0)]);
        let h = home_all(&t).unwrap();
        let out = dimension_atm(
            &t,
            &demands(&[("L1", 43.6)]),
            &h,
            Scenario::PtP,
            1,
            &DimConfig::default(),
            &Catalog::default_catalog(),
            &QotConfig::default(),
        )
        .unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(counts(&out.requirement), [(EquipmentKind::ZR100G, 4)].into());
    }

    #[test]
    fn four_leaves_single_leg_share_one_hub() {
        let t = star(&[("L1", 3.0, 9.0), ("L2", 3.0, 9.0), ("L3", 3.0, 9.0), ("L4", 3.0, 9.0)]);
        let h = home_all(&t).unwrap();
        let cfg = DimConfig { protection_chain_factor: 1, ..Default::default() };
        let d = demands(&[("L1", 50.0), ("L2", 50.0), ("L3", 50.0), ("L4", 50.0)]);
        let out = dimension_atm(&t, &d, &h, Scenario::PtMP, 1, &cfg, &Catalog::default_catalog(), &QotConfig::default()).unwrap();
        assert_eq!(counts(&out.requirement), [(EquipmentKind::DSCM100G, 4), (EquipmentKind::DSCM400G, 1)].into());
    }

    #[test]
    fn long_feeder_gets_er() {
        let t = star(&[("L1", 12.0, 12.5)]);
        let h = home_all(&t).unwrap();
        let out = dimension_atm(
            &t,
            &demands(&[("L1", 43.6)]),
            &h,
            Scenario::Benchmark,
            1,
            &DimConfig::default(),
            &Catalog::default_catalog(),
            &QotConfig::default(),
        )
        .unwrap();
        let leaf_er = out.requirement.keys().any(|(n, k, _)| n == "L1" && *k == EquipmentKind::Gray100G_ER);
        assert!(leaf_er);
        assert_eq!(counts(&out.requirement).get(&EquipmentKind::Gray100G_LR), None);
    }

    #[test]
    fn mtc_example_counts() {
        let t = star(&[("L1", 3.0, 9.0)]);
        let cat = Catalog::default_catalog();
        let routing = plan_mtc_routes(&t, &cat, &QotConfig::default());
        // a single MtC link has no disjoint pair: explicit record, no equipment
        let routing = routing.unwrap();
        assert!(routing.routes.is_empty());
        assert_eq!(routing.failures.len(), 1);
    }

    #[test]
    fn plan_is_cumulative() {
        let mut plan = BuildPlan::new(Scenario::PtP);
        let mut r1 = Requirement::new();
        need(&mut r1, "A", EquipmentKind::ZR100G, "x", 2);
        let mut r2 = Requirement::new();
        need(&mut r2, "A", EquipmentKind::ZR100G, "x", 1);
        need(&mut r2, "B", EquipmentKind::ZR100G, "y", 1);
        plan.advance(1, &r1).unwrap();
        plan.advance(2, &r2).unwrap();
        assert_eq!(element_count(&plan, 1, None)[&EquipmentKind::ZR100G], 2);
        assert_eq!(element_count(&plan, 2, None)[&EquipmentKind::ZR100G], 3);
        assert_eq!(plan.added_in(2).len(), 1);
        assert!(plan.advance(2, &r2).is_err());
        assert!(element_count(&BuildPlan::default(), 1, None).is_empty());
    }
}
