//! Multi-year, multi-scenario study driver and report emission.
//!
//! Pipeline per study: topology (file or synthesized) → dual homing → base
//! demands → MtC routing and QoT (year-independent) → for every year, grown
//! demands, CO aggregates and the shared MtC requirement → per scenario, AtM
//! dimensioning and the cumulative build plan → cost/power reports and
//! cross-scenario comparisons.
//!
//! Scenarios run in parallel on a dedicated thread pool; years run in order
//! within a scenario. Results are merged in scenario order, and nothing in the
//! outputs depends on the worker count or on wall-clock time.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dimensioning::{
    dimension_atm, dimension_mtc, element_count, plan_mtc_routes, BuildPlan, DimConfig, DimError, Infeasibility, LightpathQot, Placement,
    Requirement,
};
use crate::ledger::{format_milli, relative_delta, Catalog, CostPowerReport, LedgerError, Metric};
use crate::model::{load_topology_file, topology_stats, LoadOptions, ModelError, Scenario, Segment, Topology, TopologyStats};
use crate::qot::{QotConfig, QotError};
use crate::routing::{home_all, RouteRecord, RoutingError};
use crate::synth::{synth_reference, SynthError, SynthParams};
use crate::traffic::{aggregate_co, grow, synth_demands, GrowthModel, TrafficError};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Qot(#[from] QotError),
    #[error("{context}: {source}")]
    Dim {
        context: String,
        #[source]
        source: DimError,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl StudyError {
    /// True for errors caused by the inputs rather than by the program.
    pub fn is_config(&self) -> bool {
        !matches!(self, StudyError::Io { .. } | StudyError::Pool(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologySource {
    File(PathBuf),
    Synth(SynthParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficParams {
    pub mean_gbps: f64,
    pub min_gbps: f64,
    pub max_gbps: f64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams { mean_gbps: 43.6, min_gbps: 10.5, max_gbps: 95.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub topology: TopologySource,
    pub traffic: TrafficParams,
    pub growth: GrowthModel,
    pub scenarios: Vec<Scenario>,
    pub horizon: u32,
    pub qot: QotConfig,
    pub dim: DimConfig,
    /// Catalog CSV; the shipped catalog when absent.
    pub catalog: Option<PathBuf>,
    pub max_leaf_distance_km: f64,
    /// Drives topology synthesis and demand sampling.
    pub seed: u64,
    /// Worker threads; the rayon default when absent. Never affects results.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            topology: TopologySource::Synth(SynthParams::default()),
            traffic: TrafficParams::default(),
            growth: GrowthModel::default(),
            scenarios: Scenario::ALL.to_vec(),
            horizon: 10,
            qot: QotConfig::default(),
            dim: DimConfig::default(),
            catalog: None,
            max_leaf_distance_km: 13.0,
            seed: 1,
            workers: None,
            out_dir: None,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), StudyError> {
        if self.horizon < 1 {
            return Err(StudyError::Config("horizon must be >= 1".into()));
        }
        if self.growth.horizon < self.horizon {
            return Err(StudyError::Config(format!(
                "growth horizon {} is shorter than the study horizon {}",
                self.growth.horizon, self.horizon
            )));
        }
        if self.workers == Some(0) {
            return Err(StudyError::Config("workers must be >= 1".into()));
        }
        let mut seen = self.scenarios.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.scenarios.len() {
            return Err(StudyError::Config("scenario list has duplicates".into()));
        }
        self.qot.validate()?;
        self.dim.validate().map_err(|e| StudyError::Config(e.to_string()))?;
        Ok(())
    }

    /// Demand sampling seed, derived from the study seed.
    pub fn traffic_seed(&self) -> u64 {
        self.seed ^ 0x9E37_79B9_7F4A_7C15
    }
}

/// One scenario/year/segment cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub scenario: Scenario,
    pub year: u32,
    pub segment: Segment,
    pub report: CostPowerReport,
    pub elements: u64,
    /// Demands left unserved in this cell.
    pub infeasible: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: Metric,
    pub segment: Segment,
    pub scenario_a: Scenario,
    pub scenario_b: Scenario,
    pub year: u32,
    /// `(A − B) / A × 100`: positive when B is smaller.
    pub delta_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub traffic_seed: u64,
    pub inputs_sha256: String,
    pub topology_sha256: String,
    pub catalog_sha256: String,
    pub scenarios: Vec<Scenario>,
    pub horizon: u32,
    pub synthetic_topology: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub manifest: Manifest,
    pub topology: TopologyStats,
    pub cells: Vec<Cell>,
    pub comparisons: Vec<ComparisonRow>,
    pub placements: Vec<(Scenario, Placement)>,
    pub failures: Vec<Infeasibility>,
    pub qot: Vec<LightpathQot>,
    pub routes: Vec<RouteRecord>,
}

impl StudyResult {
    pub fn cell(&self, scenario: Scenario, year: u32, segment: Segment) -> Option<&Cell> {
        self.cells.iter().find(|c| c.scenario == scenario && c.year == year && c.segment == segment)
    }

    /// Comparison delta, if both scenarios ran.
    pub fn delta(&self, metric: Metric, a: Scenario, b: Scenario, year: u32) -> Option<f64> {
        self.comparisons
            .iter()
            .find(|r| r.metric == metric && r.scenario_a == a && r.scenario_b == b && r.year == year)
            .map(|r| r.delta_pct)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn load_catalog(cfg: &StudyConfig) -> Result<(Catalog, String), StudyError> {
    match &cfg.catalog {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| StudyError::Config(format!("catalog {}: {e}", p.display())))?;
            Ok((Catalog::from_csv(&text)?, text))
        }
        None => Ok((Catalog::default_catalog(), include_str!("../data/catalog.csv").to_string())),
    }
}

fn load_topology_for(cfg: &StudyConfig) -> Result<Topology, StudyError> {
    let opts = LoadOptions { max_leaf_distance_km: cfg.max_leaf_distance_km, require_dual_homing: true };
    match &cfg.topology {
        TopologySource::File(p) => Ok(load_topology_file(p, &opts)?),
        TopologySource::Synth(params) => {
            let p = SynthParams { seed: cfg.seed, max_leaf_dist: cfg.max_leaf_distance_km, ..params.clone() };
            Ok(synth_reference(&p)?)
        }
    }
}

const PAIRS: [(Scenario, Scenario); 3] =
    [(Scenario::Benchmark, Scenario::PtMP), (Scenario::Benchmark, Scenario::PtP), (Scenario::PtP, Scenario::PtMP)];

/// Runs the full study.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult, StudyError> {
    cfg.validate()?;
    if cfg.scenarios.is_empty() {
        return Err(StudyError::Config("scenario list is empty".into()));
    }
    let (cat, catalog_text) = load_catalog(cfg)?;
    let topo = load_topology_for(cfg)?;
    let homing = home_all(&topo)?;
    let leaves: Vec<String> = topo.leaf_indices().map(|i| topo.node(i).id.clone()).collect();
    let t = &cfg.traffic;
    let base = synth_demands(&leaves, t.mean_gbps, t.min_gbps, t.max_gbps, cfg.traffic_seed())?;
    let growth = GrowthModel { rate: cfg.growth.rate, horizon: cfg.growth.horizon };

    let mtc_routing = plan_mtc_routes(&topo, &cat, &cfg.qot).map_err(|source| StudyError::Dim { context: "MtC routing".into(), source })?;

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = cfg.workers {
            b = b.num_threads(w);
        }
        b.build().map_err(|e| StudyError::Pool(e.to_string()))?
    };

    let years: Vec<u32> = (1..=cfg.horizon).collect();
    // per year: grown demands and the shared MtC requirement
    let per_year = pool.install(|| {
        years
            .par_iter()
            .map(|&y| -> Result<_, StudyError> {
                let d = grow(&base, &growth, y)?;
                let agg = aggregate_co(&topo, &d, &homing)?;
                let mtc = dimension_mtc(&topo, &agg, &mtc_routing, &cfg.dim)
                    .map_err(|source| StudyError::Dim { context: format!("MtC year {y}"), source })?;
                Ok((d, mtc))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    type ScenarioOut = (BuildPlan, Vec<Infeasibility>, Vec<LightpathQot>, BTreeMap<u32, usize>);
    let scenario_runs: Vec<ScenarioOut> = pool.install(|| {
        cfg.scenarios
            .par_iter()
            .map(|&sc| -> Result<ScenarioOut, StudyError> {
                let mut plan = BuildPlan::new(sc);
                let mut failures = Vec::new();
                let mut qot = Vec::new();
                let mut unserved = BTreeMap::new();
                for (i, &y) in years.iter().enumerate() {
                    let (demands, mtc_req) = &per_year[i];
                    let atm = dimension_atm(&topo, demands, &homing, sc, y, &cfg.dim, &cat, &cfg.qot)
                        .map_err(|source| StudyError::Dim { context: format!("{sc} year {y}"), source })?;
                    let mut req: Requirement = atm.requirement;
                    req.extend(mtc_req.iter().map(|(k, v)| (k.clone(), *v)));
                    plan.advance(y, &req).map_err(|source| StudyError::Dim { context: format!("{sc} year {y}"), source })?;
                    unserved.insert(y, atm.failures.len());
                    failures.extend(atm.failures);
                    if y == 1 {
                        qot = atm.qot;
                    }
                }
                Ok((plan, failures, qot, unserved))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mtc_unserved = mtc_routing.failures.iter().map(|f| &f.demand).collect::<std::collections::BTreeSet<_>>().len();
    let mut cells = Vec::new();
    let mut placements = Vec::new();
    let mut failures = mtc_routing.failures.clone();
    let mut qot = mtc_routing.qot.clone();
    for (&sc, (plan, fails, q, unserved)) in cfg.scenarios.iter().zip(&scenario_runs) {
        for &y in &years {
            for seg in [Segment::AtM, Segment::MtC] {
                let counts = element_count(plan, y, Some(seg));
                let report = CostPowerReport::build(&counts, &cat, seg, sc, y);
                cells.push(Cell {
                    scenario: sc,
                    year: y,
                    segment: seg,
                    elements: report.elements(),
                    report,
                    infeasible: if seg == Segment::AtM { unserved[&y] } else { mtc_unserved },
                });
            }
            placements.extend(plan.added_in(y).iter().cloned().map(|p| (sc, p)));
        }
        failures.extend(fails.iter().cloned());
        qot.extend(q.iter().cloned());
    }

    let mut comparisons = Vec::new();
    for &(a, b) in &PAIRS {
        if !(cfg.scenarios.contains(&a) && cfg.scenarios.contains(&b)) {
            continue;
        }
        for &y in &years {
            let ca = cells.iter().find(|c| c.scenario == a && c.year == y && c.segment == Segment::AtM).expect("cell");
            let cb = cells.iter().find(|c| c.scenario == b && c.year == y && c.segment == Segment::AtM).expect("cell");
            for (metric, va, vb) in [
                (Metric::Cost, ca.report.cost.milli_cu as f64, cb.report.cost.milli_cu as f64),
                (Metric::Power, ca.report.power_mw as f64, cb.report.power_mw as f64),
                (Metric::Elements, ca.elements as f64, cb.elements as f64),
            ] {
                if let Ok(delta_pct) = relative_delta(va, vb) {
                    comparisons.push(ComparisonRow { metric, segment: Segment::AtM, scenario_a: a, scenario_b: b, year: y, delta_pct });
                }
            }
        }
    }

    let routes = mtc_routing.routes.values().map(|r| r.record(&topo)).collect();
    let topo_json = topo.to_json();
    let mut hashed = cfg.clone();
    hashed.workers = None;
    hashed.out_dir = None;
    let cfg_json = serde_json::to_string(&hashed).expect("config serializes");
    let mut all = Sha256::new();
    all.update(cfg_json.as_bytes());
    all.update(topo_json.as_bytes());
    all.update(catalog_text.as_bytes());
    let inputs_sha256 = all.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    let manifest = Manifest {
        tool: "ipowdm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        traffic_seed: cfg.traffic_seed(),
        inputs_sha256,
        topology_sha256: sha256_hex(topo_json.as_bytes()),
        catalog_sha256: sha256_hex(catalog_text.as_bytes()),
        scenarios: cfg.scenarios.clone(),
        horizon: cfg.horizon,
        synthetic_topology: topo.meta().is_some_and(|m| m.synthetic),
    };

    Ok(StudyResult { manifest, topology: topology_stats(&topo), cells, comparisons, placements, failures, qot, routes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    /// CSV tables plus the JSON documents.
    Csv,
    /// JSON documents only.
    Json,
}

fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        String::new()
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Renders every output file as `(name, contents)`, in a fixed order.
pub fn render_reports(r: &StudyResult, format: ReportFormat) -> Vec<(&'static str, String)> {
    let mut files = vec![
        ("manifest.json", pretty(&r.manifest)),
        ("report.json", pretty(r)),
        ("routes.json", pretty(&r.routes)),
        ("failures.json", pretty(&r.failures)),
    ];
    if format == ReportFormat::Json {
        return files;
    }

    let mut ledger_rows = Vec::new();
    let mut plot_rows = Vec::new();
    for c in &r.cells {
        let rep = &c.report;
        for l in &rep.lines {
            ledger_rows.push(vec![
                c.segment.to_string(),
                c.scenario.to_string(),
                c.year.to_string(),
                l.kind.to_string(),
                l.count.to_string(),
                format_milli(l.cost_milli_cu),
                (l.cost_milli_cu * 5).to_string(),
                format_milli(l.power_mw),
                fmt_f(l.cost_share_pct),
            ]);
            for (metric, v) in
                [("count", l.count.to_string()), ("cost_cu", format_milli(l.cost_milli_cu)), ("power_w", format_milli(l.power_mw))]
            {
                plot_rows.push(vec![
                    c.scenario.to_string(),
                    c.year.to_string(),
                    c.segment.to_string(),
                    metric.into(),
                    l.kind.to_string(),
                    v,
                ]);
            }
        }
        ledger_rows.push(vec![
            c.segment.to_string(),
            c.scenario.to_string(),
            c.year.to_string(),
            "TOTAL".into(),
            c.elements.to_string(),
            format_milli(rep.cost.milli_cu),
            rep.cost.eur().to_string(),
            format_milli(rep.power_mw),
            if rep.cost.milli_cu > 0 { fmt_f(100.0) } else { String::new() },
        ]);
        for (metric, v) in
            [("count", c.elements.to_string()), ("cost_cu", format_milli(rep.cost.milli_cu)), ("power_w", format_milli(rep.power_mw))]
        {
            plot_rows.push(vec![c.scenario.to_string(), c.year.to_string(), c.segment.to_string(), metric.into(), "TOTAL".into(), v]);
        }
    }
    files.push((
        "ledger.csv",
        csv_text(&["segment", "scenario", "year", "kind", "count", "cost_cu", "cost_eur", "power_w", "share_pct"], ledger_rows),
    ));
    files.push((
        "comparison.csv",
        csv_text(
            &["metric", "scenarioA", "scenarioB", "year", "delta_pct"],
            r.comparisons.iter().map(|c| {
                vec![c.metric.to_string(), c.scenario_a.to_string(), c.scenario_b.to_string(), c.year.to_string(), fmt_f(c.delta_pct)]
            }),
        ),
    ));
    files.push(("plot_long.csv", csv_text(&["scenario", "year", "segment", "metric", "kind", "value"], plot_rows)));
    files.push((
        "build_plan.csv",
        csv_text(
            &["scenario", "year", "node", "kind", "count", "cause"],
            r.placements.iter().map(|(s, p)| {
                vec![s.to_string(), p.year.to_string(), p.node.clone(), p.kind.to_string(), p.count.to_string(), p.cause.clone()]
            }),
        ),
    ));
    files.push((
        "qot.csv",
        csv_text(
            &[
                "segment",
                "scenario",
                "demand",
                "leg",
                "transceiver",
                "km",
                "metric",
                "value_db",
                "threshold_db",
                "margin_db",
                "ase_w",
                "nli_w",
                "wss_penalty_db",
                "feasible",
                "limiting",
            ],
            r.qot.iter().map(|q| {
                let b = &q.result.breakdown;
                vec![
                    q.segment.to_string(),
                    q.scenario.map_or(String::new(), |s| s.to_string()),
                    q.demand.clone(),
                    q.leg.clone(),
                    q.transceiver.to_string(),
                    fmt_f(q.km),
                    format!("{:?}", q.result.metric),
                    fmt_f(q.result.value_db),
                    fmt_f(q.result.threshold_db),
                    fmt_f(q.result.margin_db()),
                    format!("{:.6e}", b.ase_w),
                    format!("{:.6e}", b.nli_w),
                    fmt_f(b.wss_penalty_db),
                    q.feasible.to_string(),
                    format!("{:?}", q.limiting),
                ]
            }),
        ),
    ));
    files
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes the rendered reports into `dir`, creating it if needed.
pub fn emit_report(r: &StudyResult, dir: &FsPath, format: ReportFormat) -> Result<Vec<PathBuf>, StudyError> {
    let io = |path: &FsPath, source| StudyError::Io { path: path.display().to_string(), source };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    for (name, text) in render_reports(r, format) {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}
