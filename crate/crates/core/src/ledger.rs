//! Equipment catalog and cost/power accounting.
//!
//! Money is held as integer milli cost units and power as integer milliwatts,
//! so sums are exact and independent of reduction order. One milli c.u. is
//! exactly 5 EUR.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Scenario, Segment};

/// Euros per cost unit.
pub const EUR_PER_CU: i64 = 5000;

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EquipmentKind {
    Gray100G_LR,
    Gray100G_ER,
    TP400G,
    ZR100G,
    DSCM100G,
    DSCM400G,
    ZRp400G,
    RoB,
    MCS,
}

impl EquipmentKind {
    pub const ALL: [EquipmentKind; 9] = [
        EquipmentKind::Gray100G_LR,
        EquipmentKind::Gray100G_ER,
        EquipmentKind::TP400G,
        EquipmentKind::ZR100G,
        EquipmentKind::DSCM100G,
        EquipmentKind::DSCM400G,
        EquipmentKind::ZRp400G,
        EquipmentKind::RoB,
        EquipmentKind::MCS,
    ];

    pub fn segment(self) -> Segment {
        match self {
            EquipmentKind::ZRp400G | EquipmentKind::RoB | EquipmentKind::MCS => Segment::MtC,
            _ => Segment::AtM,
        }
    }

    /// Whether the kind may appear in a plan for `scenario`.
    pub fn permitted_in(self, scenario: Scenario) -> bool {
        use EquipmentKind::*;
        match self {
            ZRp400G | RoB | MCS => true,
            Gray100G_LR | Gray100G_ER | TP400G => scenario == Scenario::Benchmark,
            ZR100G => scenario == Scenario::PtP,
            DSCM100G | DSCM400G => scenario == Scenario::PtMP,
        }
    }
}

impl fmt::Display for EquipmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for EquipmentKind {
    type Err = LedgerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EquipmentKind::ALL.into_iter().find(|k| k.to_string() == s).ok_or_else(|| LedgerError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("unknown equipment kind `{0}`")]
    UnknownKind(String),
    #[error("catalog has no entry for {0}")]
    MissingKind(EquipmentKind),
    #[error("catalog row {row}: {msg}")]
    BadRow { row: usize, msg: String },
    #[error("catalog: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("total is zero; shares are undefined")]
    ZeroTotal,
    #[error("baseline is zero; relative delta is undefined")]
    ZeroBaseline,
}

/// Parses a non-negative decimal with at most three fractional digits into
/// thousandths, exactly.
pub fn parse_milli(s: &str) -> Option<i64> {
    let s = s.trim();
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let frac = frac.trim_end_matches('0');
    if frac.len() > 3 {
        return None;
    }
    let whole: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let mut f: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    for _ in frac.len()..3 {
        f *= 10;
    }
    whole.checked_mul(1000)?.checked_add(f)
}

/// Formats thousandths as a decimal string without trailing zeros.
pub fn format_milli(v: i64) -> String {
    let sign = if v < 0 { "-" } else { "" };
    let a = v.unsigned_abs();
    let (whole, frac) = (a / 1000, a % 1000);
    if frac == 0 {
        format!("{sign}{whole}")
    } else {
        let f = format!("{frac:03}");
        format!("{sign}{whole}.{}", f.trim_end_matches('0'))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub kind: EquipmentKind,
    pub cost_milli_cu: i64,
    pub power_mw: i64,
    pub reach_km: Option<f64>,
    pub threshold_db: Option<f64>,
    pub notes: String,
}

impl CatalogEntry {
    pub fn cost_cu(&self) -> f64 {
        self.cost_milli_cu as f64 / 1000.0
    }

    pub fn power_w(&self) -> f64 {
        self.power_mw as f64 / 1000.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    entries: BTreeMap<EquipmentKind, CatalogEntry>,
}

#[derive(Deserialize)]
struct CatalogRow {
    kind: String,
    cost_cu: String,
    power_w: String,
    #[serde(default)]
    reach_km: Option<f64>,
    #[serde(default)]
    threshold_db: Option<f64>,
    #[serde(default)]
    notes: String,
}

const DEFAULT_CATALOG: &str = include_str!("../data/catalog.csv");

impl Catalog {
    /// The shipped catalog.
    pub fn default_catalog() -> Self {
        Catalog::from_csv(DEFAULT_CATALOG).expect("shipped catalog is valid")
    }

    /// Parses catalog CSV (`#` starts a comment line) and checks completeness.
    pub fn from_csv(text: &str) -> Result<Self, LedgerError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut entries = BTreeMap::new();
        for (row, rec) in rdr.deserialize::<CatalogRow>().enumerate() {
            let r = rec?;
            let bad = |msg: String| LedgerError::BadRow { row: row + 1, msg };
            let kind: EquipmentKind = r.kind.parse()?;
            let cost_milli_cu = parse_milli(&r.cost_cu)
                .ok_or_else(|| bad(format!("cost_cu `{}` is not a non-negative decimal with <= 3 places", r.cost_cu)))?;
            let power_mw = parse_milli(&r.power_w)
                .ok_or_else(|| bad(format!("power_w `{}` is not a non-negative decimal with <= 3 places", r.power_w)))?;
            if r.reach_km.is_some_and(|x| !(x.is_finite() && x > 0.0)) {
                return Err(bad("reach_km must be positive".into()));
            }
            let entry = CatalogEntry { kind, cost_milli_cu, power_mw, reach_km: r.reach_km, threshold_db: r.threshold_db, notes: r.notes };
            if entries.insert(kind, entry).is_some() {
                return Err(bad(format!("duplicate kind {kind}")));
            }
        }
        let cat = Catalog { entries };
        cat.check_complete()?;
        Ok(cat)
    }

    pub fn from_file(path: &FsPath) -> Result<Self, LedgerError> {
        let text = std::fs::read_to_string(path).map_err(|source| LedgerError::Io { path: path.display().to_string(), source })?;
        Catalog::from_csv(&text)
    }

    pub fn check_complete(&self) -> Result<(), LedgerError> {
        match EquipmentKind::ALL.into_iter().find(|k| !self.entries.contains_key(k)) {
            Some(k) => Err(LedgerError::MissingKind(k)),
            None => Ok(()),
        }
    }

    pub fn get(&self, kind: EquipmentKind) -> &CatalogEntry {
        &self.entries[&kind]
    }

    pub fn lookup(&self, name: &str) -> Result<&CatalogEntry, LedgerError> {
        let kind: EquipmentKind = name.parse()?;
        self.entries.get(&kind).ok_or(LedgerError::MissingKind(kind))
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }

    /// Replaces one entry (sensitivity runs).
    pub fn set(&mut self, entry: CatalogEntry) {
        self.entries.insert(entry.kind, entry);
    }
}

/// Equipment counts by kind.
pub type KindCounts = BTreeMap<EquipmentKind, u64>;

/// Exact cost total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cost {
    pub milli_cu: i64,
}

impl Cost {
    pub fn cu(self) -> f64 {
        self.milli_cu as f64 / 1000.0
    }

    pub fn eur(self) -> i64 {
        self.milli_cu * (EUR_PER_CU / 1000)
    }
}

fn in_segment(kind: EquipmentKind, segment: Option<Segment>) -> bool {
    segment.is_none_or(|s| kind.segment() == s)
}

/// Σ count × unit cost over kinds of `segment` (all kinds when `None`).
pub fn cost_of(counts: &KindCounts, cat: &Catalog, segment: Option<Segment>) -> Cost {
    let milli_cu = counts.iter().filter(|(k, _)| in_segment(**k, segment)).map(|(k, &n)| cat.get(*k).cost_milli_cu * n as i64).sum();
    Cost { milli_cu }
}

/// Σ count × unit power in milliwatts.
pub fn power_of_mw(counts: &KindCounts, cat: &Catalog, segment: Option<Segment>) -> i64 {
    counts.iter().filter(|(k, _)| in_segment(**k, segment)).map(|(k, &n)| cat.get(*k).power_mw * n as i64).sum()
}

/// Σ count × unit power in watts.
pub fn power_of(counts: &KindCounts, cat: &Catalog, segment: Option<Segment>) -> f64 {
    power_of_mw(counts, cat, segment) as f64 / 1000.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindLine {
    pub kind: EquipmentKind,
    pub count: u64,
    pub cost_milli_cu: i64,
    pub power_mw: i64,
    pub cost_share_pct: f64,
    pub power_share_pct: f64,
}

impl KindLine {
    pub fn cost_cu(&self) -> f64 {
        self.cost_milli_cu as f64 / 1000.0
    }

    pub fn power_w(&self) -> f64 {
        self.power_mw as f64 / 1000.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostPowerReport {
    pub segment: Segment,
    pub scenario: Scenario,
    pub year: u32,
    pub lines: Vec<KindLine>,
    pub cost: Cost,
    pub power_mw: i64,
}

impl CostPowerReport {
    pub fn build(counts: &KindCounts, cat: &Catalog, segment: Segment, scenario: Scenario, year: u32) -> Self {
        let cost = cost_of(counts, cat, Some(segment));
        let power_mw = power_of_mw(counts, cat, Some(segment));
        let share = |part: i64, total: i64| if total == 0 { 0.0 } else { part as f64 * 100.0 / total as f64 };
        let lines = counts
            .iter()
            .filter(|(k, &n)| in_segment(**k, Some(segment)) && n > 0)
            .map(|(&kind, &count)| {
                let e = cat.get(kind);
                let c = e.cost_milli_cu * count as i64;
                let p = e.power_mw * count as i64;
                KindLine {
                    kind,
                    count,
                    cost_milli_cu: c,
                    power_mw: p,
                    cost_share_pct: share(c, cost.milli_cu),
                    power_share_pct: share(p, power_mw),
                }
            })
            .collect();
        CostPowerReport { segment, scenario, year, lines, cost, power_mw }
    }

    pub fn power_w(&self) -> f64 {
        self.power_mw as f64 / 1000.0
    }

    pub fn count(&self, kind: EquipmentKind) -> u64 {
        self.lines.iter().find(|l| l.kind == kind).map_or(0, |l| l.count)
    }

    pub fn elements(&self) -> u64 {
        self.lines.iter().map(|l| l.count).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Cost,
    Power,
    Elements,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cost => "cost",
            Metric::Power => "power",
            Metric::Elements => "elements",
        })
    }
}

/// Per-kind percentage shares of one metric.
pub fn breakdown(report: &CostPowerReport, metric: Metric) -> Result<BTreeMap<EquipmentKind, f64>, LedgerError> {
    let part = |l: &KindLine| match metric {
        Metric::Cost => l.cost_milli_cu,
        Metric::Power => l.power_mw,
        Metric::Elements => l.count as i64,
    };
    let total: i64 = report.lines.iter().map(part).sum();
    if total == 0 {
        return Err(LedgerError::ZeroTotal);
    }
    Ok(report.lines.iter().map(|l| (l.kind, part(l) as f64 * 100.0 / total as f64)).collect())
}

/// Relative delta `(base - other) / base * 100`; positive means `other` is smaller.
pub fn relative_delta(base: f64, other: f64) -> Result<f64, LedgerError> {
    if base == 0.0 {
        return Err(LedgerError::ZeroBaseline);
    }
    Ok((base - other) / base * 100.0)
}

/// Deltas of `b` against baseline `a` for cost, power and element count.
pub fn compare(a: &CostPowerReport, b: &CostPowerReport) -> Result<BTreeMap<String, f64>, LedgerError> {
    let mut out = BTreeMap::new();
    out.insert(Metric::Cost.to_string(), relative_delta(a.cost.milli_cu as f64, b.cost.milli_cu as f64)?);
    out.insert(Metric::Power.to_string(), relative_delta(a.power_mw as f64, b.power_mw as f64)?);
    out.insert(Metric::Elements.to_string(), relative_delta(a.elements() as f64, b.elements() as f64)?);
    Ok(out)
}
