//! Leaf demands, compound growth, channelization and CO aggregation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Topology;
use crate::routing::HomingAssignment;
use crate::scalar::CompensatedSum;

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("need min < mean < max, got min={min} mean={mean} max={max}")]
    InfeasibleRange { mean: f64, min: f64, max: f64 },
    #[error("year {year} outside [{from}, {horizon}]")]
    YearOutOfRange { year: u32, from: u32, horizon: u32 },
    #[error("growth rate must be > -1, got {0}")]
    Rate(f64),
    #[error("leaf `{0}` has no homing entry")]
    Unhomed(String),
    #[error("leaf `{0}` has no demand")]
    MissingDemand(String),
    #[error("demand for `{leaf}` must be positive and finite, got {gbps}")]
    BadDemand { leaf: String, gbps: f64 },
    #[error("homing references unknown CO `{0}`")]
    UnknownCo(String),
}

/// Offered traffic per leaf in Gbps for one study year.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandSet {
    pub year: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_rate: Option<f64>,
    pub demands: BTreeMap<String, f64>,
}

impl DemandSet {
    pub fn validate(&self) -> Result<(), TrafficError> {
        if self.year < 1 {
            return Err(TrafficError::YearOutOfRange { year: self.year, from: 1, horizon: u32::MAX });
        }
        for (leaf, &gbps) in &self.demands {
            if !(gbps.is_finite() && gbps > 0.0) {
                return Err(TrafficError::BadDemand { leaf: leaf.clone(), gbps });
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        let s: CompensatedSum = self.demands.values().copied().collect();
        s.value() / self.demands.len().max(1) as f64
    }

    pub fn total(&self) -> f64 {
        self.demands.values().copied().collect::<CompensatedSum>().value()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthModel {
    pub rate: f64,
    pub horizon: u32,
}

impl Default for GrowthModel {
    fn default() -> Self {
        GrowthModel { rate: 0.40, horizon: 10 }
    }
}

/// Truncated-normal demands rescaled so the sample mean hits `mean`.
///
/// σ puts about 99% of the untruncated mass inside `[min, max]`. After
/// sampling, the set is scaled to the target mean and clamped, repeatedly,
/// until the mean stops moving.
pub fn synth_demands(leaves: &[String], mean: f64, min: f64, max: f64, seed: u64) -> Result<DemandSet, TrafficError> {
    if !(min.is_finite() && max.is_finite() && min > 0.0 && min < mean && mean < max) {
        return Err(TrafficError::InfeasibleRange { mean, min, max });
    }
    let sigma = (mean - min).min(max - mean) / 2.576;
    let normal = Normal::new(mean, sigma).expect("sigma is positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = leaves
        .iter()
        .map(|_| loop {
            let x = normal.sample(&mut rng);
            if (min..=max).contains(&x) {
                break x;
            }
        })
        .collect();

    if !xs.is_empty() {
        for _ in 0..200 {
            let cur = xs.iter().copied().collect::<CompensatedSum>().value() / xs.len() as f64;
            if ((cur - mean) / mean).abs() < 1e-12 {
                break;
            }
            let k = mean / cur;
            xs.iter_mut().for_each(|x| *x = (*x * k).clamp(min, max));
        }
        if xs.len() == 1 {
            xs[0] = mean;
        }
    }
    Ok(DemandSet { year: 1, seed: Some(seed), growth_rate: None, demands: leaves.iter().cloned().zip(xs).collect() })
}

/// Scales every demand by `(1 + r)^(year − d.year)`.
pub fn grow(d: &DemandSet, m: &GrowthModel, year: u32) -> Result<DemandSet, TrafficError> {
    if !(m.rate > -1.0 && m.rate.is_finite()) {
        return Err(TrafficError::Rate(m.rate));
    }
    if year < d.year || year > m.horizon {
        return Err(TrafficError::YearOutOfRange { year, from: d.year, horizon: m.horizon });
    }
    let k = (1.0 + m.rate).powi((year - d.year) as i32);
    Ok(DemandSet { year, seed: d.seed, growth_rate: Some(m.rate), demands: d.demands.iter().map(|(id, &g)| (id.clone(), g * k)).collect() })
}

/// `ceil(d / rate)`, at least 1.
///
/// A quotient within a few ulps above an integer counts as that integer so
/// that, e.g., 300 Gbps on 100G channels is 3 even after float rounding
/// upstream.
pub fn channels_needed(d: f64, channel_rate: f64) -> u32 {
    let q = d / channel_rate;
    let r = q.round();
    let n = if (q - r).abs() <= 4.0 * f64::EPSILON * r.max(1.0) { r } else { q.ceil() };
    (n as u32).max(1)
}

/// Primary- and secondary-homed traffic terminating at one CO.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoAggregate {
    pub primary: f64,
    pub secondary: f64,
}

impl CoAggregate {
    /// Traffic the CO must carry with full-rate protection.
    pub fn protected(&self) -> f64 {
        self.primary + self.secondary
    }
}

/// Per-CO aggregates; every CO of the topology appears, possibly with zeros.
pub fn aggregate_co(t: &Topology, demands: &DemandSet, homing: &HomingAssignment) -> Result<BTreeMap<String, CoAggregate>, TrafficError> {
    let mut acc: BTreeMap<String, (CompensatedSum, CompensatedSum)> =
        t.co_indices().map(|i| (t.node(i).id.clone(), Default::default())).collect();
    for li in t.leaf_indices() {
        let leaf = &t.node(li).id;
        let h = homing.get(leaf).ok_or_else(|| TrafficError::Unhomed(leaf.clone()))?;
        let &gbps = demands.demands.get(leaf).ok_or_else(|| TrafficError::MissingDemand(leaf.clone()))?;
        acc.get_mut(&h.primary).ok_or_else(|| TrafficError::UnknownCo(h.primary.clone()))?.0.add(gbps);
        acc.get_mut(&h.secondary).ok_or_else(|| TrafficError::UnknownCo(h.secondary.clone()))?.1.add(gbps);
    }
    Ok(acc.into_iter().map(|(id, (p, s))| (id, CoAggregate { primary: p.value(), secondary: s.value() })).collect())
}
