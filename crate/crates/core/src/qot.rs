//! Quality-of-transmission estimation.
//!
//! Access feeders are ASE-limited: a single amplifier restores the total loss
//! (fiber, polarization, and the splitter for PtMP) and the verdict is on OSNR.
//! Metro lightpaths use the incoherent GN model: per-span ASE plus NLI, summed
//! as inverse SNRs, combined with the transceiver back-to-back SNR, minus the
//! aging margin and the WSS filtering penalty.
//!
//! All kernels are generic over [`Scalar`]; the pipeline instantiates `f64`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Catalog, LedgerError};
use crate::model::{FiberParams, Scenario, Topology};
use crate::routing::Path;
use crate::scalar::Scalar;

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

#[derive(Debug, Error)]
pub enum QotError {
    #[error("splitter fan-out must be >= 1, got {0}")]
    Fanout(u32),
    #[error(transparent)]
    Catalog(#[from] LedgerError),
    #[error("invalid QoT configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtmChannelPlan<S> {
    pub spacing_hz: S,
    pub symbol_rate_baud: S,
    pub launch_dbm: S,
    /// Splitter fan-out; 1 for PtP.
    pub fanout: u32,
    pub freq_hz: S,
    pub alpha_db_km: S,
    pub pol_loss_db: S,
}

impl<S: Scalar> Default for AtmChannelPlan<S> {
    fn default() -> Self {
        AtmChannelPlan {
            spacing_hz: S::lit(50e9),
            symbol_rate_baud: S::lit(27.95e9),
            launch_dbm: S::zero(),
            fanout: 4,
            freq_hz: S::lit(193.4e12),
            alpha_db_km: S::lit(0.2),
            pol_loss_db: S::lit(0.5),
        }
    }
}

impl<S: Scalar> AtmChannelPlan<S> {
    pub fn validate(&self) -> Result<(), QotError> {
        if self.fanout < 1 {
            return Err(QotError::Fanout(self.fanout));
        }
        if !(self.symbol_rate_baud > S::zero() && self.symbol_rate_baud <= self.spacing_hz) {
            return Err(QotError::Config("AtM symbol rate must be positive and <= spacing".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtcChannelPlan<S> {
    pub spacing_hz: S,
    pub symbol_rate_baud: S,
    pub bandwidth_hz: S,
    pub launch_dbm: S,
    pub center_freq_hz: S,
    /// Offset of the channel under test from the comb center.
    pub channel_offset_hz: S,
}

impl<S: Scalar> Default for MtcChannelPlan<S> {
    fn default() -> Self {
        MtcChannelPlan {
            spacing_hz: S::lit(75e9),
            symbol_rate_baud: S::lit(64e9),
            bandwidth_hz: S::lit(6e12),
            launch_dbm: S::zero(),
            center_freq_hz: S::lit(193.4e12),
            channel_offset_hz: S::zero(),
        }
    }
}

impl<S: Scalar> MtcChannelPlan<S> {
    pub fn channels(&self) -> usize {
        (self.bandwidth_hz / self.spacing_hz).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), QotError> {
        if !(self.symbol_rate_baud > S::zero() && self.symbol_rate_baud <= self.spacing_hz) {
            return Err(QotError::Config("MtC symbol rate must be positive and <= spacing".into()));
        }
        let n = S::from_usize(self.channels()).unwrap_or_else(S::zero);
        if n < S::one() || ((n * self.spacing_hz - self.bandwidth_hz) / self.bandwidth_hz).abs() > S::lit(1e-6) {
            return Err(QotError::Config("MtC bandwidth must be a whole number of channel slots".into()));
        }
        Ok(())
    }

    pub fn channel_freq_hz(&self) -> S {
        self.center_freq_hz + self.channel_offset_hz
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmpModel<S> {
    pub noise_figure_db: S,
}

impl<S: Scalar> Default for AmpModel<S> {
    fn default() -> Self {
        AmpModel { noise_figure_db: S::lit(4.5) }
    }
}

/// WSS filtering penalty by number of traversed stages. Entry `i` is the
/// penalty for `i + 1` stages; counts beyond the table use the last entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WssSchedule<S> {
    pub table_db: Vec<S>,
}

impl<S: Scalar> WssSchedule<S> {
    /// `first` for one stage, `+step` per further stage, capped at `cap`.
    pub fn linear(first: S, step: S, cap: S) -> Self {
        let mut table_db = Vec::new();
        let mut v = first;
        loop {
            let capped = v.min(cap);
            table_db.push(capped);
            if capped >= cap || step <= S::zero() {
                break;
            }
            v = v + step;
        }
        WssSchedule { table_db }
    }

    pub fn penalty_db(&self, stages: usize) -> S {
        match (stages, self.table_db.last()) {
            (0, _) | (_, None) => S::zero(),
            (n, Some(&last)) => self.table_db.get(n - 1).copied().unwrap_or(last),
        }
    }

    pub fn validate(&self) -> Result<(), QotError> {
        let (lo, hi) = (S::lit(0.3), S::lit(8.0));
        if self.table_db.iter().any(|&v| v < lo || v > hi) {
            return Err(QotError::Config("WSS penalties must lie within [0.3, 8] dB".into()));
        }
        if self.table_db.windows(2).any(|w| w[1] < w[0]) {
            return Err(QotError::Config("WSS schedule must be non-decreasing".into()));
        }
        Ok(())
    }
}

impl<S: Scalar> Default for WssSchedule<S> {
    fn default() -> Self {
        WssSchedule::linear(S::lit(0.3), S::lit(0.7), S::lit(8.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginModel<S> {
    pub aging_db: S,
    /// Transceiver back-to-back SNR; `None` disables the term.
    pub b2b_snr_db: Option<S>,
    pub wss: WssSchedule<S>,
}

impl<S: Scalar> Default for MarginModel<S> {
    fn default() -> Self {
        MarginModel { aging_db: S::one(), b2b_snr_db: Some(S::lit(36.0)), wss: WssSchedule::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    Osnr,
    Gsnr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitingFactor {
    /// Feasible.
    None,
    Ase,
    Nli,
    /// Transceiver back-to-back noise dominates.
    Transceiver,
    /// Margins (aging, WSS) push an otherwise sufficient SNR below threshold.
    Margins,
    Reach,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakdown<S> {
    /// Total loss compensated (AtM) or summed span loss (MtC).
    pub loss_db: S,
    pub signal_w: S,
    pub ase_w: S,
    pub nli_w: S,
    pub spans: usize,
    pub wss_stages: usize,
    pub wss_penalty_db: S,
    pub aging_db: S,
    pub b2b_snr_db: Option<S>,
    /// Line SNR before B2B and margins (MtC only).
    pub line_snr_db: Option<S>,
    /// OSNR referred to a 12.5 GHz (0.1 nm) bandwidth (AtM only).
    pub osnr_01nm_db: Option<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QotResult<S> {
    pub metric: MetricKind,
    pub value_db: S,
    pub threshold_db: S,
    pub breakdown: Breakdown<S>,
    pub feasible: bool,
    pub limiting: LimitingFactor,
}

impl<S: Scalar> QotResult<S> {
    /// Re-derives the headline value from the breakdown alone.
    pub fn recompose_db(&self) -> S {
        let b = &self.breakdown;
        match self.metric {
            MetricKind::Osnr => (b.signal_w / b.ase_w).to_db(),
            MetricKind::Gsnr => {
                let mut inv = (b.ase_w + b.nli_w) / b.signal_w;
                if let Some(b2b) = b.b2b_snr_db {
                    inv = inv + S::one() / b2b.from_db();
                }
                (S::one() / inv).to_db() - b.aging_db - b.wss_penalty_db
            }
        }
    }

    /// Margin left over the threshold, after aging for OSNR.
    pub fn margin_db(&self) -> S {
        match self.metric {
            MetricKind::Osnr => self.value_db - self.breakdown.aging_db - self.threshold_db,
            MetricKind::Gsnr => self.value_db - self.threshold_db,
        }
    }
}

// ---------------------------------------------------------------------------
// AtM
// ---------------------------------------------------------------------------

pub fn splitter_loss<S: Scalar>(fanout: u32) -> Result<S, QotError> {
    if fanout < 1 {
        return Err(QotError::Fanout(fanout));
    }
    Ok(S::from_u32(fanout).expect("u32 fits").to_db())
}

/// αL + A_pol, plus the splitter loss for PtMP.
pub fn atm_total_loss<S: Scalar>(length_km: S, plan: &AtmChannelPlan<S>, scenario: Scenario) -> Result<S, QotError> {
    let base = plan.alpha_db_km * length_km + plan.pol_loss_db;
    Ok(match scenario {
        Scenario::PtMP => base + splitter_loss(plan.fanout)?,
        _ => base,
    })
}

/// (G − 1)·h·ν·B·F with G and F given in dB.
pub fn ase_power<S: Scalar>(gain_db: S, bandwidth_hz: S, noise_figure_db: S, freq_hz: S) -> S {
    (gain_db.from_db() - S::one()) * S::lit(PLANCK) * freq_hz * bandwidth_hz * noise_figure_db.from_db()
}

/// OSNR of a feeder with one amplifier whose gain equals the total loss.
/// The value excludes aging; feasibility is `OSNR − aging ≥ threshold`.
pub fn osnr_atm<S: Scalar>(
    length_km: S,
    plan: &AtmChannelPlan<S>,
    amp: &AmpModel<S>,
    margins: &MarginModel<S>,
    scenario: Scenario,
    threshold_db: S,
) -> Result<QotResult<S>, QotError> {
    plan.validate()?;
    let loss = atm_total_loss(length_km, plan, scenario)?;
    let p_rx = (plan.launch_dbm - loss).from_db() * S::lit(1e-3);
    let ase = ase_power(loss, plan.symbol_rate_baud, amp.noise_figure_db, plan.freq_hz);
    let osnr = (p_rx / ase).to_db();
    let feasible = osnr - margins.aging_db >= threshold_db;
    let limiting = if feasible {
        LimitingFactor::None
    } else if osnr >= threshold_db {
        LimitingFactor::Margins
    } else {
        LimitingFactor::Ase
    };
    Ok(QotResult {
        metric: MetricKind::Osnr,
        value_db: osnr,
        threshold_db,
        breakdown: Breakdown {
            loss_db: loss,
            signal_w: p_rx,
            ase_w: ase,
            nli_w: S::zero(),
            spans: 1,
            wss_stages: 0,
            wss_penalty_db: S::zero(),
            aging_db: margins.aging_db,
            b2b_snr_db: None,
            line_snr_db: None,
            osnr_01nm_db: Some(osnr + (plan.symbol_rate_baud / S::lit(12.5e9)).to_db()),
        },
        feasible,
        limiting,
    })
}

// ---------------------------------------------------------------------------
// MtC
// ---------------------------------------------------------------------------

/// One amplified fiber span.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span<S> {
    pub length_km: S,
    pub alpha_db_km: S,
    pub beta2_ps2_km: S,
    pub gamma_w_km: S,
}

impl<S: Scalar> Span<S> {
    pub fn new(length_km: S, fiber: &FiberParams) -> Self {
        Span {
            length_km,
            alpha_db_km: S::lit(fiber.alpha_db_km),
            beta2_ps2_km: S::lit(fiber.beta2_ps2_km),
            gamma_w_km: S::lit(fiber.gamma_w_km),
        }
    }

    pub fn loss_db(&self) -> S {
        self.alpha_db_km * self.length_km
    }

    /// Power attenuation coefficient in 1/km.
    pub fn alpha_np(&self) -> S {
        self.alpha_db_km * S::LN_10() / S::lit(10.0)
    }
}

/// Amplified spans of a lightpath plus the number of WSS stages it crosses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanPlan<S> {
    pub spans: Vec<Span<S>>,
    pub wss_stages: usize,
}

impl<S: Scalar> SpanPlan<S> {
    /// `count` identical spans.
    pub fn uniform(count: usize, length_km: S, fiber: &FiberParams, wss_stages: usize) -> Self {
        SpanPlan { spans: vec![Span::new(length_km, fiber); count], wss_stages }
    }

    /// Cuts every link of `path` into `ceil(len / max_span_km)` equal spans.
    /// Each traversed link counts as one WSS stage.
    pub fn from_path(t: &Topology, path: &Path<f64>, max_span_km: f64) -> Self {
        let mut spans = Vec::new();
        for &li in &path.links {
            let link = t.link(li);
            let n = (link.length_km / max_span_km).ceil().max(1.0) as usize;
            let len = S::lit(link.length_km / n as f64);
            spans.extend(std::iter::repeat_n(Span::new(len, t.fiber_of(li)), n));
        }
        SpanPlan { spans, wss_stages: path.links.len() }
    }

    pub fn length_km(&self) -> S {
        self.spans.iter().fold(S::zero(), |a, s| a + s.length_km)
    }
}

/// A nonlinear-interference model: `P_NLI = eta · P_ch³` per span.
pub trait NliModel<S: Scalar>: Send + Sync {
    fn eta(&self, span: &Span<S>, plan: &MtcChannelPlan<S>) -> S;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GnVariant {
    /// asinh argument scaled by `N_ch^(2·R_s/Δf)`; accounts for the guard bands.
    NonNyquist,
    /// asinh argument from the full WDM bandwidth; assumes a gapless comb.
    Nyquist,
}

/// Closed-form incoherent GN coefficient with a fixed ISRS power tilt.
///
/// The tilt moves the channel under test by `−tilt · offset` dB (offset in THz
/// from the comb center) before the cubic law, so it scales eta by the cube of
/// the linear tilt and leaves the center channel untouched.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnClosedForm<S> {
    pub variant: GnVariant,
    pub isrs_tilt_db_per_thz: S,
}

impl<S: Scalar> Default for GnClosedForm<S> {
    fn default() -> Self {
        GnClosedForm { variant: GnVariant::NonNyquist, isrs_tilt_db_per_thz: S::lit(0.5) }
    }
}

impl<S: Scalar> GnClosedForm<S> {
    /// Linear power factor from the ISRS tilt at the channel under test.
    pub fn isrs_factor(&self, plan: &MtcChannelPlan<S>) -> S {
        (-(self.isrs_tilt_db_per_thz * plan.channel_offset_hz / S::lit(1e12))).from_db()
    }

    /// Coefficient without the ISRS factor.
    pub fn eta_untilted(&self, span: &Span<S>, plan: &MtcChannelPlan<S>) -> S {
        let gamma = span.gamma_w_km;
        if gamma == S::zero() {
            return S::zero();
        }
        let a = span.alpha_np();
        let l_eff = (S::one() - (-a * span.length_km).exp()) / a;
        let l_eff_a = S::one() / a;
        let rs = plan.symbol_rate_baud;
        let n = S::from_usize(plan.channels()).expect("channel count");
        let beta2 = span.beta2_ps2_km.abs() * S::lit(1e-24);
        let pi = S::PI();
        let c = S::lit(8.0 / 27.0) * gamma * gamma * l_eff * l_eff;
        let spread = match self.variant {
            GnVariant::NonNyquist => rs * rs * n.powf(S::lit(2.0) * rs / plan.spacing_hz),
            GnVariant::Nyquist => plan.bandwidth_hz * plan.bandwidth_hz,
        };
        let x = pi * pi / S::lit(2.0) * beta2 * l_eff_a * spread;
        if x < S::lit(1e-12) {
            // asinh(x)/x -> 1 as beta2 -> 0
            return c * pi / S::lit(2.0) * spread / (rs * rs);
        }
        c * x.asinh() / (pi * beta2 * l_eff_a * rs * rs)
    }
}

impl<S: Scalar> NliModel<S> for GnClosedForm<S> {
    fn eta(&self, span: &Span<S>, plan: &MtcChannelPlan<S>) -> S {
        let g = self.isrs_factor(plan);
        self.eta_untilted(span, plan) * g * g * g
    }
}

/// NLI power generated in one span at per-channel launch power `p_ch` (W).
pub fn nli_power_span<S: Scalar>(model: &dyn NliModel<S>, span: &Span<S>, plan: &MtcChannelPlan<S>, p_ch: S) -> S {
    model.eta(span, plan) * p_ch * p_ch * p_ch
}

/// Launch power maximizing single-span SNR: `(P_ASE / (2·eta))^(1/3)`.
pub fn optimal_launch_w<S: Scalar>(model: &dyn NliModel<S>, span: &Span<S>, plan: &MtcChannelPlan<S>, amp: &AmpModel<S>) -> S {
    let ase = ase_power(span.loss_db(), plan.symbol_rate_baud, amp.noise_figure_db, plan.channel_freq_hz());
    (ase / (S::lit(2.0) * model.eta(span, plan))).cbrt()
}

/// GSNR of a lightpath. Span noise terms are summed in sorted order so the
/// result does not depend on span order.
pub fn gsnr_path<S: Scalar>(
    spans: &SpanPlan<S>,
    plan: &MtcChannelPlan<S>,
    amp: &AmpModel<S>,
    margins: &MarginModel<S>,
    nli: &dyn NliModel<S>,
    threshold_db: S,
) -> QotResult<S> {
    let p = plan.launch_dbm.from_db() * S::lit(1e-3);
    let freq = plan.channel_freq_hz();
    let mut terms: Vec<(S, S)> = spans
        .spans
        .iter()
        .map(|s| {
            let ase = ase_power(s.loss_db(), plan.symbol_rate_baud, amp.noise_figure_db, freq);
            (ase, nli_power_span(nli, s, plan, p))
        })
        .collect();
    terms.sort_by(|x, y| {
        (x.0 + x.1)
            .partial_cmp(&(y.0 + y.1))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal))
    });
    let (ase, nli) = terms.iter().fold((S::zero(), S::zero()), |(a, n), t| (a + t.0, n + t.1));
    let loss = spans.spans.iter().fold(S::zero(), |a, s| a + s.loss_db());

    let inv_line = (ase + nli) / p;
    let inv_b2b = margins.b2b_snr_db.map_or(S::zero(), |d| S::one() / d.from_db());
    let wss = margins.wss.penalty_db(spans.wss_stages);
    let value = (S::one() / (inv_line + inv_b2b)).to_db() - margins.aging_db - wss;
    let feasible = value >= threshold_db;
    let limiting = if feasible {
        LimitingFactor::None
    } else if (S::one() / (inv_line + inv_b2b)).to_db() >= threshold_db {
        LimitingFactor::Margins
    } else {
        let ase_inv = ase / p;
        let nli_inv = nli / p;
        if inv_b2b >= ase_inv && inv_b2b >= nli_inv {
            LimitingFactor::Transceiver
        } else if nli_inv > ase_inv {
            LimitingFactor::Nli
        } else {
            LimitingFactor::Ase
        }
    };
    QotResult {
        metric: MetricKind::Gsnr,
        value_db: value,
        threshold_db,
        breakdown: Breakdown {
            loss_db: loss,
            signal_w: p,
            ase_w: ase,
            nli_w: nli,
            spans: spans.spans.len(),
            wss_stages: spans.wss_stages,
            wss_penalty_db: wss,
            aging_db: margins.aging_db,
            b2b_snr_db: margins.b2b_snr_db,
            line_snr_db: Some((S::one() / inv_line).to_db()),
            osnr_01nm_db: None,
        },
        feasible,
        limiting,
    }
}

/// Joint reach and QoT verdict for a catalog transceiver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachVerdict {
    pub feasible: bool,
    pub limiting: LimitingFactor,
}

pub fn reach_feasible<S: Scalar>(cat: &Catalog, transceiver: &str, path_km: f64, qot: &QotResult<S>) -> Result<ReachVerdict, QotError> {
    let entry = cat.lookup(transceiver)?;
    let within = entry.reach_km.is_none_or(|r| path_km <= r);
    Ok(match (within, qot.feasible) {
        (false, _) => ReachVerdict { feasible: false, limiting: LimitingFactor::Reach },
        (true, true) => ReachVerdict { feasible: true, limiting: LimitingFactor::None },
        (true, false) => ReachVerdict { feasible: false, limiting: qot.limiting },
    })
}

/// QoT settings used by the planner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QotConfig {
    pub atm: AtmChannelPlan<f64>,
    pub mtc: MtcChannelPlan<f64>,
    pub amp: AmpModel<f64>,
    pub margins: MarginModel<f64>,
    pub gn: GnClosedForm<f64>,
    pub max_span_km: f64,
}

impl Default for QotConfig {
    fn default() -> Self {
        QotConfig {
            atm: AtmChannelPlan::default(),
            mtc: MtcChannelPlan::default(),
            amp: AmpModel::default(),
            margins: MarginModel::default(),
            gn: GnClosedForm::default(),
            max_span_km: 80.0,
        }
    }
}

impl QotConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), QotError> {
        self.atm.validate()?;
        self.mtc.validate()?;
        self.margins.wss.validate()?;
        if !(self.amp.noise_figure_db > 0.0) {
            return Err(QotError::Config("noise figure must be > 0 dB".into()));
        }
        if !(self.max_span_km > 0.0) {
            return Err(QotError::Config("max_span_km must be > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn splitter_values() {
        assert_eq!(splitter_loss::<f64>(1).unwrap(), 0.0);
        assert!(close(splitter_loss::<f64>(4).unwrap(), 6.0206, 1e-4));
        assert!(close(splitter_loss::<f64>(8).unwrap(), 9.0309, 1e-4));
        assert!(splitter_loss::<f64>(0).is_err());
    }

    #[test]
    fn atm_loss_values() {
        let plan = AtmChannelPlan::<f64>::default();
        assert!(close(atm_total_loss(13.0, &plan, Scenario::PtP).unwrap(), 3.1, 1e-12));
        assert!(close(atm_total_loss(13.0, &plan, Scenario::PtMP).unwrap(), 9.1206, 1e-4));
        assert!(close(atm_total_loss(1e-9, &plan, Scenario::PtP).unwrap(), 0.5, 1e-9));
    }

    #[test]
    fn ase_zero_gain_and_linearity() {
        assert_eq!(ase_power(0.0f64, 27.95e9, 4.5, 193.4e12), 0.0);
        let a = ase_power(9.12f64, 27.95e9, 4.5, 193.4e12);
        let b = ase_power(9.12f64, 2.0 * 27.95e9, 4.5, 193.4e12);
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn unit_fanout_ptmp_equals_ptp() {
        let plan = AtmChannelPlan::<f64> { fanout: 1, ..Default::default() };
        let (amp, m) = (AmpModel::default(), MarginModel::default());
        let a = osnr_atm(13.0, &plan, &amp, &m, Scenario::PtP, 13.0).unwrap();
        let b = osnr_atm(13.0, &plan, &amp, &m, Scenario::PtMP, 13.0).unwrap();
        assert_eq!(a.value_db.to_bits(), b.value_db.to_bits());
    }

    #[test]
    fn wss_schedule_shape() {
        let w = WssSchedule::<f64>::default();
        assert_eq!(w.penalty_db(0), 0.0);
        assert!(close(w.penalty_db(1), 0.3, 1e-12));
        assert!(close(w.penalty_db(2), 1.0, 1e-12));
        assert!(close(w.penalty_db(12), 8.0, 1e-9));
        assert_eq!(w.penalty_db(40), 8.0);
        w.validate().unwrap();
        assert!(WssSchedule { table_db: vec![1.0, 0.5] }.validate().is_err());
    }

    #[test]
    fn zero_length_path_is_b2b_minus_margins() {
        let plan = MtcChannelPlan::<f64>::default();
        let r = gsnr_path(
            &SpanPlan { spans: vec![], wss_stages: 0 },
            &plan,
            &AmpModel::default(),
            &MarginModel::default(),
            &GnClosedForm::default(),
            20.0,
        );
        assert!(close(r.value_db, 35.0, 1e-12));
    }

    #[test]
    fn gamma_zero_has_no_nli() {
        let fiber = FiberParams { gamma_w_km: 0.0, ..Default::default() };
        let span = Span::<f64>::new(80.0, &fiber);
        assert_eq!(nli_power_span(&GnClosedForm::default(), &span, &MtcChannelPlan::default(), 1e-3), 0.0);
    }

    #[test]
    fn zero_dispersion_limit_is_continuous() {
        let plan = MtcChannelPlan::<f64>::default();
        let gn = GnClosedForm::<f64>::default();
        let at = |b2: f64| gn.eta(&Span::new(80.0, &FiberParams { beta2_ps2_km: b2, ..Default::default() }), &plan);
        let lim = at(0.0);
        let near = at(-1e-12);
        assert!(lim.is_finite() && lim > 0.0);
        assert!((near / lim - 1.0).abs() < 1e-6);
    }

    #[test]
    fn isrs_tilt_only_moves_off_center_channels() {
        let gn = GnClosedForm::<f64>::default();
        let span = Span::new(80.0, &FiberParams::default());
        let center = MtcChannelPlan::<f64>::default();
        let high = MtcChannelPlan { channel_offset_hz: 2e12, ..center };
        assert_eq!(gn.eta(&span, &center), gn.eta_untilted(&span, &center));
        let ratio = gn.eta(&span, &high) / gn.eta(&span, &center);
        assert!(close(ratio.to_db(), -3.0, 1e-9));
    }

    #[test]
    fn f32_instantiation_agrees() {
        let a = osnr_atm(13.0f32, &AtmChannelPlan::default(), &AmpModel::default(), &MarginModel::default(), Scenario::PtMP, 13.0).unwrap();
        let b = osnr_atm(13.0f64, &AtmChannelPlan::default(), &AmpModel::default(), &MarginModel::default(), Scenario::PtMP, 13.0).unwrap();
        assert!((a.value_db as f64 - b.value_db).abs() < 1e-3);
    }
}
