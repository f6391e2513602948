//! QoT numbers checked against independent computations.

mod common;

use common::{eta_quadrature, gauss_legendre};
use ipowdm_core::model::{FiberParams, Scenario};
use ipowdm_core::qot::{
    ase_power, gsnr_path, osnr_atm, splitter_loss, AmpModel, AtmChannelPlan, GnClosedForm, GnVariant, MarginModel, MtcChannelPlan,
    NliModel, Span, SpanPlan, WssSchedule, PLANCK,
};

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn plan_with_channels(n: usize) -> MtcChannelPlan<f64> {
    MtcChannelPlan { bandwidth_hz: n as f64 * 75e9, ..MtcChannelPlan::default() }
}

#[test]
fn gauss_legendre_integrates_polynomials_exactly() {
    let (x, w) = gauss_legendre(10);
    let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
    assert!((int - 2.0 / 19.0).abs() < 1e-14);
    assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
}

#[test]
fn closed_form_eta_within_half_db_of_quadrature() {
    let n = 11;
    let span = Span::new(80.0, &FiberParams::default());
    let plan = plan_with_channels(n);
    let quad = eta_quadrature(80.0, n);
    // frozen from an independent numpy evaluation of the same integral
    assert!((quad - 264.03).abs() / 264.03 < 2e-3, "quadrature eta {quad}");

    let nn = GnClosedForm { variant: GnVariant::NonNyquist, isrs_tilt_db_per_thz: 0.0 };
    let err_nn = db(nn.eta(&span, &plan) / quad);
    assert!(err_nn.abs() < 0.5, "non-Nyquist closed form off by {err_nn} dB");

    let ny = GnClosedForm { variant: GnVariant::Nyquist, isrs_tilt_db_per_thz: 0.0 };
    let err_ny = db(ny.eta(&span, &plan) / quad);
    assert!(err_ny > err_nn.abs(), "gapless form should overestimate more on a 75/64 comb");
}

#[test]
fn reference_comb_eta() {
    // 80 channels, 80 km, center channel: no tilt at zero offset
    let eta = GnClosedForm::default().eta(&Span::new(80.0, &FiberParams::default()), &MtcChannelPlan::default());
    let a = 0.2 / (10.0 * std::f64::consts::E.log10());
    let l_eff = (1.0 - (-a * 80.0f64).exp()) / a;
    let (rs, b2) = (64e9, 21.7e-24);
    let arg = std::f64::consts::PI.powi(2) / 2.0 * b2 / a * rs * rs * 80f64.powf(2.0 * 64.0 / 75.0);
    let want = 8.0 / 27.0 * 1.3f64.powi(2) * l_eff * l_eff * arg.asinh() / (std::f64::consts::PI * b2 / a * rs * rs);
    assert!((eta - want).abs() / want < 1e-12);
    assert!((eta - 385.8).abs() < 0.5, "{eta}");
}

#[test]
fn isrs_tilt_scales_eta_by_cube_of_linear_tilt() {
    let span = Span::new(80.0, &FiberParams::default());
    let center = MtcChannelPlan::default();
    let edge = MtcChannelPlan { channel_offset_hz: 2e12, ..center };
    let gn = GnClosedForm::default();
    let ratio = gn.eta(&span, &edge) / gn.eta(&span, &center);
    assert!((ratio - 10f64.powf(-3.0 * 0.5 * 2.0 / 10.0)).abs() < 1e-12);
}

#[test]
fn dispersionless_limit_is_continuous() {
    let plan = MtcChannelPlan::default();
    let gn = GnClosedForm::<f64>::default();
    let mk = |b2: f64| Span::new(80.0, &FiberParams { beta2_ps2_km: b2, ..FiberParams::default() });
    let at_zero = gn.eta(&mk(0.0), &plan);
    let tiny = gn.eta(&mk(-1e-12), &plan);
    assert!(at_zero.is_finite() && at_zero > 0.0);
    assert!((tiny - at_zero).abs() / at_zero < 1e-6);
    let no_kerr = Span::new(80.0, &FiberParams { gamma_w_km: 0.0, ..FiberParams::default() });
    assert_eq!(gn.eta(&no_kerr, &plan), 0.0);
}

#[test]
fn ase_power_matches_hand_formula() {
    // G = 20 dB, B = 64 GBd, NF = 5 dB at 193.4 THz
    let want = (100.0 - 1.0) * 6.626_070_15e-34 * 193.4e12 * 64e9 * 10f64.powf(0.5);
    let got: f64 = ase_power(20.0, 64e9, 5.0, 193.4e12);
    assert!((got - want).abs() / want < 1e-14);
    assert_eq!(PLANCK, 6.626_070_15e-34);
}

#[test]
fn atm_osnr_reference_values() {
    let plan = AtmChannelPlan::default();
    let amp = AmpModel::default();
    let margins = MarginModel::default();
    let hnb = 6.626_070_15e-34 * 193.4e12 * 27.95e9;
    let nf = 10f64.powf(0.45);
    for (km, scen, n) in [(13.0, Scenario::PtMP, 4.0), (13.0, Scenario::PtP, 1.0), (1.0, Scenario::PtMP, 4.0), (80.0, Scenario::PtP, 1.0)] {
        let a_db: f64 = 0.2 * km + 0.5 + 10.0 * f64::log10(n);
        let g = 10f64.powf(a_db / 10.0);
        let p_rx = 1e-3 * 10f64.powf(-a_db / 10.0);
        let want = db(p_rx / ((g - 1.0) * hnb * nf));
        let r = osnr_atm(km, &plan, &amp, &margins, scen, 13.0).unwrap();
        assert!((r.value_db - want).abs() < 1e-9, "{km} {scen}: {} vs {want}", r.value_db);
        assert!((r.recompose_db() - r.value_db).abs() < 1e-9);
    }
    // frozen: worst PtMP feeder of the reference network
    let r = osnr_atm(13.0, &plan, &amp, &margins, Scenario::PtMP, 13.0).unwrap();
    assert!((r.value_db - 32.28).abs() < 0.01, "{}", r.value_db);
    assert!(r.feasible);
}

#[test]
fn splitter_loss_values() {
    let l4: f64 = splitter_loss(4).unwrap();
    assert!((l4 - 6.0206).abs() < 1e-6);
    assert_eq!(splitter_loss::<f64>(1).unwrap(), 0.0);
    assert!((splitter_loss::<f64>(8).unwrap() - 10.0 * 8f64.log10()).abs() < 1e-12);
    assert!(splitter_loss::<f64>(0).is_err());
}

#[test]
fn doubling_identical_spans_costs_exactly_3_01_db() {
    let bare = MarginModel { aging_db: 0.0, b2b_snr_db: None, wss: WssSchedule { table_db: vec![0.0] } };
    let plan = MtcChannelPlan::default();
    let amp = AmpModel::default();
    let gn = GnClosedForm::default();
    let fp = FiberParams::default();
    let one = gsnr_path(&SpanPlan::uniform(1, 70.0, &fp, 0), &plan, &amp, &bare, &gn, 0.0);
    let two = gsnr_path(&SpanPlan::uniform(2, 70.0, &fp, 0), &plan, &amp, &bare, &gn, 0.0);
    let d = one.value_db - two.value_db;
    assert!((d - 10.0 * 2f64.log10()).abs() < 1e-12, "{d}");
    assert!((d - 3.0103).abs() < 1e-4);
}

#[test]
fn zero_length_path_is_b2b_minus_aging() {
    let r = gsnr_path(
        &SpanPlan::<f64> { spans: vec![], wss_stages: 0 },
        &MtcChannelPlan::default(),
        &AmpModel::default(),
        &MarginModel::default(),
        &GnClosedForm::default(),
        17.0,
    );
    assert!((r.value_db - 35.0).abs() < 1e-12);
}

#[test]
fn wss_schedule_defaults() {
    let w = WssSchedule::<f64>::default();
    assert_eq!(w.penalty_db(0), 0.0);
    assert!((w.penalty_db(1) - 0.3).abs() < 1e-12);
    assert!((w.penalty_db(3) - 1.7).abs() < 1e-12);
    assert_eq!(w.penalty_db(12), 8.0);
    assert_eq!(w.penalty_db(40), 8.0);
}

#[test]
fn single_precision_tracks_double() {
    let p32 = AtmChannelPlan::<f32>::default();
    let p64 = AtmChannelPlan::<f64>::default();
    for km in [0.5f32, 5.0, 13.0, 40.0] {
        let a = osnr_atm(km, &p32, &AmpModel::default(), &MarginModel::default(), Scenario::PtMP, 13.0).unwrap();
        let b = osnr_atm(km as f64, &p64, &AmpModel::default(), &MarginModel::default(), Scenario::PtMP, 13.0).unwrap();
        assert!((a.value_db as f64 - b.value_db).abs() < 1e-3);
    }
    let fp = FiberParams::default();
    let s32 = gsnr_path(
        &SpanPlan::<f32>::uniform(4, 60.0, &fp, 2),
        &MtcChannelPlan::default(),
        &AmpModel::default(),
        &MarginModel::default(),
        &GnClosedForm::default(),
        17.0,
    );
    let s64 = gsnr_path(
        &SpanPlan::<f64>::uniform(4, 60.0, &fp, 2),
        &MtcChannelPlan::default(),
        &AmpModel::default(),
        &MarginModel::default(),
        &GnClosedForm::default(),
        17.0,
    );
    assert!((s32.value_db as f64 - s64.value_db).abs() < 1e-3);
}
