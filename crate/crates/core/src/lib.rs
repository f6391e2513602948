//! Planning engine for hierarchical IP-over-WDM access-metro networks.
//!
//! The crate covers the full planning chain for comparing three access-to-metro
//! (AtM) architectures: a gray-optics benchmark with standalone transponders,
//! point-to-point 100G ZR pluggables, and DSCM point-to-multipoint hubs. The
//! metro-to-core (MtC) mesh is identical in all three and is served by 400G ZR+
//! over ROADM-on-a-blade nodes.
//!
//! Modules, bottom-up:
//!
//! - [`model`]: topology data model, document format and validation.
//! - [`synth`]: seeded generation of reference topologies and geotype variants.
//! - [`traffic`]: demand synthesis, compound growth, channelization, CO aggregation.
//! - [`routing`]: shortest paths, link-and-node-disjoint pairs, dual homing.
//! - [`qot`]: OSNR for access feeders, GN-model GSNR for metro lightpaths.
//! - [`dimensioning`]: equipment placement per scenario and year.
//! - [`ledger`]: equipment catalog, cost and power accounting.
//! - [`study`]: multi-year, multi-scenario driver and report emission.
//!
//! The numerical kernels in [`qot`] and the graph algorithms in [`routing`] are
//! generic over their scalar type; the aliases below fix them to `f64`, which is
//! what the planning pipeline uses.

pub mod dimensioning;
pub mod ledger;
pub mod model;
pub mod qot;
pub mod routing;
pub mod scalar;
pub mod study;
pub mod synth;
pub mod traffic;

pub use scalar::{Scalar, Weight};

/// Scalar used by the planning pipeline.
pub type Real = f64;

pub type QotResult = qot::QotResult<Real>;
pub type AtmChannelPlan = qot::AtmChannelPlan<Real>;
pub type MtcChannelPlan = qot::MtcChannelPlan<Real>;
pub type AmpModel = qot::AmpModel<Real>;
pub type MarginModel = qot::MarginModel<Real>;
pub type SpanPlan = qot::SpanPlan<Real>;
pub type GnClosedForm = qot::GnClosedForm<Real>;
pub type Path = routing::Path<Real>;
pub type PathPair = routing::PathPair<Real>;
pub type Graph = routing::Graph<Real>;
