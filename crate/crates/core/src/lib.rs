//! Centralized, interference-aware routing for UAV flying multi-hop networks.
//!
//! The pipeline is trace → per-instant topology snapshots → per-link costs →
//! gateway-rooted shortest paths → forwarding timeline → contention-based
//! throughput/delay estimates. Every stage is a pure function of its inputs
//! so runs are reproducible from a seed.

pub mod channel;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod format;
pub mod metrics;
pub mod mobility;
pub mod routing;
pub mod topology;

pub use channel::{CarrierSenseMode, FerCurve, RadioParams, RateTable};
pub use error::{Error, Result};
pub use evaluation::{EvaluationReport, FlowSpec, ReportRow};
pub use metrics::{CostModel, MetricKind};
pub use mobility::{MobilityTrace, RwmParams, Vec3, Waypoint};
pub use routing::{ForwardingTable, ForwardingTimeline, NextHop, Route};
pub use topology::{NodeId, NormConstants, TopologySnapshot};
