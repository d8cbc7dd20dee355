//! Per-link routing costs.
//!
//! I2R blends the normalized link length with the normalized number of active
//! UAVs that the link's receiving node can hear:
//!
//! ```text
//! cost(i, j) = (1 − α)·d(i, j)/d_max + α·γ(j \ i)/γ_max
//! ```
//!
//! Summing this over the links of a path gives the path metric, which keeps
//! it additive (and therefore isotonic) for Dijkstra. The other kinds are
//! baselines.

use std::fmt;
use std::str::FromStr;

use crate::channel::FerCurve;
use crate::error::{Error, Result};
use crate::topology::{NodeId, NormConstants, TopologySnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricKind {
    I2r,
    Euclidean,
    Hop,
    Etx,
    Airtime,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::I2r,
        MetricKind::Euclidean,
        MetricKind::Hop,
        MetricKind::Etx,
        MetricKind::Airtime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::I2r => "i2r",
            MetricKind::Euclidean => "euclidean",
            MetricKind::Hop => "hop",
            MetricKind::Etx => "etx",
            MetricKind::Airtime => "airtime",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown metric `{s}`")))
    }
}

/// Constants of the airtime-like baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirtimeParams {
    /// Per-frame channel access and header overhead, seconds.
    pub overhead_s: f64,
    pub frame_bits: f64,
}

impl Default for AirtimeParams {
    fn default() -> Self {
        Self {
            overhead_s: 60.5e-6,
            frame_bits: 8192.0,
        }
    }
}

/// A metric bound to the normalization constants of one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub kind: MetricKind,
    pub alpha: f64,
    pub norm: NormConstants,
    pub fer: FerCurve,
    pub airtime: AirtimeParams,
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}

impl CostModel {
    pub fn new(kind: MetricKind, alpha: f64, snapshot: &TopologySnapshot) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            kind,
            alpha,
            norm: snapshot.norm_constants(),
            fer: FerCurve::default(),
            airtime: AirtimeParams::default(),
        })
    }

    pub fn with_fer(mut self, fer: FerCurve) -> Self {
        self.fer = fer;
        self
    }

    pub fn with_airtime(mut self, airtime: AirtimeParams) -> Self {
        self.airtime = airtime;
        self
    }

    /// Same metric with normalization recomputed for `snapshot`.
    pub fn rebind(&self, snapshot: &TopologySnapshot) -> Self {
        Self {
            norm: snapshot.norm_constants(),
            ..self.clone()
        }
    }

    pub fn distance_norm(&self, snapshot: &TopologySnapshot, i: NodeId, j: NodeId) -> Result<f64> {
        let link = snapshot.link(i, j).ok_or(Error::MissingLink { from: i, to: j })?;
        Ok(link.distance / self.norm.d_max)
    }

    /// `γ(j \ i) / γ_max`, defined as 0 when nobody is active.
    pub fn gamma_norm(&self, snapshot: &TopologySnapshot, i: NodeId, j: NodeId) -> Result<f64> {
        let count = snapshot.active_neighbor_count(j, i)?;
        if self.norm.gamma_max == 0 {
            Ok(0.0)
        } else {
            Ok(count as f64 / self.norm.gamma_max as f64)
        }
    }

    pub fn link_cost(&self, snapshot: &TopologySnapshot, i: NodeId, j: NodeId) -> Result<f64> {
        let link = *snapshot.link(i, j).ok_or(Error::MissingLink { from: i, to: j })?;
        let cost = match self.kind {
            MetricKind::I2r => {
                let d = self.distance_norm(snapshot, i, j)?;
                let g = self.gamma_norm(snapshot, i, j)?;
                (1.0 - self.alpha) * d + self.alpha * g
            }
            MetricKind::Euclidean => self.distance_norm(snapshot, i, j)?,
            MetricKind::Hop => 1.0,
            MetricKind::Etx => {
                let delivery = 1.0 - self.fer.frame_error_rate(link.snr_db);
                1.0 / (delivery * delivery)
            }
            MetricKind::Airtime => {
                let delivery = 1.0 - self.fer.frame_error_rate(link.snr_db);
                (self.airtime.overhead_s + self.airtime.frame_bits / link.phy_rate) / delivery
            }
        };
        Ok(cost)
    }

    /// Sum of link costs along `path` (source first, gateway last).
    ///
    /// The sum is accumulated from the gateway end, the same order in which
    /// the gateway-rooted search builds path costs, so the two agree exactly.
    pub fn path_cost(&self, snapshot: &TopologySnapshot, path: &[NodeId]) -> Result<f64> {
        let mut total = 0.0;
        for hop in path.windows(2).rev() {
            total += self.link_cost(snapshot, hop[0], hop[1])?;
        }
        Ok(total)
    }
}

pub fn link_cost(model: &CostModel, snapshot: &TopologySnapshot, i: NodeId, j: NodeId) -> Result<f64> {
    model.link_cost(snapshot, i, j)
}

pub fn path_cost(model: &CostModel, snapshot: &TopologySnapshot, path: &[NodeId]) -> Result<f64> {
    model.path_cost(snapshot, path)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::channel::{RadioParams, RateTable};
    use crate::mobility::Vec3;

    fn build(positions: Vec<Vec3>, sources: &[NodeId]) -> TopologySnapshot {
        TopologySnapshot::build(
            0.0,
            positions,
            0,
            &sources.iter().copied().collect(),
            &BTreeSet::new(),
            &RadioParams::default(),
            &RateTable::default(),
        )
        .unwrap()
    }

    /// Link 1→2 is 24 m, the longest link is 40 m, node 2 hears exactly one
    /// active node besides 1, and node 9 hears five.
    fn blend_fixture() -> TopologySnapshot {
        let positions = vec![
            Vec3::new(-1000.0, 0.0, 0.0), // 0 gw, isolated
            Vec3::new(0.0, 0.0, 0.0),     // 1
            Vec3::new(24.0, 0.0, 0.0),    // 2
            Vec3::new(24.0, 20.0, 0.0),   // 3 active, heard by 2
            Vec3::new(0.0, 1000.0, 0.0),  // 4 hub partner at 40 m
            Vec3::new(40.0, 1000.0, 0.0), // 5..9 cluster around 9
            Vec3::new(10.0, 1010.0, 0.0),
            Vec3::new(10.0, 990.0, 0.0),
            Vec3::new(10.0, 1000.0, 0.0),
            Vec3::new(20.0, 1000.0, 0.0), // 9
        ];
        build(positions, &[3, 4, 5, 6, 7, 8])
    }

    #[test]
    fn blend_fixture_normalizers() {
        let s = blend_fixture();
        let nc = s.norm_constants();
        assert_eq!(nc.d_max, 40.0);
        assert_eq!(nc.gamma_max, 5);
        assert_eq!(s.active_neighbor_count(2, 1).unwrap(), 1);
    }

    #[test]
    fn i2r_endpoints_and_midpoint() {
        let s = blend_fixture();
        let m = |alpha| CostModel::new(MetricKind::I2r, alpha, &s).unwrap();
        assert_eq!(m(1.0).link_cost(&s, 1, 2).unwrap(), 0.2);
        assert_eq!(m(0.0).link_cost(&s, 1, 2).unwrap(), 0.6);
        assert!((m(0.5).link_cost(&s, 1, 2).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn baseline_costs() {
        let s = blend_fixture();
        let cost = |kind| CostModel::new(kind, 0.3, &s).unwrap().link_cost(&s, 1, 2).unwrap();
        assert_eq!(cost(MetricKind::Hop), 1.0);
        assert_eq!(cost(MetricKind::Euclidean), 0.6);
        let link = *s.link(1, 2).unwrap();
        let p = 1.0 - FerCurve::default().frame_error_rate(link.snr_db);
        assert_eq!(cost(MetricKind::Etx), 1.0 / (p * p));
        assert_eq!(cost(MetricKind::Airtime), (60.5e-6 + 8192.0 / link.phy_rate) / p);
    }

    #[test]
    fn missing_link_is_an_error() {
        let s = blend_fixture();
        let m = CostModel::new(MetricKind::Hop, 0.0, &s).unwrap();
        assert!(matches!(m.link_cost(&s, 0, 1), Err(Error::MissingLink { from: 0, to: 1 })));
    }

    #[test]
    fn alpha_outside_unit_interval_is_rejected() {
        let s = blend_fixture();
        assert!(CostModel::new(MetricKind::I2r, 1.3, &s).is_err());
        assert!(CostModel::new(MetricKind::I2r, -0.1, &s).is_err());
        assert!(CostModel::new(MetricKind::I2r, f64::NAN, &s).is_err());
    }

    #[test]
    fn path_cost_is_additive() {
        let s = blend_fixture();
        let m = CostModel::new(MetricKind::I2r, 0.5, &s).unwrap();
        assert_eq!(m.path_cost(&s, &[1]).unwrap(), 0.0);
        assert_eq!(m.path_cost(&s, &[1, 2]).unwrap(), m.link_cost(&s, 1, 2).unwrap());
        let two = m.path_cost(&s, &[1, 2, 3]).unwrap();
        let sum = m.link_cost(&s, 1, 2).unwrap() + m.link_cost(&s, 2, 3).unwrap();
        assert!((two - sum).abs() < 1e-15);
    }

    #[test]
    fn metric_names_round_trip() {
        for k in MetricKind::ALL {
            assert_eq!(k.name().parse::<MetricKind>().unwrap(), k);
        }
        assert!("wcett".parse::<MetricKind>().is_err());
    }
}
