//! Analytic throughput/delay estimates under the TRCA conflict model, and
//! CDF/CCDF/percentile summaries over sample instants.
//!
//! Two active links conflict when they share a node or when any endpoint of
//! one is in carrier-sense range of any endpoint of the other. Each active
//! link gets an equal share of its PHY rate among itself and the active links
//! it conflicts with: `C(l) = rate(l) / (1 + deg(l))`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::channel::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::topology::{NodeId, TopologySnapshot};

pub type Link = (NodeId, NodeId);

/// Utilization at which a link is treated as saturated.
pub const SATURATION_RHO: f64 = 0.95;

pub const DEFAULT_PACKET_BYTES: u32 = 1400;

/// TRCA conflict between two usable links.
pub fn conflicts(snapshot: &TopologySnapshot, a: Link, b: Link) -> Result<bool> {
    for (i, j) in [a, b] {
        if !snapshot.has_link(i, j) {
            return Err(Error::MissingLink { from: i, to: j });
        }
    }
    Ok(conflict_unchecked(snapshot, a, b))
}

fn conflict_unchecked(snapshot: &TopologySnapshot, a: Link, b: Link) -> bool {
    if a == b {
        return false;
    }
    let (i, j) = a;
    let (k, l) = b;
    if i == k || i == l || j == k || j == l {
        return true;
    }
    [i, j]
        .into_iter()
        .any(|x| snapshot.cs_adjacent(x, k) || snapshot.cs_adjacent(x, l))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    vertices: Vec<Link>,
    edges: BTreeSet<(usize, usize)>,
}

impl ConflictGraph {
    /// Conflict graph over `links` (duplicates removed, sorted).
    pub fn build(snapshot: &TopologySnapshot, links: impl IntoIterator<Item = Link>) -> Result<Self> {
        let vertices: Vec<Link> = links.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        for &(i, j) in &vertices {
            if !snapshot.has_link(i, j) {
                return Err(Error::MissingLink { from: i, to: j });
            }
        }
        let mut edges = BTreeSet::new();
        for a in 0..vertices.len() {
            for b in (a + 1)..vertices.len() {
                if conflict_unchecked(snapshot, vertices[a], vertices[b]) {
                    edges.insert((a, b));
                }
            }
        }
        Ok(Self { vertices, edges })
    }

    pub fn vertices(&self) -> &[Link] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Link, Link)> + '_ {
        self.edges.iter().map(|&(a, b)| (self.vertices[a], self.vertices[b]))
    }

    pub fn index_of(&self, link: Link) -> Option<usize> {
        self.vertices.binary_search(&link).ok()
    }

    pub fn contains_edge(&self, a: Link, b: Link) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(x), Some(y)) => self.edges.contains(&(x.min(y), x.max(y))),
            _ => false,
        }
    }

    pub fn remove_edge(&mut self, a: Link, b: Link) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(x), Some(y)) => self.edges.remove(&(x.min(y), x.max(y))),
            _ => false,
        }
    }

    pub fn degree(&self, link: Link) -> usize {
        self.index_of(link).map_or(0, |x| {
            self.edges.iter().filter(|&&(a, b)| a == x || b == x).count()
        })
    }

    /// `1 +` number of conflicting active links.
    pub fn contention(&self, link: Link) -> usize {
        1 + self.degree(link)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub source: NodeId,
    /// Offered load, bit/s.
    pub load: f64,
    pub packet_bytes: u32,
}

impl FlowSpec {
    pub fn new(source: NodeId, load: f64) -> Result<Self> {
        if !(load > 0.0 && load.is_finite()) {
            return Err(Error::InvalidParam(format!("offered load must be > 0, got {load}")));
        }
        Ok(Self {
            source,
            load,
            packet_bytes: DEFAULT_PACKET_BYTES,
        })
    }

    pub fn packet_bits(&self) -> f64 {
        f64::from(self.packet_bytes) * 8.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowEstimate {
    pub source: NodeId,
    pub reachable: bool,
    /// bit/s
    pub throughput: f64,
    /// Smallest `C(l)` along the path (0 if unreachable).
    pub bottleneck_capacity: f64,
    /// End-to-end delay, seconds; capped at the saturation utilization.
    pub delay: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub time: f64,
    /// bit/s
    pub aggregate_throughput: f64,
    /// Mean delay of reachable, non-saturated flows (NaN if there are none).
    pub mean_delay: f64,
    pub saturated_flows: usize,
    pub unreachable_flows: usize,
    pub flows: Vec<FlowEstimate>,
}

/// Estimates per-flow throughput and delay for one snapshot.
///
/// `paths[k]` carries flow `k` from `flows[k].source` to the gateway, or is
/// `None` when the source is unreachable. Unreachable flows deliver nothing
/// and are left out of the delay average.
pub fn estimate(
    snapshot: &TopologySnapshot,
    paths: &[Option<Vec<NodeId>>],
    flows: &[FlowSpec],
) -> Result<ReportRow> {
    if paths.len() != flows.len() {
        return Err(Error::Consistency(format!(
            "{} paths for {} flows",
            paths.len(),
            flows.len()
        )));
    }
    for (path, flow) in paths.iter().zip(flows) {
        if let Some(p) = path {
            check_path(snapshot, p, flow.source)?;
        }
    }

    let mut carried: BTreeMap<Link, f64> = BTreeMap::new();
    for (path, flow) in paths.iter().zip(flows) {
        if let Some(p) = path {
            for hop in p.windows(2) {
                *carried.entry((hop[0], hop[1])).or_default() += flow.load;
            }
        }
    }
    let graph = ConflictGraph::build(snapshot, carried.keys().copied())?;
    let capacity = |l: Link| -> f64 {
        let rate = snapshot.link(l.0, l.1).map_or(0.0, |a| a.phy_rate);
        rate / graph.contention(l) as f64
    };

    let mut estimates = Vec::with_capacity(flows.len());
    for (path, flow) in paths.iter().zip(flows) {
        let Some(p) = path else {
            estimates.push(FlowEstimate {
                source: flow.source,
                reachable: false,
                throughput: 0.0,
                bottleneck_capacity: 0.0,
                delay: f64::NAN,
                saturated: false,
            });
            continue;
        };
        let mut bottleneck = f64::INFINITY;
        let mut delay = 0.0;
        let mut saturated = false;
        for hop in p.windows(2) {
            let l = (hop[0], hop[1]);
            let c = capacity(l);
            bottleneck = bottleneck.min(c);
            let rho = carried[&l] / c;
            if rho >= SATURATION_RHO {
                saturated = true;
            }
            let rho = rho.min(SATURATION_RHO);
            let distance = snapshot.link(l.0, l.1).map_or(0.0, |a| a.distance);
            delay += flow.packet_bits() / c / (1.0 - rho) + distance / SPEED_OF_LIGHT;
        }
        estimates.push(FlowEstimate {
            source: flow.source,
            reachable: true,
            throughput: flow.load.min(bottleneck),
            bottleneck_capacity: bottleneck,
            delay,
            saturated,
        });
    }

    let aggregate_throughput = estimates.iter().map(|f| f.throughput).sum();
    let calm: Vec<f64> = estimates
        .iter()
        .filter(|f| f.reachable && !f.saturated)
        .map(|f| f.delay)
        .collect();
    let mean_delay = if calm.is_empty() {
        f64::NAN
    } else {
        calm.iter().sum::<f64>() / calm.len() as f64
    };
    Ok(ReportRow {
        time: snapshot.time(),
        aggregate_throughput,
        mean_delay,
        saturated_flows: estimates.iter().filter(|f| f.saturated).count(),
        unreachable_flows: estimates.iter().filter(|f| !f.reachable).count(),
        flows: estimates,
    })
}

fn check_path(snapshot: &TopologySnapshot, path: &[NodeId], source: NodeId) -> Result<()> {
    if path.first() != Some(&source) {
        return Err(Error::Consistency(format!(
            "path {path:?} does not start at source {source}"
        )));
    }
    if path.last() != Some(&snapshot.gateway()) {
        return Err(Error::Consistency(format!(
            "path {path:?} does not end at gateway {}",
            snapshot.gateway()
        )));
    }
    if path.len() < 2 {
        return Err(Error::Consistency(format!("path {path:?} has no links")));
    }
    for hop in path.windows(2) {
        if !snapshot.has_link(hop[0], hop[1]) {
            return Err(Error::Consistency(format!(
                "path {path:?} uses missing link ({}, {})",
                hop[0], hop[1]
            )));
        }
    }
    Ok(())
}

/// Percentile levels reported in summaries.
pub const PERCENTILES: [f64; 3] = [25.0, 50.0, 75.0];

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    /// `(x, P[delay ≤ x])` over rows with a finite mean delay.
    pub delay_cdf: Vec<(f64, f64)>,
    /// `(x, P[throughput > x])`.
    pub throughput_ccdf: Vec<(f64, f64)>,
    /// Nearest-rank values at [`PERCENTILES`]; NaN when there are no samples.
    pub delay_percentiles: [f64; 3],
    pub throughput_percentiles: [f64; 3],
}

impl EvaluationReport {
    pub fn mean_throughput(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.aggregate_throughput))
    }

    /// Mean over rows with a finite delay.
    pub fn mean_delay(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.mean_delay).filter(|d| d.is_finite()))
    }

    pub fn mean_saturated_flows(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.saturated_flows as f64))
    }

    /// `t,aggregate_throughput_bps,mean_delay_s,saturated_flows`
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("t,aggregate_throughput_bps,mean_delay_s,saturated_flows\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                sig9(r.time),
                sig9(r.aggregate_throughput),
                sig9(r.mean_delay),
                r.saturated_flows
            );
        }
        out
    }

    pub fn delay_cdf_csv(&self) -> String {
        points_csv(&self.delay_cdf)
    }

    pub fn throughput_ccdf_csv(&self) -> String {
        points_csv(&self.throughput_ccdf)
    }

    /// Percentile table, one row per quantity.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("quantity,p25,p50,p75,mean\n");
        let mut row = |name: &str, p: &[f64; 3], m: f64| {
            let _ = writeln!(out, "{name},{},{},{},{}", sig9(p[0]), sig9(p[1]), sig9(p[2]), sig9(m));
        };
        row("delay_s", &self.delay_percentiles, self.mean_delay());
        row("throughput_bps", &self.throughput_percentiles, self.mean_throughput());
        out
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn points_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("x,F(x)\n");
    for &(x, f) in points {
        let _ = writeln!(out, "{},{}", sig9(x), sig9(f));
    }
    out
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical CDF at each distinct sample value.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let v = sorted(values.iter().copied());
    let n = v.len() as f64;
    let mut points = Vec::new();
    for (k, &x) in v.iter().enumerate() {
        if v.get(k + 1) != Some(&x) {
            points.push((x, (k + 1) as f64 / n));
        }
    }
    points
}

/// Empirical complementary CDF, `P[X > x]`, at each distinct sample value.
pub fn empirical_ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    empirical_cdf(values).into_iter().map(|(x, f)| (x, 1.0 - f)).collect()
}

/// Nearest-rank percentile: the smallest sample with at least `p`% of the
/// samples at or below it.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let v = sorted(values.iter().copied());
    if v.is_empty() {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

pub fn summarize(rows: Vec<ReportRow>) -> EvaluationReport {
    let delays: Vec<f64> = rows.iter().map(|r| r.mean_delay).collect();
    let throughputs: Vec<f64> = rows.iter().map(|r| r.aggregate_throughput).collect();
    let pct = |v: &[f64]| PERCENTILES.map(|p| percentile(v, p));
    EvaluationReport {
        delay_cdf: empirical_cdf(&delays),
        throughput_ccdf: empirical_ccdf(&throughputs),
        delay_percentiles: pct(&delays),
        throughput_percentiles: pct(&throughputs),
        rows,
    }
}
