//! Gateway-rooted shortest paths, sequential flow assignment and
//! forwarding-table timelines.
//!
//! Paths are found with a single Dijkstra run from the gateway over reversed
//! links. Among equal-cost choices a node takes the smallest-id next hop that
//! was settled before it, so every node's path is its next hop's path plus
//! one link and the next-hop graph is always a tree.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::{self, Write as _};

use crate::channel::{FerCurve, RadioParams, RateTable};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::metrics::{AirtimeParams, CostModel, MetricKind};
use crate::mobility::{self, MobilityTrace};
use crate::topology::{NodeId, TopologySnapshot};

/// A path from a source to the gateway, both ends included.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub nodes: Vec<NodeId>,
    pub cost: f64,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NextHop {
    Node(NodeId),
    Unreachable,
}

impl fmt::Display for NextHop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NextHop::Node(n) => write!(f, "{n}"),
            NextHop::Unreachable => f.write_str("unreachable"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: NodeId,
}

impl Eq for HeapEntry {}

// Min-heap on (cost, node).
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path tree toward the gateway.
#[derive(Debug, Clone)]
pub struct GatewayTree {
    gateway: NodeId,
    cost: Vec<f64>,
    parent: Vec<Option<NodeId>>,
}

impl GatewayTree {
    /// Runs Dijkstra from the gateway. `pinned[u] = Some(w)` restricts `u`
    /// to the single outgoing link `u → w`. Links with non-finite cost are
    /// treated as absent.
    pub fn compute(
        model: &CostModel,
        snapshot: &TopologySnapshot,
        pinned: &[Option<NodeId>],
    ) -> Result<Self> {
        let n = snapshot.node_count();
        let gateway = snapshot.gateway();
        let mut cost = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<NodeId>> = vec![None; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        cost[gateway] = 0.0;
        heap.push(HeapEntry { cost: 0.0, node: gateway });

        while let Some(HeapEntry { cost: c, node: w }) = heap.pop() {
            if settled[w] {
                continue;
            }
            settled[w] = true;
            // links are symmetric in existence, so w's neighbors are exactly
            // the tails of links into w
            for &u in snapshot.neighbors(w) {
                if settled[u] || u == gateway {
                    continue;
                }
                if let Some(Some(p)) = pinned.get(u) {
                    if *p != w {
                        continue;
                    }
                }
                let link = model.link_cost(snapshot, u, w)?;
                if !link.is_finite() {
                    continue;
                }
                let candidate = link + c;
                let better = candidate < cost[u]
                    || (candidate == cost[u] && parent[u].is_some_and(|p| w < p));
                if better {
                    let improved = candidate < cost[u];
                    cost[u] = candidate;
                    parent[u] = Some(w);
                    if improved {
                        heap.push(HeapEntry { cost: candidate, node: u });
                    }
                }
            }
        }
        Ok(Self { gateway, cost, parent })
    }

    pub fn cost(&self, node: NodeId) -> f64 {
        self.cost[node]
    }

    pub fn next_hop(&self, node: NodeId) -> NextHop {
        if node == self.gateway {
            NextHop::Node(node)
        } else {
            self.parent[node].map_or(NextHop::Unreachable, NextHop::Node)
        }
    }

    pub fn route(&self, src: NodeId) -> Option<Route> {
        if src != self.gateway && self.parent[src].is_none() {
            return None;
        }
        let mut nodes = vec![src];
        let mut at = src;
        while at != self.gateway {
            at = self.parent[at]?;
            nodes.push(at);
        }
        Some(Route { nodes, cost: self.cost[src] })
    }

    pub fn table(&self, time: f64) -> ForwardingTable {
        ForwardingTable {
            time,
            next_hop: (0..self.cost.len()).map(|u| self.next_hop(u)).collect(),
        }
    }
}

/// Minimal-cost route from `src` to the gateway, or `None` if disconnected.
pub fn shortest_path(model: &CostModel, snapshot: &TopologySnapshot, src: NodeId) -> Result<Option<Route>> {
    if src >= snapshot.node_count() {
        return Err(Error::Range {
            what: "node id",
            message: format!("{src} >= {}", snapshot.node_count()),
        });
    }
    let tree = GatewayTree::compute(model, snapshot, &[])?;
    Ok(tree.route(src))
}

#[derive(Debug, Clone)]
pub struct FlowAssignment {
    /// Route per source in processing order; `None` when unreachable.
    pub routes: Vec<(NodeId, Option<Route>)>,
    /// Relays after all sources are placed (includes the snapshot's initial set).
    pub forwarding: BTreeSet<NodeId>,
    /// Snapshot carrying the final forwarding set.
    pub snapshot: TopologySnapshot,
    /// Forwarding table consistent with every assigned route.
    pub table: ForwardingTable,
}

impl FlowAssignment {
    pub fn route_of(&self, src: NodeId) -> Option<&Route> {
        self.routes
            .iter()
            .find(|(s, _)| *s == src)
            .and_then(|(_, r)| r.as_ref())
    }
}

/// Routes `sources` one at a time in the given order.
///
/// Before each search the activity sets reflect all sources plus the relays
/// of routes already placed; afterwards the new route's intermediate nodes
/// become relays. Nodes on placed routes keep their next hop for the rest of
/// the pass, so later flows merge into existing routes instead of splitting
/// them.
pub fn assign_flows(
    snapshot: &TopologySnapshot,
    model: &CostModel,
    sources: &[NodeId],
) -> Result<FlowAssignment> {
    let n = snapshot.node_count();
    let gateway = snapshot.gateway();
    let mut seen = BTreeSet::new();
    for &s in sources {
        if s >= n {
            return Err(Error::Range {
                what: "source id",
                message: format!("{s} >= {n}"),
            });
        }
        if s == gateway {
            return Err(Error::InvalidParam(format!("gateway {gateway} cannot be a source")));
        }
        if !seen.insert(s) {
            return Err(Error::InvalidParam(format!("source {s} listed twice")));
        }
    }

    let mut forwarding = snapshot.forwarding().clone();
    let mut pinned: Vec<Option<NodeId>> = vec![None; n];
    let mut routes = Vec::with_capacity(sources.len());
    let mut current = snapshot.clone();
    for &src in sources {
        current = current.with_forwarding(forwarding.clone())?;
        let bound = model.rebind(&current);
        let tree = GatewayTree::compute(&bound, &current, &pinned)?;
        let route = tree.route(src);
        if let Some(r) = &route {
            for hop in r.nodes.windows(2) {
                pinned[hop[0]] = Some(hop[1]);
            }
            forwarding.extend(r.nodes[1..r.nodes.len() - 1].iter().copied());
        }
        routes.push((src, route));
    }

    let final_snapshot = current.with_forwarding(forwarding.clone())?;
    let bound = model.rebind(&final_snapshot);
    let table = GatewayTree::compute(&bound, &final_snapshot, &pinned)?.table(snapshot.time());
    Ok(FlowAssignment {
        routes,
        forwarding,
        snapshot: final_snapshot,
        table,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardingTable {
    pub time: f64,
    pub next_hop: Vec<NextHop>,
}

impl ForwardingTable {
    pub fn gateway(&self) -> Option<NodeId> {
        self.next_hop
            .iter()
            .enumerate()
            .find(|(u, h)| **h == NextHop::Node(*u))
            .map(|(u, _)| u)
    }

    /// Follows next hops from `src`. `None` if unreachable or if the walk
    /// revisits a node.
    pub fn path_from(&self, src: NodeId) -> Option<Vec<NodeId>> {
        let mut path = vec![src];
        let mut visited = vec![false; self.next_hop.len()];
        let mut at = src;
        loop {
            if visited[at] {
                return None;
            }
            visited[at] = true;
            match self.next_hop[at] {
                NextHop::Unreachable => return None,
                NextHop::Node(next) if next == at => return Some(path),
                NextHop::Node(next) => {
                    path.push(next);
                    at = next;
                }
            }
        }
    }

    /// True iff the next-hop graph over reachable nodes is a tree rooted at
    /// `gateway`.
    pub fn is_gateway_tree(&self, gateway: NodeId) -> bool {
        if self.next_hop.get(gateway) != Some(&NextHop::Node(gateway)) {
            return false;
        }
        (0..self.next_hop.len()).all(|u| match self.next_hop[u] {
            NextHop::Unreachable => true,
            NextHop::Node(_) => self
                .path_from(u)
                .is_some_and(|p| p.last() == Some(&gateway)),
        })
    }

    fn same_entries(&self, other: &ForwardingTable) -> bool {
        self.next_hop == other.next_hop
    }
}

/// Everything needed to plan one timeline.
#[derive(Debug, Clone)]
pub struct PlanConfig {
    pub gateway: NodeId,
    /// Processing order of the sequential assignment.
    pub sources: Vec<NodeId>,
    pub metric: MetricKind,
    pub alpha: f64,
    pub radio: RadioParams,
    pub rates: RateTable,
    pub fer: FerCurve,
    pub airtime: AirtimeParams,
    /// Δt, seconds.
    pub sample_period: f64,
}

impl PlanConfig {
    pub fn new(gateway: NodeId, sources: Vec<NodeId>, metric: MetricKind, alpha: f64) -> Self {
        let radio = RadioParams::default();
        let fer = FerCurve::for_threshold(radio.snr_threshold_db);
        Self {
            gateway,
            sources,
            metric,
            alpha,
            radio,
            rates: RateTable::default(),
            fer,
            airtime: AirtimeParams::default(),
            sample_period: 1.0,
        }
    }
}

/// `t_k = k·Δt` for every `k` with `t_k ≤ duration`.
pub fn sample_times(duration: f64, period: f64) -> Result<Vec<f64>> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidParam(format!("sample period must be > 0, got {period}")));
    }
    // tolerate k·Δt overshooting `duration` by rounding only
    let slack = period * 1e-9;
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * period;
        if t > duration + slack {
            break;
        }
        times.push(t.min(duration));
        k += 1;
    }
    Ok(times)
}

/// Routing state at one sample instant.
#[derive(Debug, Clone)]
pub struct InstantPlan {
    pub time: f64,
    pub assignment: FlowAssignment,
}

pub fn plan_instant(trace: &MobilityTrace, config: &PlanConfig, t: f64) -> Result<InstantPlan> {
    let positions = mobility::sample_positions(trace, t)?;
    let sources: BTreeSet<NodeId> = config.sources.iter().copied().collect();
    let snapshot = TopologySnapshot::build(
        t,
        positions,
        config.gateway,
        &sources,
        &BTreeSet::new(),
        &config.radio,
        &config.rates,
    )?;
    let model = CostModel::new(config.metric, config.alpha, &snapshot)?
        .with_fer(config.fer)
        .with_airtime(config.airtime);
    let assignment = assign_flows(&snapshot, &model, &config.sources)?;
    Ok(InstantPlan { time: t, assignment })
}

/// Plans every sample instant of `trace`.
pub fn plan_all(trace: &MobilityTrace, config: &PlanConfig) -> Result<Vec<InstantPlan>> {
    sample_times(trace.duration(), config.sample_period)?
        .into_iter()
        .map(|t| plan_instant(trace, config, t))
        .collect()
}

/// Forwarding tables keyed by the instants at which they change.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForwardingTimeline {
    entries: Vec<ForwardingTable>,
}

impl ForwardingTimeline {
    /// Keeps a table only when it differs from the one before it.
    pub fn from_tables(tables: impl IntoIterator<Item = ForwardingTable>) -> Self {
        let mut entries: Vec<ForwardingTable> = Vec::new();
        for table in tables {
            if entries.last().is_none_or(|last| !last.same_entries(&table)) {
                entries.push(table);
            }
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[ForwardingTable] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn update_instants(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.time).collect()
    }

    /// The table in force at `t` (latest update at or before `t`).
    pub fn table_at(&self, t: f64) -> Option<&ForwardingTable> {
        let idx = self.entries.partition_point(|e| e.time <= t);
        idx.checked_sub(1).map(|i| &self.entries[i])
    }

    /// One block per update instant: a `t <time>` header, then
    /// `<node> -> <next hop>` lines in node order, blocks separated by a
    /// blank line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, table) in self.entries.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "t {}", sig9(table.time));
            for (u, hop) in table.next_hop.iter().enumerate() {
                let _ = writeln!(out, "{u} -> {hop}");
            }
        }
        out
    }
}

pub fn build_timeline(trace: &MobilityTrace, config: &PlanConfig) -> Result<ForwardingTimeline> {
    let plans = plan_all(trace, config)?;
    Ok(ForwardingTimeline::from_tables(
        plans.into_iter().map(|p| p.assignment.table),
    ))
}

/// Routes by source id, for callers that want a lookup.
pub fn routes_by_source(assignment: &FlowAssignment) -> BTreeMap<NodeId, Option<Route>> {
    assignment.routes.iter().cloned().collect()
}
