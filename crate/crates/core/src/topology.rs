//! Per-instant connectivity graph `G(t_k)` with link attributes and the
//! carrier-sense relation between UAVs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::channel::{self, RadioParams, RateTable};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::mobility::Vec3;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAttr {
    /// Meters, after the coincident-node clamp.
    pub distance: f64,
    pub snr_db: f64,
    /// bit/s
    pub phy_rate: f64,
}

/// Normalizers for one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConstants {
    /// Longest usable link, meters (1 m when there are no links).
    pub d_max: f64,
    /// Largest active-neighbor count of any node.
    pub gamma_max: usize,
}

/// Sentinel `d_max` for snapshots without links.
pub const NO_LINK_D_MAX: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct TopologySnapshot {
    time: f64,
    positions: Vec<Vec3>,
    gateway: NodeId,
    sources: BTreeSet<NodeId>,
    forwarding: BTreeSet<NodeId>,
    links: BTreeMap<(NodeId, NodeId), LinkAttr>,
    out_links: Vec<Vec<NodeId>>,
    cs: Vec<Vec<bool>>,
}

impl TopologySnapshot {
    /// Builds `G(t)` from node positions. Links are exactly the pairs whose
    /// SNR clears the threshold; carrier-sense adjacency follows
    /// [`channel::in_carrier_sense`].
    pub fn build(
        time: f64,
        positions: Vec<Vec3>,
        gateway: NodeId,
        sources: &BTreeSet<NodeId>,
        forwarding: &BTreeSet<NodeId>,
        radio: &RadioParams,
        rates: &RateTable,
    ) -> Result<Self> {
        let n = positions.len();
        if n < 2 {
            return Err(Error::InvalidParam(format!("a snapshot needs at least 2 nodes, got {n}")));
        }
        radio.validate()?;
        check_id(gateway, n, "gateway")?;
        for &s in sources {
            check_id(s, n, "source")?;
            if s == gateway {
                return Err(Error::InvalidParam(format!("gateway {gateway} cannot be a source")));
            }
        }
        for &f in forwarding {
            check_id(f, n, "forwarding node")?;
        }

        let mut links = BTreeMap::new();
        let mut out_links = vec![Vec::new(); n];
        let mut cs = vec![vec![false; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let distance = channel::effective_distance(positions[i].distance(positions[j]));
                if channel::in_carrier_sense(distance, radio) {
                    cs[i][j] = true;
                    cs[j][i] = true;
                }
                if channel::link_usable(distance, radio) {
                    let snr_db = channel::snr_db(distance, radio)?;
                    let attr = LinkAttr {
                        distance,
                        snr_db,
                        phy_rate: channel::phy_rate(snr_db, rates),
                    };
                    links.insert((i, j), attr);
                    links.insert((j, i), attr);
                    out_links[i].push(j);
                    out_links[j].push(i);
                }
            }
        }
        for adj in &mut out_links {
            adj.sort_unstable();
        }

        Ok(Self {
            time,
            positions,
            gateway,
            sources: sources.clone(),
            forwarding: forwarding.clone(),
            links,
            out_links,
            cs,
        })
    }

    /// Same geometry with a different set of relaying nodes.
    pub fn with_forwarding(&self, forwarding: BTreeSet<NodeId>) -> Result<Self> {
        for &f in &forwarding {
            check_id(f, self.node_count(), "forwarding node")?;
        }
        Ok(Self {
            forwarding,
            ..self.clone()
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn gateway(&self) -> NodeId {
        self.gateway
    }

    pub fn sources(&self) -> &BTreeSet<NodeId> {
        &self.sources
    }

    pub fn forwarding(&self) -> &BTreeSet<NodeId> {
        &self.forwarding
    }

    pub fn is_active(&self, node: NodeId) -> bool {
        self.sources.contains(&node) || self.forwarding.contains(&node)
    }

    pub fn link(&self, from: NodeId, to: NodeId) -> Option<&LinkAttr> {
        self.links.get(&(from, to))
    }

    pub fn has_link(&self, from: NodeId, to: NodeId) -> bool {
        self.links.contains_key(&(from, to))
    }

    /// Directed links in `(from, to)` order.
    pub fn links(&self) -> impl Iterator<Item = ((NodeId, NodeId), &LinkAttr)> {
        self.links.iter().map(|(&k, v)| (k, v))
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Heads of the usable links leaving `node`, ascending.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.out_links[node]
    }

    pub fn cs_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.cs[a][b]
    }

    /// Active nodes (sources or relays) in carrier-sense range of `j`,
    /// not counting `j` itself or `exclude`.
    pub fn active_neighbor_count(&self, j: NodeId, exclude: NodeId) -> Result<usize> {
        let n = self.node_count();
        check_range(j, n)?;
        check_range(exclude, n)?;
        if j == exclude {
            return Err(Error::InvalidParam(format!("excluded node equals node {j}")));
        }
        Ok(self.count_active_around(j, Some(exclude)))
    }

    fn count_active_around(&self, j: NodeId, exclude: Option<NodeId>) -> usize {
        (0..self.node_count())
            .filter(|&u| u != j && Some(u) != exclude && self.cs[u][j] && self.is_active(u))
            .count()
    }

    pub fn norm_constants(&self) -> NormConstants {
        let d_max = self
            .links
            .values()
            .map(|l| l.distance)
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))))
            .unwrap_or(NO_LINK_D_MAX);
        let gamma_max = (0..self.node_count())
            .map(|j| self.count_active_around(j, None))
            .max()
            .unwrap_or(0);
        NormConstants { d_max, gamma_max }
    }

    /// Diagnostic text dump with a fixed line order.
    pub fn dump(&self) -> String {
        let ids = |set: &BTreeSet<NodeId>| {
            set.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        };
        let mut out = String::new();
        let _ = writeln!(out, "t {}", sig9(self.time));
        let _ = writeln!(out, "nodes {} gateway {}", self.node_count(), self.gateway);
        let _ = writeln!(out, "sources {}", ids(&self.sources));
        let _ = writeln!(out, "forwarding {}", ids(&self.forwarding));
        for (i, p) in self.positions.iter().enumerate() {
            let _ = writeln!(out, "node {i} {} {} {}", sig9(p.x), sig9(p.y), sig9(p.z));
        }
        for ((i, j), l) in &self.links {
            let _ = writeln!(
                out,
                "link {i} {j} distance {} snr {} rate {}",
                sig9(l.distance),
                sig9(l.snr_db),
                sig9(l.phy_rate)
            );
        }
        for i in 0..self.node_count() {
            for j in (i + 1)..self.node_count() {
                if self.cs[i][j] {
                    let _ = writeln!(out, "cs {i} {j}");
                }
            }
        }
        out
    }
}

fn check_id(id: NodeId, n: usize, what: &str) -> Result<()> {
    if id < n {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("{what} {id} is not a node id (n = {n})")))
    }
}

fn check_range(id: NodeId, n: usize) -> Result<()> {
    if id < n {
        Ok(())
    } else {
        Err(Error::Range {
            what: "node id",
            message: format!("{id} >= {n}"),
        })
    }
}
