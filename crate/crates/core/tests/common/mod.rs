#![allow(dead_code)]

use std::collections::BTreeSet;

use i2r_core::evaluation::FlowSpec;
use i2r_core::{CostModel, MetricKind, NodeId, RadioParams, RateTable, TopologySnapshot, Vec3};
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gateway id in the reconstructed Fig. 2 layout.
pub const FIG2_GW: NodeId = 8;
/// FMAP 0 → 1 → 2 → GW.
pub const P1: [NodeId; 4] = [0, 1, 2, FIG2_GW];
/// FMAP 0 → 1 → 7 → GW.
pub const P1_VIA_7: [NodeId; 4] = [0, 1, 7, FIG2_GW];
/// FMAP 3 → 4 → 5 → 6 → GW.
pub const P2: [NodeId; 5] = [3, 4, 5, 6, FIG2_GW];

/// Eight FMAPs and a gateway (id 8) on the ground plane. FMAP 7 sits
/// within carrier-sense range of FMAPs 1 and 5; every link rate lies well
/// inside its rate band.
pub fn fig2_positions() -> Vec<Vec3> {
    vec![
        Vec3::new(-5.0, 97.0, 0.0),
        Vec3::new(0.0, 58.0, 0.0),
        Vec3::new(-10.95, 29.0, 0.0),
        Vec3::new(115.0, 50.0, 0.0),
        Vec3::new(85.0, 30.0, 0.0),
        Vec3::new(50.0, 10.0, 0.0),
        Vec3::new(30.0, -16.0, 0.0),
        Vec3::new(0.0, 25.0, 0.0),
        Vec3::new(0.0, 0.0, 0.0),
    ]
}

pub fn fig2_snapshot(sources: &[NodeId], forwarding: &[NodeId]) -> TopologySnapshot {
    TopologySnapshot::build(
        0.0,
        fig2_positions(),
        FIG2_GW,
        &sources.iter().copied().collect(),
        &forwarding.iter().copied().collect(),
        &RadioParams::default(),
        &RateTable::default(),
    )
    .unwrap()
}

/// Flows loaded far beyond any link capacity, so throughput equals the
/// bottleneck capacity.
pub fn saturating_flows(sources: &[NodeId]) -> Vec<FlowSpec> {
    sources.iter().map(|&s| FlowSpec::new(s, 1e12).unwrap()).collect()
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Random snapshot with 3..=`max_nodes` nodes in a 70 × 70 × 20 m box.
/// Roughly half the non-gateway nodes are sources and a third forward, so
/// interference counts vary from link to link.
pub fn random_snapshot(seed: u64, max_nodes: usize) -> TopologySnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3 + (rng.next_u64() % (max_nodes as u64 - 2)) as usize;
    let positions: Vec<Vec3> = (0..n)
        .map(|_| Vec3::new(70.0 * uniform(&mut rng), 70.0 * uniform(&mut rng), 20.0 * uniform(&mut rng)))
        .collect();
    let gateway = (rng.next_u64() % n as u64) as usize;
    let mut sources = BTreeSet::new();
    let mut forwarding = BTreeSet::new();
    for u in (0..n).filter(|&u| u != gateway) {
        if uniform(&mut rng) < 0.5 {
            sources.insert(u);
        } else if uniform(&mut rng) < 0.6 {
            forwarding.insert(u);
        }
    }
    TopologySnapshot::build(
        seed as f64,
        positions,
        gateway,
        &sources,
        &forwarding,
        &RadioParams::default(),
        &RateTable::default(),
    )
    .unwrap()
}

/// Every simple path from `src` to the gateway.
pub fn simple_paths(snap: &TopologySnapshot, src: NodeId) -> Vec<Vec<NodeId>> {
    fn walk(snap: &TopologySnapshot, path: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        let at = *path.last().unwrap();
        if at == snap.gateway() {
            out.push(path.clone());
            return;
        }
        for &next in snap.neighbors(at) {
            if !path.contains(&next) {
                path.push(next);
                walk(snap, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(snap, &mut vec![src], &mut out);
    out
}

/// Minimal path cost by exhaustive enumeration, with the lexicographically
/// smallest minimizer.
pub fn brute_force(model: &CostModel, snap: &TopologySnapshot, src: NodeId) -> Option<(f64, Vec<NodeId>)> {
    simple_paths(snap, src)
        .into_iter()
        .map(|p| (model.path_cost(snap, &p).unwrap(), p))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
}

pub fn model(kind: MetricKind, alpha: f64, snap: &TopologySnapshot) -> CostModel {
    CostModel::new(kind, alpha, snap).unwrap()
}

/// Compares path loss and SNR against the 50-digit reference table;
/// returns (rows checked, worst absolute error in dB).
pub fn friis_oracle() -> (usize, f64) {
    use i2r_core::channel::{path_loss_db, snr_db};
    let text = include_str!("../data/friis_oracle.csv");
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let radio = RadioParams {
            frequency_hz: v[1],
            bandwidth_hz: v[2],
            noise_figure_db: v[3],
            ..RadioParams::default()
        };
        worst = worst
            .max((path_loss_db(v[0], &radio).unwrap() - v[4]).abs())
            .max((snr_db(v[0], &radio).unwrap() - v[5]).abs());
        rows += 1;
    }
    (rows, worst)
}

/// Dijkstra against exhaustive enumeration on `count` random snapshots of
/// at most 7 nodes, every metric kind, every source. Costs must match
/// exactly; where every link cost is positive the route must also be the
/// lexicographically smallest minimizer. Returns (comparisons, failures).
pub fn dijkstra_oracle(count: u64) -> (usize, Vec<String>) {
    use i2r_core::routing::shortest_path;
    let mut checked = 0;
    let mut failures = Vec::new();
    for seed in 0..count {
        let snap = random_snapshot(seed, 7);
        for kind in MetricKind::ALL {
            for alpha in [0.0, 0.35, 1.0] {
                let m = model(kind, alpha, &snap);
                let positive = snap.links().all(|((i, j), _)| m.link_cost(&snap, i, j).unwrap() > 0.0);
                for src in 0..snap.node_count() {
                    let got = shortest_path(&m, &snap, src).unwrap();
                    let want = brute_force(&m, &snap, src);
                    checked += 1;
                    let ok = match (&got, &want) {
                        (None, None) => true,
                        (Some(r), Some((cost, path))) => {
                            r.cost == *cost
                                && m.path_cost(&snap, &r.nodes).unwrap() == r.cost
                                && (!positive || r.nodes == *path)
                        }
                        _ => false,
                    };
                    if !ok {
                        failures.push(format!("seed {seed} {kind} alpha {alpha} src {src}: {got:?} vs {want:?}"));
                    }
                }
            }
        }
    }
    (checked, failures)
}

/// Bounds on normalized terms and i2r costs, plus α = 0 agreeing with the
/// euclidean metric, over `count` random snapshots. Returns violations.
pub fn normalization_violations(count: u64) -> Vec<String> {
    use i2r_core::routing::shortest_path;
    let mut bad = Vec::new();
    for seed in 0..count {
        let snap = random_snapshot(1000 + seed, 14);
        let base = model(MetricKind::I2r, 0.5, &snap);
        let mut d_max_seen: f64 = 0.0;
        for ((i, j), _) in snap.links() {
            let d = base.distance_norm(&snap, i, j).unwrap();
            let g = base.gamma_norm(&snap, i, j).unwrap();
            d_max_seen = d_max_seen.max(d);
            if !(d > 0.0 && d <= 1.0) {
                bad.push(format!("seed {seed} d_norm({i},{j}) = {d}"));
            }
            if !(0.0..=1.0).contains(&g) {
                bad.push(format!("seed {seed} gamma_norm({i},{j}) = {g}"));
            }
            for alpha in [0.0, 0.2, 0.5, 0.8, 1.0] {
                let c = model(MetricKind::I2r, alpha, &snap).link_cost(&snap, i, j).unwrap();
                if !(0.0..=1.0).contains(&c) {
                    bad.push(format!("seed {seed} alpha {alpha} cost({i},{j}) = {c}"));
                }
            }
        }
        if snap.link_count() > 0 && d_max_seen != 1.0 {
            bad.push(format!("seed {seed} largest d_norm {d_max_seen}"));
        }
        let zero = model(MetricKind::I2r, 0.0, &snap);
        let euclid = model(MetricKind::Euclidean, 0.0, &snap);
        for src in 0..snap.node_count() {
            let a = shortest_path(&zero, &snap, src).unwrap().map(|r| r.nodes);
            let b = shortest_path(&euclid, &snap, src).unwrap().map(|r| r.nodes);
            if a != b {
                bad.push(format!("seed {seed} src {src}: alpha 0 {a:?} vs euclidean {b:?}"));
            }
        }
    }
    bad
}
