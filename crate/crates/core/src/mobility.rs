//! Node trajectories: waypoint traces, seeded 3D random-waypoint generation
//! and position sampling.
//!
//! Trace text format, one node per line, repeating `t x y z` groups:
//!
//! ```text
//! 0 0 0 0 10 80 80 25
//! 0 5 0 10
//! ```

use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Point at fraction `f` of the way from `self` to `other`.
    pub fn lerp(self, other: Vec3, f: f64) -> Vec3 {
        self + (other - self) * f
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub time: f64,
    pub position: Vec3,
}

impl Waypoint {
    pub fn new(time: f64, position: Vec3) -> Self {
        Self { time, position }
    }
}

/// What a node does outside the time span covered by its own waypoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Hover at the first/last waypoint.
    #[default]
    Hold,
    /// Sampling outside the node's waypoint span is an error.
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    nodes: Vec<Vec<Waypoint>>,
    duration: f64,
}

impl MobilityTrace {
    /// Validates and builds a trace.
    pub fn new(nodes: Vec<Vec<Waypoint>>, duration: f64) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParam(format!(
                "a trace needs at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::InvalidParam(format!("invalid trace duration {duration}")));
        }
        for (node, wps) in nodes.iter().enumerate() {
            validate_waypoints(node, wps, duration)?;
        }
        Ok(Self { nodes, duration })
    }

    /// Builds a trace whose duration is the latest waypoint time.
    pub fn from_waypoints(nodes: Vec<Vec<Waypoint>>) -> Result<Self> {
        let duration = nodes
            .iter()
            .filter_map(|wps| wps.last())
            .map(|w| w.time)
            .fold(0.0, f64::max);
        Self::new(nodes, duration)
    }

    /// A trace where every node hovers at a fixed position for `duration`.
    /// Each node gets a closing waypoint at `duration` so the text form
    /// keeps the duration.
    pub fn stationary(positions: &[Vec3], duration: f64) -> Result<Self> {
        let nodes = positions
            .iter()
            .map(|&p| {
                let mut wps = vec![Waypoint::new(0.0, p)];
                if duration > 0.0 {
                    wps.push(Waypoint::new(duration, p));
                }
                wps
            })
            .collect();
        Self::new(nodes, duration)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn waypoints(&self, node: usize) -> &[Waypoint] {
        &self.nodes[node]
    }

    pub fn nodes(&self) -> &[Vec<Waypoint>] {
        &self.nodes
    }

    pub fn position(&self, node: usize, t: f64, boundary: Boundary) -> Result<Vec3> {
        let wps = self.nodes.get(node).ok_or_else(|| Error::Range {
            what: "node id",
            message: format!("{node} >= {}", self.nodes.len()),
        })?;
        interpolate(wps, t, boundary).ok_or_else(|| Error::Range {
            what: "sample time",
            message: format!(
                "t={t} outside waypoints [{}, {}] of node {node}",
                wps[0].time,
                wps[wps.len() - 1].time
            ),
        })
    }

    /// Serializes in the one-line-per-node trace format. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MobilityTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for wps in &self.nodes {
            let mut first = true;
            for w in wps {
                if !first {
                    f.write_str(" ")?;
                }
                first = false;
                write!(f, "{} {} {} {}", w.time, w.position.x, w.position.y, w.position.z)?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

fn validate_waypoints(node: usize, wps: &[Waypoint], duration: f64) -> Result<()> {
    let invalid = |message: String| Error::Validation { node, message };
    if wps.is_empty() {
        return Err(invalid("no waypoints".into()));
    }
    for (k, w) in wps.iter().enumerate() {
        let p = w.position;
        if !(w.time.is_finite() && p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(invalid(format!("waypoint {k} is not finite")));
        }
        if w.time < 0.0 {
            return Err(invalid(format!("waypoint {k} has negative time {}", w.time)));
        }
        if w.time > duration {
            return Err(invalid(format!(
                "waypoint {k} at t={} exceeds duration {duration}",
                w.time
            )));
        }
        if k > 0 && w.time <= wps[k - 1].time {
            return Err(invalid(format!(
                "waypoint times not strictly increasing at index {k} ({} after {})",
                w.time,
                wps[k - 1].time
            )));
        }
    }
    Ok(())
}

fn interpolate(wps: &[Waypoint], t: f64, boundary: Boundary) -> Option<Vec3> {
    let first = wps.first()?;
    let last = wps.last()?;
    if t < first.time {
        return (boundary == Boundary::Hold).then_some(first.position);
    }
    if t >= last.time {
        if t > last.time && boundary == Boundary::Strict {
            return None;
        }
        return Some(last.position);
    }
    // first waypoint strictly after t; 1 <= idx < len here
    let idx = wps.partition_point(|w| w.time <= t);
    let (a, b) = (wps[idx - 1], wps[idx]);
    if t == a.time {
        return Some(a.position);
    }
    let f = (t - a.time) / (b.time - a.time);
    Some(a.position.lerp(b.position, f))
}

/// Parses the trace text format. Blank lines are skipped; node `k` is the
/// `k`-th non-blank line.
pub fn parse_trace(text: &str) -> Result<MobilityTrace> {
    let mut nodes = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = line_idx + 1;
        let mut values = Vec::new();
        for (column, token) in tokens_with_columns(line) {
            let v: f64 = token.parse().map_err(|_| Error::Parse {
                line: line_no,
                column,
                message: format!("`{token}` is not a number"),
            })?;
            values.push(v);
        }
        if values.len() % 4 != 0 {
            return Err(Error::Parse {
                line: line_no,
                column: line.chars().count() + 1,
                message: format!(
                    "{} values do not form complete `t x y z` groups",
                    values.len()
                ),
            });
        }
        let wps = values
            .chunks_exact(4)
            .map(|g| Waypoint::new(g[0], Vec3::new(g[1], g[2], g[3])))
            .collect();
        nodes.push(wps);
    }
    MobilityTrace::from_waypoints(nodes)
}

/// Whitespace-separated tokens paired with their 1-based character column.
fn tokens_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let token = &tail[..len];
        let column = line[..offset + start].chars().count() + 1;
        offset += start + len;
        rest = &tail[len..];
        Some((column, token))
    })
}

/// Parameters of the 3D random-waypoint model.
#[derive(Debug, Clone, PartialEq)]
pub struct RwmParams {
    /// Box extents in meters; positions lie in `[0, x] × [0, y] × [0, z]`.
    pub extents: Vec3,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Hover time at each destination, seconds.
    pub pause: f64,
    pub duration: f64,
    pub node_count: usize,
    pub seed: u64,
}

impl Default for RwmParams {
    fn default() -> Self {
        Self {
            extents: Vec3::new(80.0, 80.0, 25.0),
            speed_min: 0.5,
            speed_max: 3.0,
            pause: 0.0,
            duration: 160.0,
            node_count: 21,
            seed: 0,
        }
    }
}

impl RwmParams {
    pub fn validate(&self) -> Result<()> {
        let e = self.extents;
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0 && e.x.is_finite() && e.y.is_finite() && e.z.is_finite()) {
            return Err(Error::InvalidParam(format!("box extents must be positive, got {e:?}")));
        }
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max && self.speed_max.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "need 0 < speed_min <= speed_max, got {} and {}",
                self.speed_min, self.speed_max
            )));
        }
        if !(self.pause >= 0.0 && self.pause.is_finite()) {
            return Err(Error::InvalidParam(format!("pause must be >= 0, got {}", self.pause)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "duration must be > 0, got {}",
                self.duration
            )));
        }
        if self.node_count < 2 {
            return Err(Error::InvalidParam(format!(
                "need at least 2 nodes, got {}",
                self.node_count
            )));
        }
        Ok(())
    }
}

/// Uniform draw in `[0, 1)` from the top 53 bits of one 64-bit output.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn clamp_to_box(p: Vec3, e: Vec3) -> Vec3 {
    Vec3::new(p.x.clamp(0.0, e.x), p.y.clamp(0.0, e.y), p.z.clamp(0.0, e.z))
}

/// Generates a random-waypoint trace with ChaCha8 seeded from `params.seed`.
///
/// Nodes are generated in id order from one stream. Each node draws its start
/// position (x, y, z), then per leg the destination (x, y, z) followed by the
/// speed. The final leg (or pause) is cut at `duration`, so every node has a
/// waypoint at exactly `t = duration`.
pub fn generate_rwm(params: &RwmParams) -> Result<MobilityTrace> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let e = params.extents;
    let duration = params.duration;
    let draw_point =
        |rng: &mut ChaCha8Rng| Vec3::new(unit(rng) * e.x, unit(rng) * e.y, unit(rng) * e.z);

    let mut nodes = Vec::with_capacity(params.node_count);
    for _ in 0..params.node_count {
        let mut pos = draw_point(&mut rng);
        let mut t = 0.0;
        let mut wps = vec![Waypoint::new(0.0, pos)];
        while t < duration {
            let dest = draw_point(&mut rng);
            let speed = (params.speed_min + unit(&mut rng) * (params.speed_max - params.speed_min))
                .min(params.speed_max);
            let dist = pos.distance(dest);
            if dist == 0.0 {
                continue;
            }
            let travel = dist / speed;
            if t + travel >= duration {
                let f = (duration - t) / travel;
                let end = if f >= 1.0 { dest } else { clamp_to_box(pos.lerp(dest, f), e) };
                wps.push(Waypoint::new(duration, end));
                break;
            }
            t += travel;
            pos = dest;
            wps.push(Waypoint::new(t, pos));
            if params.pause > 0.0 {
                let resume = (t + params.pause).min(duration);
                wps.push(Waypoint::new(resume, pos));
                t = resume;
            }
        }
        nodes.push(wps);
    }
    MobilityTrace::new(nodes, duration)
}

/// Positions of all nodes at `t`, holding the first/last waypoint outside
/// each node's span.
pub fn sample_positions(trace: &MobilityTrace, t: f64) -> Result<Vec<Vec3>> {
    sample_positions_with(trace, t, Boundary::Hold)
}

pub fn sample_positions_with(trace: &MobilityTrace, t: f64, boundary: Boundary) -> Result<Vec<Vec3>> {
    if !(t >= 0.0 && t <= trace.duration) {
        return Err(Error::Range {
            what: "sample time",
            message: format!("t={t} not in [0, {}]", trace.duration),
        });
    }
    (0..trace.node_count())
        .map(|node| trace.position(node, t, boundary))
        .collect()
}
