//! Planar/spatial primitives, restricted airspace (RAS) and routing graphs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LAMBDA2: f64 = 0.3363788020;
pub const LAMBDA3: f64 = 0.2980450507;

/// Half-width of the clipping box used to slice RAS footprints.
const FOOTPRINT_BOUND: f64 = 1.0e7;
const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("no path between the requested points")]
    NoPath,
    #[error("invalid RAS {id}: {reason}")]
    InvalidRas { id: String, reason: String },
    #[error("invalid road graph: {0}")]
    InvalidGraph(String),
    #[error("node {0} is not in the graph")]
    UnknownNode(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn sub(self, o: Point2) -> [f64; 2] {
        [self.x - o.x, self.y - o.y]
    }

    pub fn offset(self, v: [f64; 2], s: f64) -> Point2 {
        Point2::new(self.x + s * v[0], self.y + s * v[1])
    }

    pub fn with_z(self, z: f64) -> Point3 {
        Point3::new(self.x, self.y, z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConstants {
    pub lambda2: f64,
    pub lambda3: f64,
}

impl Default for NormConstants {
    fn default() -> Self {
        Self {
            lambda2: LAMBDA2,
            lambda3: LAMBDA3,
        }
    }
}

impl NormConstants {
    pub fn l2_2d(&self, v: [f64; 2]) -> f64 {
        let (ax, ay) = (v[0].abs(), v[1].abs());
        self.lambda2 * (ax + ay) + (1.0 - self.lambda2) * ax.max(ay)
    }

    pub fn l2_3d(&self, v: [f64; 3]) -> f64 {
        let (ax, ay, az) = (v[0].abs(), v[1].abs(), v[2].abs());
        self.lambda3 * (ax + ay + az) + (1.0 - self.lambda3) * ax.max(ay).max(az)
    }
}

/// `λ₂(|x|+|y|) + (1−λ₂)max(|x|,|y|)` with the default λ₂.
pub fn l2_approx_2d(v: [f64; 2]) -> f64 {
    NormConstants::default().l2_2d(v)
}

/// `λ₃(|x|+|y|+|z|) + (1−λ₃)max(|x|,|y|,|z|)` with the default λ₃.
pub fn l2_approx_3d(v: [f64; 3]) -> f64 {
    NormConstants::default().l2_3d(v)
}

/// One face of a RAS: the interior side satisfies `normal · r < rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: [f64; 3],
    pub rhs: f64,
}

impl Halfspace {
    pub fn norm(&self) -> f64 {
        let [a, b, c] = self.normal;
        (a * a + b * b + c * c).sqrt()
    }

    /// Signed distance of `p` to the face plane, positive on the safe side.
    pub fn slack(&self, p: Point3) -> f64 {
        let [a, b, c] = self.normal;
        (a * p.x + b * p.y + c * p.z - self.rhs) / self.norm()
    }
}

/// Convex restricted airspace given as an intersection of open halfspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ras {
    #[serde(default)]
    pub id: String,
    pub halfspaces: Vec<Halfspace>,
}

impl Ras {
    pub fn new(id: impl Into<String>, halfspaces: Vec<Halfspace>) -> Result<Self, GeometryError> {
        let ras = Self {
            id: id.into(),
            halfspaces,
        };
        ras.validate()?;
        Ok(ras)
    }

    /// Axis-aligned box `[min, max]`.
    pub fn axis_box(id: impl Into<String>, min: Point3, max: Point3) -> Self {
        let h = |normal: [f64; 3], rhs: f64| Halfspace { normal, rhs };
        Self {
            id: id.into(),
            halfspaces: vec![
                h([-1.0, 0.0, 0.0], -min.x),
                h([1.0, 0.0, 0.0], max.x),
                h([0.0, -1.0, 0.0], -min.y),
                h([0.0, 1.0, 0.0], max.y),
                h([0.0, 0.0, -1.0], -min.z),
                h([0.0, 0.0, 1.0], max.z),
            ],
        }
    }

    /// Checks finiteness, nonzero normals and that the ground footprint is bounded.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |reason: &str| GeometryError::InvalidRas {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.halfspaces.is_empty() {
            return Err(bad("needs at least one halfspace"));
        }
        for h in &self.halfspaces {
            if !h.rhs.is_finite() || h.normal.iter().any(|c| !c.is_finite()) {
                return Err(bad("non-finite coefficient"));
            }
            if h.norm() == 0.0 {
                return Err(bad("zero normal"));
            }
        }
        let mut pts = bounding_square();
        for h in &self.halfspaces {
            let [a, b, _] = h.normal;
            if a.hypot(b) > EPS {
                pts = clip_halfplane(&pts, [a, b], h.rhs + h.normal[2].abs() * FOOTPRINT_BOUND);
            }
        }
        let touches = pts
            .iter()
            .any(|p| p.x.abs() >= 0.5 * FOOTPRINT_BOUND || p.y.abs() >= 0.5 * FOOTPRINT_BOUND);
        if touches {
            return Err(bad("unbounded ground footprint"));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point3, margin: f64) -> bool {
        self.halfspaces.iter().all(|h| h.slack(p) < margin)
    }

    /// Horizontal slice at altitude `z`, inflated by `margin` (face offset).
    /// `None` when the slice is empty.
    pub fn footprint(&self, z: f64, margin: f64) -> Option<ConvexPolygon> {
        let mut pts = bounding_square();
        for h in &self.halfspaces {
            let [a, b, c] = h.normal;
            let rhs = h.rhs - c * z + margin * h.norm();
            if a.hypot(b) <= EPS {
                if rhs <= 0.0 {
                    return None;
                }
                continue;
            }
            pts = clip_halfplane(&pts, [a, b], rhs);
            if pts.len() < 3 {
                return None;
            }
        }
        ConvexPolygon::from_vertices(pts)
    }
}

/// True iff `p` is strictly inside the RAS inflated by `margin`.
pub fn point_in_ras(p: Point3, ras: &Ras, margin: f64) -> bool {
    ras.contains(p, margin)
}

fn bounding_square() -> Vec<Point2> {
    let b = FOOTPRINT_BOUND;
    vec![
        Point2::new(-b, -b),
        Point2::new(b, -b),
        Point2::new(b, b),
        Point2::new(-b, b),
    ]
}

/// Sutherland-Hodgman clip of a polygon to `n · p <= rhs`.
fn clip_halfplane(poly: &[Point2], n: [f64; 2], rhs: f64) -> Vec<Point2> {
    let side = |p: Point2| n[0] * p.x + n[1] * p.y - rhs;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let nxt = poly[(i + 1) % poly.len()];
        let (sc, sn) = (side(cur), side(nxt));
        if sc <= 0.0 {
            out.push(cur);
        }
        if (sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0) {
            let t = sc / (sc - sn);
            out.push(Point2::new(cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)));
        }
    }
    out
}

/// Convex polygon with counter-clockwise vertices; interior is `n·p < rhs` for every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    pub vertices: Vec<Point2>,
    edges: Vec<([f64; 2], f64)>,
}

impl ConvexPolygon {
    pub fn from_vertices(mut pts: Vec<Point2>) -> Option<Self> {
        pts.dedup_by(|a, b| a.dist(*b) <= EPS);
        while pts.len() > 1 && pts[0].dist(pts[pts.len() - 1]) <= EPS {
            pts.pop();
        }
        if pts.len() < 3 {
            return None;
        }
        let area2: f64 = (0..pts.len())
            .map(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
                p.x * q.y - q.x * p.y
            })
            .sum();
        if area2.abs() <= EPS {
            return None;
        }
        if area2 < 0.0 {
            pts.reverse();
        }
        let edges = (0..pts.len())
            .map(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
                let n = [q.y - p.y, p.x - q.x];
                let len = n[0].hypot(n[1]);
                let n = [n[0] / len, n[1] / len];
                (n, n[0] * p.x + n[1] * p.y)
            })
            .collect();
        Some(Self { vertices: pts, edges })
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        0.5 * (0..v.len())
            .map(|i| {
                let (p, q) = (v[i], v[(i + 1) % v.len()]);
                p.x * q.y - q.x * p.y
            })
            .sum::<f64>()
    }

    /// Strict interior test with an absolute tolerance `tol` on the edge distance.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.edges
            .iter()
            .all(|(n, rhs)| n[0] * p.x + n[1] * p.y < rhs - tol)
    }

    /// Does the open segment `a→b` pass through the interior (shrunk by `tol`)?
    pub fn segment_enters(&self, a: Point2, b: Point2, tol: f64) -> bool {
        let d = [b.x - a.x, b.y - a.y];
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        for (n, rhs) in &self.edges {
            let num = rhs - tol - (n[0] * a.x + n[1] * a.y);
            let den = n[0] * d[0] + n[1] * d[1];
            if den.abs() <= 1e-15 {
                if num <= 0.0 {
                    return false;
                }
            } else if den > 0.0 {
                t1 = t1.min(num / den);
            } else {
                t0 = t0.max(num / den);
            }
            if t0 >= t1 {
                return false;
            }
        }
        t1 - t0 > 1e-12
    }
}

pub fn polyline_length(path: &[Point2]) -> f64 {
    path.windows(2).map(|w| w[0].dist(w[1])).sum()
}

pub fn polyline_approx_length(path: &[Point2]) -> f64 {
    path.windows(2).map(|w| l2_approx_2d(w[1].sub(w[0]))).sum()
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Inflated obstacle footprints plus their precomputed corner visibility graph.
#[derive(Debug, Clone)]
pub struct VisibilityMap {
    polygons: Vec<ConvexPolygon>,
    corners: Vec<Point2>,
    corner_adj: Vec<Vec<(usize, f64)>>,
}

impl VisibilityMap {
    pub fn new(ras_list: &[Ras], clearance: f64, altitude: f64) -> Self {
        let polygons: Vec<ConvexPolygon> = ras_list
            .iter()
            .filter_map(|r| r.footprint(altitude, clearance))
            .collect();
        Self::from_polygons(polygons)
    }

    pub fn from_polygons(polygons: Vec<ConvexPolygon>) -> Self {
        let tol = point_tol(&polygons);
        let corners: Vec<Point2> = polygons
            .iter()
            .flat_map(|p| p.vertices.iter().copied())
            .filter(|c| !polygons.iter().any(|p| p.contains(*c, tol)))
            .collect();
        let mut corner_adj = vec![Vec::new(); corners.len()];
        for i in 0..corners.len() {
            for j in i + 1..corners.len() {
                if Self::visible_in(&polygons, corners[i], corners[j], tol) {
                    let d = corners[i].dist(corners[j]);
                    corner_adj[i].push((j, d));
                    corner_adj[j].push((i, d));
                }
            }
        }
        Self {
            polygons,
            corners,
            corner_adj,
        }
    }

    pub fn polygons(&self) -> &[ConvexPolygon] {
        &self.polygons
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn blocked(&self, p: Point2) -> bool {
        let tol = point_tol(&self.polygons);
        self.polygons.iter().any(|poly| poly.contains(p, tol))
    }

    fn visible_in(polygons: &[ConvexPolygon], a: Point2, b: Point2, tol: f64) -> bool {
        !polygons.iter().any(|p| p.segment_enters(a, b, tol))
    }

    pub fn visible(&self, a: Point2, b: Point2) -> bool {
        Self::visible_in(&self.polygons, a, b, point_tol(&self.polygons))
    }

    /// Shortest obstacle-avoiding polyline from `a` to `b`.
    pub fn path(&self, a: Point2, b: Point2) -> Result<Vec<Point2>, GeometryError> {
        if self.blocked(a) || self.blocked(b) {
            return Err(GeometryError::NoPath);
        }
        if self.visible(a, b) {
            return Ok(vec![a, b]);
        }
        // Node layout: corners..., a, b.
        let nc = self.corners.len();
        let (ia, ib) = (nc, nc + 1);
        let from_a: Vec<f64> = self
            .corners
            .iter()
            .map(|c| if self.visible(a, *c) { a.dist(*c) } else { f64::INFINITY })
            .collect();
        let to_b: Vec<f64> = self
            .corners
            .iter()
            .map(|c| if self.visible(*c, b) { c.dist(b) } else { f64::INFINITY })
            .collect();
        let mut dist = vec![f64::INFINITY; nc + 2];
        let mut prev = vec![usize::MAX; nc + 2];
        let mut heap = BinaryHeap::new();
        dist[ia] = 0.0;
        heap.push(HeapItem(0.0, ia));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == ib {
                break;
            }
            let mut relax = |v: usize, w: f64, heap: &mut BinaryHeap<HeapItem>| {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(HeapItem(nd, v));
                }
            };
            if u == ia {
                for (c, w) in from_a.iter().enumerate() {
                    if w.is_finite() {
                        relax(c, *w, &mut heap);
                    }
                }
            } else {
                for &(v, w) in &self.corner_adj[u] {
                    relax(v, w, &mut heap);
                }
                if to_b[u].is_finite() {
                    relax(ib, to_b[u], &mut heap);
                }
            }
        }
        if !dist[ib].is_finite() {
            return Err(GeometryError::NoPath);
        }
        let mut seq = vec![b];
        let mut cur = prev[ib];
        while cur != ia {
            seq.push(self.corners[cur]);
            cur = prev[cur];
        }
        seq.push(a);
        seq.reverse();
        Ok(seq)
    }
}

fn point_tol(polygons: &[ConvexPolygon]) -> f64 {
    let scale = polygons
        .iter()
        .flat_map(|p| p.vertices.iter())
        .fold(1.0_f64, |m, v| m.max(v.x.abs()).max(v.y.abs()));
    EPS * scale
}

/// Shortest polyline from `a` to `b` around RAS slices at `altitude`, inflated by `clearance`.
pub fn avoidance_path_2d(
    a: Point2,
    b: Point2,
    ras_list: &[Ras],
    clearance: f64,
    altitude: f64,
) -> Result<Vec<Point2>, GeometryError> {
    VisibilityMap::new(ras_list, clearance, altitude).path(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub speed: f64,
}

impl RoadEdge {
    pub fn time(&self) -> f64 {
        self.length / self.speed
    }
}

#[derive(Deserialize)]
struct RoadGraphData {
    nodes: Vec<Point2>,
    edges: Vec<RoadEdge>,
}

impl TryFrom<RoadGraphData> for RoadGraph {
    type Error = GeometryError;

    fn try_from(d: RoadGraphData) -> Result<Self, Self::Error> {
        RoadGraph::new(d.nodes, d.edges)
    }
}

/// Undirected road network; edge times are `length / speed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoadGraphData")]
pub struct RoadGraph {
    pub nodes: Vec<Point2>,
    pub edges: Vec<RoadEdge>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl RoadGraph {
    pub fn new(nodes: Vec<Point2>, edges: Vec<RoadEdge>) -> Result<Self, GeometryError> {
        let n = nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        for (ei, e) in edges.iter().enumerate() {
            if e.a >= n || e.b >= n {
                return Err(GeometryError::InvalidGraph(format!("edge {ei} references a missing node")));
            }
            if !(e.length >= 0.0 && e.length.is_finite()) {
                return Err(GeometryError::InvalidGraph(format!("edge {ei} has a negative length")));
            }
            if !(e.speed > 0.0 && e.speed.is_finite()) {
                return Err(GeometryError::InvalidGraph(format!("edge {ei} has a non-positive speed")));
            }
            adjacency[e.a].push((e.b, ei));
            if e.a != e.b {
                adjacency[e.b].push((e.a, ei));
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            nodes,
            edges,
            adjacency,
        })
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, &RoadEdge)> {
        self.adjacency[u].iter().map(move |&(v, e)| (v, &self.edges[e]))
    }

    /// Single-source travel times (Dijkstra).
    pub fn times_from(&self, src: usize) -> Result<Vec<f64>, GeometryError> {
        let g = self;
        if src >= g.nodes.len() {
            return Err(GeometryError::UnknownNode(src));
        }
        let mut dist = vec![f64::INFINITY; g.nodes.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (v, e) in g.neighbors(u) {
                let nd = d + e.time();
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(HeapItem(nd, v));
                }
            }
        }
        Ok(dist)
    }

    pub fn nearest_node(&self, p: Point2) -> Option<usize> {
        (0..self.nodes.len()).min_by(|&i, &j| {
            self.nodes[i]
                .dist(p)
                .total_cmp(&self.nodes[j].dist(p))
                .then(i.cmp(&j))
        })
    }

    /// Edge with the smallest time between two adjacent nodes.
    pub fn best_edge(&self, u: usize, v: usize) -> Option<&RoadEdge> {
        let idx = self.adjacency[u]
            .iter()
            .filter(|(w, _)| *w == v)
            .map(|&(_, e)| e)
            .min_by(|&x, &y| self.edges[x].time().total_cmp(&self.edges[y].time()).then(x.cmp(&y)))?;
        Some(&self.edges[idx])
    }
}

/// Minimum-time path; among equal-time paths the lexicographically smallest node sequence.
pub fn shortest_truck_path(g: &RoadGraph, a: usize, b: usize) -> Result<(f64, Vec<usize>), GeometryError> {
    let n = g.nodes.len();
    if a >= n {
        return Err(GeometryError::UnknownNode(a));
    }
    if b >= n {
        return Err(GeometryError::UnknownNode(b));
    }
    if a == b {
        return Ok((0.0, vec![a]));
    }
    let from_a = g.times_from(a)?;
    let to_b = g.times_from(b)?;
    let total = from_a[b];
    if !total.is_finite() {
        return Err(GeometryError::NoPath);
    }
    let tol = 1e-9 * total.max(1.0);
    let mut seq = vec![a];
    let mut visited = vec![false; n];
    visited[a] = true;
    let mut u = a;
    while u != b {
        let next = g
            .neighbors(u)
            .filter(|(v, e)| !visited[*v] && (from_a[u] + e.time() + to_b[*v] - total).abs() <= tol)
            .map(|(v, _)| v)
            .min()
            .ok_or(GeometryError::NoPath)?;
        visited[next] = true;
        seq.push(next);
        u = next;
    }
    Ok((total, seq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn norm_examples() {
        assert_eq!(l2_approx_2d([1.0, 0.0]), 1.0);
        let v = 0.3363788020 * 7.0 + (1.0 - 0.3363788020) * 4.0;
        assert!((l2_approx_2d([3.0, 4.0]) - v).abs() < 1e-12);
        assert!((l2_approx_2d([3.0, 4.0]) - 5.009136).abs() < 1e-6);
        assert!((l2_approx_2d([0.7071, 0.7071]) - 0.944953).abs() < 1e-6);
        assert_eq!(l2_approx_3d([0.0, 0.0, 5.0]), 5.0);
        assert!((l2_approx_3d([1.0, 1.0, 1.0]) - 1.596090).abs() < 1e-6);
        assert!((l2_approx_3d([3.0, 4.0, 0.0]) - 4.894135).abs() < 1e-6);
    }

    fn unit_box() -> Ras {
        Ras::axis_box("b", Point3::new(0.0, 0.0, 0.0), Point3::new(10.0, 10.0, 10.0))
    }

    #[test]
    fn ras_membership() {
        let r = unit_box();
        assert!(!point_in_ras(Point3::new(0.0, 0.0, 0.0), &r, 0.0));
        assert!(point_in_ras(Point3::new(5.0, 5.0, 5.0), &r, 0.0));
        assert!(point_in_ras(Point3::new(11.0, 5.0, 5.0), &r, 2.0));
        assert!(!point_in_ras(Point3::new(11.0, 5.0, 5.0), &r, 0.5));
    }

    #[test]
    fn footprint_of_box() {
        let fp = unit_box().footprint(5.0, 1.0).unwrap();
        assert_eq!(fp.vertices.len(), 4);
        assert!((fp.area() - 144.0).abs() < 1e-6);
        assert!(unit_box().footprint(20.0, 1.0).is_none());
    }

    #[test]
    fn unbounded_ras_rejected() {
        let half = Halfspace { normal: [1.0, 0.0, 0.0], rhs: 0.0 };
        assert!(Ras::new("h", vec![half]).is_err());
        assert!(Ras::new("e", vec![]).is_err());
    }

    #[test]
    fn segment_polygon_test() {
        let fp = unit_box().footprint(5.0, 0.0).unwrap();
        assert!(fp.segment_enters(Point2::new(-1.0, 5.0), Point2::new(11.0, 5.0), 1e-9));
        assert!(!fp.segment_enters(Point2::new(-1.0, 10.0), Point2::new(11.0, 10.0), 1e-9));
        assert!(!fp.segment_enters(Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), 1e-9));
        assert!(fp.segment_enters(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0), 1e-9));
        assert!(!fp.segment_enters(Point2::new(-5.0, 0.0), Point2::new(0.0, 5.0), 1e-9));
    }

    #[test]
    fn path_unobstructed_and_detour() {
        let p = avoidance_path_2d(Point2::new(0.0, 0.0), Point2::new(100.0, 0.0), &[], 3.0, 50.0).unwrap();
        assert_eq!(p, vec![Point2::new(0.0, 0.0), Point2::new(100.0, 0.0)]);
        let ras = Ras::axis_box("s", Point3::new(40.0, -10.0, -1.0), Point3::new(60.0, 10.0, 200.0));
        let p = avoidance_path_2d(Point2::new(0.0, 0.0), Point2::new(100.0, 0.0), std::slice::from_ref(&ras), 3.0, 50.0).unwrap();
        assert_eq!(p.len(), 4);
        assert!(polyline_length(&p) > 100.0);
        let inside = avoidance_path_2d(Point2::new(0.0, 0.0), Point2::new(50.0, 0.0), &[ras], 3.0, 50.0);
        assert_eq!(inside, Err(GeometryError::NoPath));
    }

    #[test]
    fn enclosed_by_ring_is_nopath() {
        let ring = [
            Ras::axis_box("w", Point3::new(-20.0, -20.0, 0.0), Point3::new(-10.0, 20.0, 100.0)),
            Ras::axis_box("e", Point3::new(10.0, -20.0, 0.0), Point3::new(20.0, 20.0, 100.0)),
            Ras::axis_box("s", Point3::new(-20.0, -20.0, 0.0), Point3::new(20.0, -10.0, 100.0)),
            Ras::axis_box("n", Point3::new(-20.0, 10.0, 0.0), Point3::new(20.0, 20.0, 100.0)),
        ];
        let r = avoidance_path_2d(Point2::new(0.0, 0.0), Point2::new(100.0, 0.0), &ring, 1.0, 50.0);
        assert_eq!(r, Err(GeometryError::NoPath));
    }

    fn graph(nodes: usize, edges: &[(usize, usize, f64, f64)]) -> RoadGraph {
        RoadGraph::new(
            (0..nodes).map(|i| Point2::new(i as f64, 0.0)).collect(),
            edges
                .iter()
                .map(|&(a, b, length, speed)| RoadEdge { a, b, length, speed })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn truck_path_examples() {
        let g = graph(2, &[(0, 1, 1000.0, 10.0)]);
        assert_eq!(shortest_truck_path(&g, 0, 0).unwrap(), (0.0, vec![0]));
        assert_eq!(shortest_truck_path(&g, 0, 1).unwrap(), (100.0, vec![0, 1]));
        let d = graph(4, &[(0, 1, 100.0, 10.0), (1, 3, 100.0, 10.0), (0, 2, 100.0, 20.0), (2, 3, 100.0, 20.0)]);
        assert_eq!(shortest_truck_path(&d, 0, 3).unwrap(), (10.0, vec![0, 2, 3]));
        let tie = graph(4, &[(0, 2, 10.0, 1.0), (2, 3, 10.0, 1.0), (0, 1, 10.0, 1.0), (1, 3, 10.0, 1.0)]);
        assert_eq!(shortest_truck_path(&tie, 0, 3).unwrap().1, vec![0, 1, 3]);
        let split = graph(3, &[(0, 1, 1.0, 1.0)]);
        assert_eq!(shortest_truck_path(&split, 0, 2), Err(GeometryError::NoPath));
        assert!(RoadGraph::new(vec![Point2::default()], vec![RoadEdge { a: 0, b: 0, length: 1.0, speed: 0.0 }]).is_err());
    }
}
