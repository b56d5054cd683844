use crate::geometry::{shortest_truck_path, Point2, VisibilityMap};
use crate::physics::{TimedTruckPath, TruckSegment};

use super::{Instance, PlanError, TravelMode};

/// Truck travel times between every pair of instance nodes (depot = node 0).
#[derive(Debug, Clone)]
pub struct TruckNetwork {
    pub n_nodes: usize,
    times: Vec<f64>,
    coords: Vec<Point2>,
    vis: Option<VisibilityMap>,
}

impl TruckNetwork {
    pub fn build(inst: &Instance) -> Result<Self, PlanError> {
        let coords = inst.coords();
        let n = coords.len();
        let mut times = vec![0.0; n * n];
        let mut vis = None;
        match &inst.travel_mode {
            TravelMode::Euclidean { truck_speed } => {
                if inst.ras.is_empty() {
                    for a in 0..n {
                        for b in 0..n {
                            times[a * n + b] = coords[a].dist(coords[b]) / truck_speed;
                        }
                    }
                } else {
                    let map = VisibilityMap::new(&inst.ras, inst.truck_clearance, super::TRUCK_SLICE_ALT);
                    for a in 0..n {
                        for b in a + 1..n {
                            let path = map.path(coords[a], coords[b]).map_err(|_| PlanError::Unreachable { a, b })?;
                            let t = path.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>() / truck_speed;
                            times[a * n + b] = t;
                            times[b * n + a] = t;
                        }
                    }
                    vis = Some(map);
                }
            }
            TravelMode::Road { graph, anchors } => {
                for a in 0..n {
                    let from = graph.times_from(anchors[a])?;
                    for b in 0..n {
                        let t = from[anchors[b]];
                        if !t.is_finite() {
                            return Err(PlanError::Unreachable { a, b });
                        }
                        times[a * n + b] = t;
                    }
                }
            }
        }
        Ok(Self {
            n_nodes: n,
            times,
            coords,
            vis,
        })
    }

    #[inline]
    pub fn time(&self, a: usize, b: usize) -> f64 {
        self.times[a * self.n_nodes + b]
    }

    pub fn coord(&self, a: usize) -> Point2 {
        self.coords[a]
    }

    /// Truck time along a node sequence.
    pub fn route_time(&self, nodes: &[usize]) -> f64 {
        nodes.windows(2).map(|w| self.time(w[0], w[1])).sum()
    }

    /// Timed geometric path of the truck driving through `nodes`.
    pub fn timed_path(&self, inst: &Instance, nodes: &[usize], dt: f64) -> Result<TimedTruckPath, PlanError> {
        let mut segs = Vec::new();
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            match &inst.travel_mode {
                TravelMode::Euclidean { truck_speed } => {
                    let pts = match &self.vis {
                        Some(map) => map.path(self.coords[a], self.coords[b]).map_err(|_| PlanError::Unreachable { a, b })?,
                        None => vec![self.coords[a], self.coords[b]],
                    };
                    segs.extend(pts.windows(2).map(|p| TruckSegment {
                        from: p[0],
                        to: p[1],
                        speed: *truck_speed,
                    }));
                }
                TravelMode::Road { graph, anchors } => {
                    let (_, seq) = shortest_truck_path(graph, anchors[a], anchors[b])?;
                    for e in seq.windows(2) {
                        let edge = graph.best_edge(e[0], e[1]).ok_or(PlanError::Unreachable { a, b })?;
                        let (from, to) = (graph.nodes[e[0]], graph.nodes[e[1]]);
                        let len = from.dist(to);
                        if len > 0.0 {
                            segs.push(TruckSegment {
                                from,
                                to,
                                speed: len / edge.time(),
                            });
                        }
                    }
                }
            }
        }
        Ok(TimedTruckPath::new(self.coords[nodes[0]], segs, dt))
    }
}
