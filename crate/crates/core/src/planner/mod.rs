//! Tour construction: ordering, optimal splitting into operations, local
//! improvement and physics-verified finalization.
//!
//! Nodes are indexed with the depot as node 0 and delivery `i` as node `i + 1`.
//! A tour is the node sequence `[0, .., 0]` visiting every delivery once.

mod finalize;
mod network;
mod search;
mod split;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::DroneTimeModel;
use crate::geometry::{GeometryError, Point2, Ras, RoadGraph, VisibilityMap};
use crate::physics::{PhysicsError, Trajectory};

pub use finalize::{finalize_plan, operation_truck_path};
pub use network::TruckNetwork;
pub use search::{exact_small, improve, initial_tour_two_opt, nearest_neighbor_tour, two_opt, EXACT_MAX_NODES};
pub use split::{split, EstimateTable, Splitter};

/// Relative tolerance for treating two durations as equal.
pub const DURATION_EPS: f64 = 1e-6;

/// Altitude of the horizontal RAS slice that blocks the truck.
pub const TRUCK_SLICE_ALT: f64 = 1.0;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("no truck route between nodes {a} and {b}")]
    Unreachable { a: usize, b: usize },
    #[error("exhaustive search supports at most {max} deliveries, got {n}")]
    SizeError { n: usize, max: usize },
    #[error("operation {index}: {source}")]
    Operation {
        index: usize,
        #[source]
        source: PhysicsError,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

impl Delivery {
    pub fn pos(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TravelMode {
    /// Straight-line driving (detouring around RAS) at a constant speed in m/s.
    Euclidean { truck_speed: f64 },
    /// Road network; `anchors[i]` is the graph node where node `i` is served.
    Road { graph: RoadGraph, anchors: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub depot: Point2,
    pub deliveries: Vec<Delivery>,
    pub travel_mode: TravelMode,
    #[serde(default)]
    pub ras: Vec<Ras>,
    /// Distance the truck keeps from RAS footprints, in metres.
    #[serde(default = "default_truck_clearance")]
    pub truck_clearance: f64,
}

fn default_truck_clearance() -> f64 {
    1.0
}

impl Instance {
    pub fn euclidean(depot: Point2, points: &[Point2], truck_speed: f64) -> Self {
        Self {
            depot,
            deliveries: points
                .iter()
                .enumerate()
                .map(|(i, p)| Delivery {
                    id: i as u64 + 1,
                    x: p.x,
                    y: p.y,
                })
                .collect(),
            travel_mode: TravelMode::Euclidean { truck_speed },
            ras: Vec::new(),
            truck_clearance: default_truck_clearance(),
        }
    }

    pub fn n(&self) -> usize {
        self.deliveries.len()
    }

    /// Where the drone delivers to node `i` (the depot for `i = 0`).
    pub fn target(&self, i: usize) -> Point2 {
        if i == 0 {
            self.depot
        } else {
            self.deliveries[i - 1].pos()
        }
    }

    /// Where the truck stops for node `i`.
    pub fn stop(&self, i: usize) -> Point2 {
        match &self.travel_mode {
            TravelMode::Road { graph, anchors } => graph.nodes[anchors[i]],
            TravelMode::Euclidean { .. } => self.target(i),
        }
    }

    pub fn coords(&self) -> Vec<Point2> {
        (0..=self.n()).map(|i| self.stop(i)).collect()
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::InvalidInstance(m));
        let n = self.n();
        for i in 0..=n {
            if !self.target(i).is_finite() {
                return bad(format!("node {i} has a non-finite coordinate"));
            }
        }
        for i in 0..=n {
            for j in i + 1..=n {
                if self.target(i) == self.target(j) {
                    return bad(format!("nodes {i} and {j} coincide"));
                }
            }
        }
        match &self.travel_mode {
            TravelMode::Euclidean { truck_speed } => {
                if !(*truck_speed > 0.0 && truck_speed.is_finite()) {
                    return bad("truck speed must be positive".into());
                }
            }
            TravelMode::Road { graph, anchors } => {
                if anchors.len() != n + 1 {
                    return bad(format!("expected {} anchors, got {}", n + 1, anchors.len()));
                }
                if let Some(a) = anchors.iter().find(|&&a| a >= graph.nodes.len()) {
                    return bad(format!("anchor {a} is not a graph node"));
                }
            }
        }
        for r in &self.ras {
            r.validate()?;
        }
        if !self.ras.is_empty() {
            let ground = VisibilityMap::new(&self.ras, 0.0, TRUCK_SLICE_ALT);
            for i in 0..=n {
                if ground.blocked(self.target(i)) || ground.blocked(self.stop(i)) {
                    return bad(format!("node {i} lies inside a RAS footprint"));
                }
            }
        }
        Ok(())
    }
}

/// One leg of a plan that starts and ends with the drone on the truck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operation {
    pub start: usize,
    /// Nodes served by the truck strictly between `start` and `end`.
    pub truck_seq: Vec<usize>,
    pub drone_node: Option<usize>,
    /// Tour position of the drone node, counted in `truck_seq` entries before it.
    #[serde(default)]
    pub slot: usize,
    pub end: usize,
    pub t_truck: f64,
    /// Estimated drone time; zero without a drone node.
    pub t_drone_est: f64,
    pub t_o: f64,
    /// Drone energy in joules, known after finalization.
    pub energy: f64,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

impl Operation {
    /// Truck node sequence from start to end.
    pub fn truck_nodes(&self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.truck_seq.len() + 2);
        v.push(self.start);
        v.extend_from_slice(&self.truck_seq);
        v.push(self.end);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub operations: Vec<Operation>,
    pub total_duration: f64,
    /// Total drone energy in joules.
    pub total_dec: f64,
    /// True once every drone operation carries an oracle trajectory.
    pub verified: bool,
}

impl Plan {
    pub fn from_operations(operations: Vec<Operation>) -> Self {
        let total_duration = operations.iter().map(|o| o.t_o).sum();
        let total_dec = operations.iter().map(|o| o.energy).sum();
        Self {
            operations,
            total_duration,
            total_dec,
            verified: false,
        }
    }

    pub fn drone_count(&self) -> usize {
        self.operations.iter().filter(|o| o.drone_node.is_some()).count()
    }

    pub fn drone_estimate_total(&self) -> f64 {
        self.operations.iter().map(|o| o.t_drone_est).sum()
    }

    /// Truck visiting order, depot at both ends.
    pub fn truck_route(&self) -> Vec<usize> {
        let mut v = vec![self.operations.first().map_or(0, |o| o.start)];
        for o in &self.operations {
            v.extend_from_slice(&o.truck_seq);
            v.push(o.end);
        }
        v
    }

    /// Combined visiting order with drone nodes placed where they are served.
    pub fn tour(&self) -> Vec<usize> {
        let mut v = vec![self.operations.first().map_or(0, |o| o.start)];
        for o in &self.operations {
            v.extend(o.visit_order());
            v.push(o.end);
        }
        v
    }

    /// Checks chaining and coverage of nodes `1..=n`.
    pub fn check_structure(&self, n: usize) -> Result<(), String> {
        let ops = &self.operations;
        if ops.is_empty() {
            return if n == 0 { Ok(()) } else { Err("empty plan".into()) };
        }
        if ops[0].start != 0 || ops[ops.len() - 1].end != 0 {
            return Err("plan must start and end at the depot".into());
        }
        for w in ops.windows(2) {
            if w[0].end != w[1].start {
                return Err(format!("operation ending at {} is followed by one starting at {}", w[0].end, w[1].start));
            }
        }
        let mut seen = vec![0usize; n + 1];
        for (k, o) in ops.iter().enumerate() {
            for &u in o.truck_seq.iter().chain(o.drone_node.iter()) {
                seen[u] += 1;
            }
            if k + 1 < ops.len() {
                seen[o.end] += 1;
            }
            if let Some(d) = o.drone_node {
                if d == o.start || d == o.end || o.truck_seq.contains(&d) {
                    return Err(format!("drone node {d} is also a truck node"));
                }
            }
        }
        if seen[0] != 0 {
            return Err("depot visited mid-tour".into());
        }
        match (1..=n).find(|&u| seen[u] != 1) {
            Some(u) => Err(format!("node {u} served {} times", seen[u])),
            None => Ok(()),
        }
    }
}

impl Operation {
    fn visit_order(&self) -> Vec<usize> {
        let mut v = self.truck_seq.clone();
        if let Some(d) = self.drone_node {
            v.insert(self.slot.min(v.len()), d);
        }
        v
    }
}

/// Truck time between two instance nodes.
pub fn truck_leg_time(inst: &Instance, a: usize, b: usize) -> Result<f64, PlanError> {
    if a == b {
        return Ok(0.0);
    }
    let n = inst.n();
    if a > n || b > n {
        return Err(PlanError::InvalidInstance(format!("node {} out of range", a.max(b))));
    }
    match &inst.travel_mode {
        TravelMode::Euclidean { truck_speed } if inst.ras.is_empty() => Ok(inst.stop(a).dist(inst.stop(b)) / truck_speed),
        TravelMode::Euclidean { truck_speed } => {
            let map = VisibilityMap::new(&inst.ras, inst.truck_clearance, TRUCK_SLICE_ALT);
            let path = map.path(inst.stop(a), inst.stop(b)).map_err(|_| PlanError::Unreachable { a, b })?;
            Ok(path.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>() / truck_speed)
        }
        TravelMode::Road { graph, anchors } => {
            let t = graph.times_from(anchors[a])?[anchors[b]];
            if t.is_finite() {
                Ok(t)
            } else {
                Err(PlanError::Unreachable { a, b })
            }
        }
    }
}

/// Truck-only duration of a tour.
pub fn tour_truck_time(net: &TruckNetwork, tour: &[usize]) -> f64 {
    net.route_time(tour)
}

/// Convenience pipeline: 2-opt order, split, improve.
pub fn plan_instance(
    inst: &Instance,
    est: &dyn DroneTimeModel,
    seed: u64,
    budget: Option<usize>,
) -> Result<(Vec<usize>, Plan), PlanError> {
    let sp = Splitter::new(inst, est)?;
    let tour = two_opt(&sp.net, nearest_neighbor_tour(&sp.net), seed);
    Ok(sp.improve(&tour, budget))
}

/// True when `tour` starts and ends at the depot and visits `1..=n` once each.
pub fn is_valid_tour(tour: &[usize], n: usize) -> bool {
    if tour.len() != n + 2 || tour[0] != 0 || tour[n + 1] != 0 {
        return false;
    }
    let mut seen = vec![false; n + 1];
    for &u in &tour[1..=n] {
        if u == 0 || u > n || seen[u] {
            return false;
        }
        seen[u] = true;
    }
    true
}
