//! City regions with buildings and a road network.

use dronetour::geometry::{Point2, Point3, Ras, RoadEdge, RoadGraph, VisibilityMap};
use dronetour::planner::{Delivery, Instance, TravelMode, TRUCK_SLICE_ALT};
use dronetour::predictor::Region;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub footprint: Vec<Point2>,
    /// Cubic metres; sampling weight.
    pub volume: f64,
}

impl Building {
    /// Area-weighted centroid of the footprint polygon.
    pub fn centroid(&self) -> Point2 {
        let pts = &self.footprint;
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for i in 0..pts.len() {
            let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
            let cross = p.x * q.y - q.x * p.y;
            a += cross;
            cx += (p.x + q.x) * cross;
            cy += (p.y + q.y) * cross;
        }
        if a.abs() < 1e-12 {
            let n = pts.len() as f64;
            return Point2::new(pts.iter().map(|p| p.x).sum::<f64>() / n, pts.iter().map(|p| p.y).sum::<f64>() / n);
        }
        Point2::new(cx / (3.0 * a), cy / (3.0 * a))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFile {
    pub bounds: Region,
    pub buildings: Vec<Building>,
    pub road: RoadGraph,
    /// Tall structures the drone must avoid.
    #[serde(default)]
    pub ras: Vec<Ras>,
    /// Depot location; defaults to the road node nearest the centre of `bounds`.
    #[serde(default)]
    pub depot: Option<Point2>,
}

impl RegionFile {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.road.nodes.is_empty() {
            return Err(HarnessError::Config("region has no road nodes".into()));
        }
        for (i, b) in self.buildings.iter().enumerate() {
            if !(b.volume > 0.0 && b.volume.is_finite()) || b.footprint.len() < 3 {
                return Err(HarnessError::Config(format!("building {i} needs a positive volume and a polygon footprint")));
            }
        }
        for r in &self.ras {
            r.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Buildings whose centroid is clear of every RAS; only these receive deliveries.
    pub fn eligible(&self) -> Vec<usize> {
        let map = VisibilityMap::new(&self.ras, 0.0, TRUCK_SLICE_ALT);
        (0..self.buildings.len())
            .filter(|&i| self.ras.is_empty() || !map.blocked(self.buildings[i].centroid()))
            .collect()
    }

    fn depot_node(&self) -> usize {
        let at = self.depot.unwrap_or_else(|| self.bounds.center());
        self.road.nearest_node(at).expect("validated nonempty graph")
    }

    /// Street grid with `blocks × blocks` blocks of `block` metres and four
    /// buildings per block; a few of them are towers turned into RAS.
    pub fn synthetic(blocks: usize, block: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = blocks + 1;
        let origin = -(blocks as f64) * block / 2.0;
        let mut nodes = Vec::with_capacity(k * k);
        for y in 0..k {
            for x in 0..k {
                nodes.push(Point2::new(origin + x as f64 * block, origin + y as f64 * block));
            }
        }
        let mut edges = Vec::new();
        let speed_of = |i: usize| if i % 4 == 0 { 50.0 / 3.6 } else { 30.0 / 3.6 };
        for y in 0..k {
            for x in 0..k {
                let u = y * k + x;
                if x + 1 < k {
                    edges.push(RoadEdge { a: u, b: u + 1, length: block, speed: speed_of(y) });
                }
                if y + 1 < k {
                    edges.push(RoadEdge { a: u, b: u + k, length: block, speed: speed_of(x) });
                }
            }
        }
        let road = RoadGraph::new(nodes, edges).expect("grid graph is valid");
        let setback = 0.1 * block;
        let lot = (block - 2.0 * setback) / 2.0;
        let mut buildings = Vec::new();
        let mut ras = Vec::new();
        for by in 0..blocks {
            for bx in 0..blocks {
                for q in 0..4 {
                    let x0 = origin + bx as f64 * block + setback + (q % 2) as f64 * lot;
                    let y0 = origin + by as f64 * block + setback + (q / 2) as f64 * lot;
                    let w = rng.gen_range(0.5..0.9) * lot;
                    let h = rng.gen_range(0.5..0.9) * lot;
                    let (x0, y0) = (x0 + (lot - w) / 2.0, y0 + (lot - h) / 2.0);
                    let tower = rng.gen_bool(0.03);
                    let height = if tower { rng.gen_range(120.0..250.0) } else { rng.gen_range(1.0f64..4.0).exp2() * 4.0 };
                    let footprint = vec![
                        Point2::new(x0, y0),
                        Point2::new(x0 + w, y0),
                        Point2::new(x0 + w, y0 + h),
                        Point2::new(x0, y0 + h),
                    ];
                    if tower {
                        ras.push(Ras::axis_box(
                            format!("tower{}", ras.len()),
                            Point3::new(x0, y0, 0.0),
                            Point3::new(x0 + w, y0 + h, height),
                        ));
                    }
                    buildings.push(Building { footprint, volume: w * h * height });
                }
            }
        }
        let half = blocks as f64 * block / 2.0;
        Self {
            bounds: Region {
                min: Point2::new(-half, -half),
                max: Point2::new(half, half),
            },
            buildings,
            road,
            ras,
            depot: None,
        }
    }
}

/// `n` distinct buildings drawn with probability proportional to volume, in
/// draw order, each served at its nearest road node.
pub fn sample_case_study(region: &RegionFile, n: usize, seed: u64, index: usize) -> Result<Instance, HarnessError> {
    region.validate()?;
    let eligible = region.eligible();
    if n > eligible.len() {
        return Err(HarnessError::Sampling(format!("asked for {n} deliveries but only {} buildings are eligible", eligible.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    // Weighted sampling without replacement via exponential keys.
    let mut keyed: Vec<(f64, usize)> = eligible
        .iter()
        .map(|&i| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            (u.ln() / region.buildings[i].volume, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let depot_node = region.depot_node();
    let depot = region.road.nodes[depot_node];
    let mut anchors = vec![depot_node];
    let mut deliveries = Vec::with_capacity(n);
    for &(_, b) in keyed.iter().take(n) {
        let c = region.buildings[b].centroid();
        anchors.push(region.road.nearest_node(c).expect("nonempty graph"));
        deliveries.push(Delivery { id: b as u64, x: c.x, y: c.y });
    }
    let inst = Instance {
        depot,
        deliveries,
        travel_mode: TravelMode::Road {
            graph: region.road.clone(),
            anchors,
        },
        ras: region.ras.clone(),
        truck_clearance: 0.0,
    };
    inst.validate()?;
    Ok(inst)
}
