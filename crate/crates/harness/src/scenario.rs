//! Synthetic instance generators.

use dronetour::geometry::{Point2, Point3, Ras};
use dronetour::planner::{Delivery, Instance, TravelMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Open sky, uniform deliveries.
    I,
    /// Tall restricted boxes that neither vehicle may enter.
    II,
}

impl Scenario {
    pub fn from_number(k: u8) -> Option<Self> {
        match k {
            1 => Some(Self::I),
            2 => Some(Self::II),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::I => 1,
            Self::II => 2,
        }
    }
}

/// Restricted-box generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RasGenConfig {
    pub count_min: usize,
    pub count_max: usize,
    /// Fraction of the region covered by all boxes together.
    pub coverage_min: f64,
    pub coverage_max: f64,
    /// Box side ratio is drawn from `[1/max_aspect, max_aspect]`.
    pub max_aspect: f64,
    pub height: f64,
    /// Minimum distance between boxes and from boxes to the depot and deliveries.
    pub gap: f64,
}

impl Default for RasGenConfig {
    fn default() -> Self {
        Self {
            count_min: 3,
            count_max: 6,
            coverage_min: 0.10,
            coverage_max: 0.20,
            max_aspect: 2.0,
            height: 500.0,
            gap: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub truck_speed_kmh: f64,
    pub instance_count: usize,
    /// Side of the square service region in metres, centred on the depot.
    pub region_side: f64,
    pub ras: RasGenConfig,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::I,
            n: 20,
            truck_speed_kmh: 40.0,
            instance_count: 100,
            region_side: 5000.0,
            ras: RasGenConfig::default(),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let r = &self.ras;
        let ok = self.n >= 1
            && self.truck_speed_kmh > 0.0
            && self.region_side > 0.0
            && r.count_min <= r.count_max
            && 0.0 <= r.coverage_min
            && r.coverage_min <= r.coverage_max
            && r.coverage_max < 1.0
            && r.max_aspect >= 1.0
            && r.height > 0.0
            && r.gap >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Config(format!("invalid scenario configuration: {self:?}")))
        }
    }

    pub fn truck_speed(&self) -> f64 {
        self.truck_speed_kmh / 3.6
    }
}

/// Kept wider than the drone's own RAS clearance so co-moving landings stay legal.
pub const TRUCK_CLEARANCE: f64 = 5.0;

const BOX_ATTEMPTS: usize = 2000;
const POINT_ATTEMPTS: usize = 10_000;

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    min: Point2,
    max: Point2,
}

impl Rect {
    fn gap_to(&self, p: Point2) -> f64 {
        let dx = (self.min.x - p.x).max(p.x - self.max.x).max(0.0);
        let dy = (self.min.y - p.y).max(p.y - self.max.y).max(0.0);
        dx.hypot(dy)
    }

    fn separated(&self, o: &Rect, gap: f64) -> bool {
        self.max.x + gap <= o.min.x || o.max.x + gap <= self.min.x || self.max.y + gap <= o.min.y || o.max.y + gap <= self.min.y
    }
}

fn gen_boxes(cfg: &ScenarioConfig, depot: Point2, rng: &mut ChaCha8Rng) -> Result<Vec<Rect>, HarnessError> {
    let r = &cfg.ras;
    let half = cfg.region_side / 2.0;
    let count = rng.gen_range(r.count_min..=r.count_max);
    if count == 0 {
        return Ok(Vec::new());
    }
    let coverage = if r.coverage_max > r.coverage_min {
        rng.gen_range(r.coverage_min..r.coverage_max)
    } else {
        r.coverage_min
    };
    let area = coverage * cfg.region_side * cfg.region_side / count as f64;
    let mut boxes: Vec<Rect> = Vec::with_capacity(count);
    for _ in 0..BOX_ATTEMPTS {
        if boxes.len() == count {
            break;
        }
        let aspect = rng.gen_range(r.max_aspect.recip().ln()..=r.max_aspect.ln()).exp();
        let w = (area * aspect).sqrt();
        let h = area / w;
        if w >= cfg.region_side || h >= cfg.region_side {
            continue;
        }
        let cx = rng.gen_range(depot.x - half + w / 2.0..depot.x + half - w / 2.0);
        let cy = rng.gen_range(depot.y - half + h / 2.0..depot.y + half - h / 2.0);
        let b = Rect {
            min: Point2::new(cx - w / 2.0, cy - h / 2.0),
            max: Point2::new(cx + w / 2.0, cy + h / 2.0),
        };
        if b.gap_to(depot) >= r.gap && boxes.iter().all(|o| b.separated(o, r.gap)) {
            boxes.push(b);
        }
    }
    if boxes.len() < count {
        return Err(HarnessError::Sampling(format!("placed {} of {count} restricted boxes", boxes.len())));
    }
    Ok(boxes)
}

/// Instance `index` of the configured scenario; deterministic in `(seed, index)`.
pub fn gen_instance(cfg: &ScenarioConfig, index: usize) -> Result<Instance, HarnessError> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, index);
    let depot = Point2::new(0.0, 0.0);
    let half = cfg.region_side / 2.0;
    let boxes = match cfg.scenario {
        Scenario::I => Vec::new(),
        Scenario::II => gen_boxes(cfg, depot, &mut rng)?,
    };
    let mut deliveries = Vec::with_capacity(cfg.n);
    let mut attempts = 0;
    while deliveries.len() < cfg.n {
        attempts += 1;
        if attempts > POINT_ATTEMPTS * cfg.n {
            return Err(HarnessError::Sampling(format!(
                "only {} of {} deliveries fit outside the restricted boxes",
                deliveries.len(),
                cfg.n
            )));
        }
        let p = Point2::new(rng.gen_range(-half..half), rng.gen_range(-half..half));
        if boxes.iter().any(|b| b.gap_to(p) < cfg.ras.gap) || p == depot {
            continue;
        }
        deliveries.push(Delivery {
            id: deliveries.len() as u64 + 1,
            x: p.x,
            y: p.y,
        });
    }
    let ras = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| Ras::axis_box(format!("box{i}"), b.min.with_z(0.0), Point3::new(b.max.x, b.max.y, cfg.ras.height)))
        .collect();
    Ok(Instance {
        depot,
        deliveries,
        travel_mode: TravelMode::Euclidean {
            truck_speed: cfg.truck_speed(),
        },
        ras,
        truck_clearance: TRUCK_CLEARANCE,
    })
}
