use std::collections::HashSet;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mlp::FEATURES;
use super::PredictorError;
use crate::geometry::{Point2, Ras};
use crate::physics::{DronePhysicsParams, FlightContext, PhysicsError};

/// Axis-aligned sampling rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: Point2,
    pub max: Point2,
}

impl Region {
    pub fn square(center: Point2, side: f64) -> Self {
        let h = 0.5 * side;
        Self {
            min: Point2::new(center.x - h, center.y - h),
            max: Point2::new(center.x + h, center.y + h),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point2 {
        Point2::new(rng.gen_range(self.min.x..self.max.x), rng.gen_range(self.min.y..self.max.y))
    }

    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// `[xs, ys, xd, yd, xe, ye]` in metres.
    pub features: [f64; FEATURES],
    /// Flight time in seconds.
    pub label: f64,
}

impl Row {
    pub fn new(start: Point2, delivery: Point2, end: Point2, label: f64) -> Self {
        Self {
            features: [start.x, start.y, delivery.x, delivery.y, end.x, end.y],
            label,
        }
    }

    pub fn points(&self) -> [Point2; 3] {
        let f = &self.features;
        [Point2::new(f[0], f[1]), Point2::new(f[2], f[3]), Point2::new(f[4], f[5])]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Row>,
    /// Free-form origin tag, e.g. `scenario=1 seed=7`.
    pub provenance: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    xs: f64,
    ys: f64,
    xd: f64,
    yd: f64,
    xe: f64,
    ye: f64,
    label_s: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Deterministic shuffle-split into `(train, holdout)`.
    pub fn split(&self, holdout_fraction: f64, seed: u64) -> (Dataset, Dataset) {
        use rand::seq::SliceRandom;
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let k = ((self.rows.len() as f64) * holdout_fraction).round() as usize;
        let pick = |ix: &[usize]| Dataset {
            rows: ix.iter().map(|&i| self.rows[i]).collect(),
            provenance: self.provenance.clone(),
        };
        (pick(&idx[k..]), pick(&idx[..k]))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), PredictorError> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            let f = r.features;
            out.serialize(CsvRow {
                xs: f[0],
                ys: f[1],
                xd: f[2],
                yd: f[3],
                xe: f[4],
                ye: f[5],
                label_s: r.label,
            })?;
        }
        if self.rows.is_empty() {
            out.write_record(["xs", "ys", "xd", "yd", "xe", "ye", "label_s"])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Dataset, PredictorError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for rec in rd.deserialize() {
            let c: CsvRow = rec?;
            rows.push(Row {
                features: [c.xs, c.ys, c.xd, c.yd, c.xe, c.ye],
                label: c.label_s,
            });
        }
        Ok(Dataset { rows, provenance: None })
    }
}

const ROW_ATTEMPTS: usize = 200;

/// `count` rows of uniform (start, delivery, end) triples labelled with the
/// drone-only flight duration. Row `i` draws from its own seeded stream, so the
/// output does not depend on thread scheduling.
pub fn generate_training_data(
    region: &Region,
    count: usize,
    params: &DronePhysicsParams,
    ras: &[Ras],
    seed: u64,
) -> Result<Dataset, PredictorError> {
    if count == 0 {
        return Err(PredictorError::TooFewRows { needed: 1, got: 0 });
    }
    params.validate()?;
    let ctx = FlightContext::new(params, ras);
    let one = |i: usize| -> Result<Row, PredictorError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for _ in 0..ROW_ATTEMPTS {
            let pts = [region.sample(&mut rng), region.sample(&mut rng), region.sample(&mut rng)];
            if pts.iter().any(|&p| ctx.visibility().blocked(p)) {
                continue;
            }
            let [s, d, e] = pts;
            let bed = params.truck_bed_alt;
            match ctx.drone_only(s.with_z(bed), d.with_z(0.0), e.with_z(bed)) {
                Ok(t) => return Ok(Row::new(s, d, e, t.duration)),
                Err(PhysicsError::Geometry(_)) | Err(PhysicsError::RasViolation { .. }) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(PredictorError::RetryBudget {
            row: i,
            attempts: ROW_ATTEMPTS,
        })
    };
    let mut rows = (0..count).into_par_iter().map(one).collect::<Result<Vec<_>, _>>()?;
    // Coincident draws are astronomically unlikely; drop any that do occur.
    let mut seen = HashSet::new();
    rows.retain(|r| seen.insert(r.features.map(f64::to_bits)));
    Ok(Dataset {
        rows,
        provenance: Some(format!("seed={seed} count={count} ras={}", ras.len())),
    })
}
