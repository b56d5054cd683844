//! Drone operation-time estimators consumed by the planner.

use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{Point2, Ras};
use crate::physics::{DronePhysicsParams, FlightContext};
use crate::predictor::{Dataset, Mlp};

/// Estimated seconds for a drone flight start → delivery → end.
pub trait DroneTimeModel: Send + Sync {
    fn estimate(&self, start: Point2, delivery: Point2, end: Point2) -> f64;
}

#[derive(Debug, Clone)]
pub enum DroneTimeEstimator {
    /// Straight-line distance over drone speed.
    K { drone_speed: f64 },
    /// `K` scaled by a calibrated factor.
    MK { drone_speed: f64, correction: f64 },
    /// Learned regressor.
    P { model: Arc<Mlp> },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("no usable rows for calibration")]
    EmptyDataset,
    #[error("invalid estimator parameter: {0}")]
    Invalid(String),
}

fn k_time(speed: f64, s: Point2, d: Point2, e: Point2) -> f64 {
    (s.dist(d) + d.dist(e)) / speed
}

impl DroneTimeEstimator {
    pub fn k(drone_speed: f64) -> Result<Self, EstimatorError> {
        if !(drone_speed > 0.0) {
            return Err(EstimatorError::Invalid("drone_speed must be positive".into()));
        }
        Ok(Self::K { drone_speed })
    }

    pub fn mk(drone_speed: f64, correction: f64) -> Result<Self, EstimatorError> {
        if !(drone_speed > 0.0 && correction > 0.0) {
            return Err(EstimatorError::Invalid("drone_speed and correction must be positive".into()));
        }
        Ok(Self::MK { drone_speed, correction })
    }

    pub fn p(model: Mlp) -> Self {
        Self::P { model: Arc::new(model) }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::K { .. } => "K",
            Self::MK { .. } => "MK",
            Self::P { .. } => "P",
        }
    }
}

impl DroneTimeModel for DroneTimeEstimator {
    fn estimate(&self, s: Point2, d: Point2, e: Point2) -> f64 {
        match self {
            Self::K { drone_speed } => k_time(*drone_speed, s, d, e),
            Self::MK { drone_speed, correction } => correction * k_time(*drone_speed, s, d, e),
            Self::P { model } => model.predict(&[s.x, s.y, d.x, d.y, e.x, e.y]),
        }
    }
}

/// Mean of `label / K-estimate` over rows whose K-estimate is positive.
pub fn calibrate_mk(ds: &Dataset, drone_speed: f64) -> Result<f64, EstimatorError> {
    let ratios: Vec<f64> = ds
        .rows
        .iter()
        .filter_map(|r| {
            let [s, d, e] = r.points();
            let k = k_time(drone_speed, s, d, e);
            (k > 0.0).then(|| r.label / k)
        })
        .collect();
    if ratios.is_empty() {
        return Err(EstimatorError::EmptyDataset);
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Exact drone-only oracle time; a perfect predictor for the training labels.
pub struct OracleEstimator<'a> {
    ctx: FlightContext<'a>,
}

impl<'a> OracleEstimator<'a> {
    pub fn new(params: &'a DronePhysicsParams, ras: &'a [Ras]) -> Self {
        Self {
            ctx: FlightContext::new(params, ras),
        }
    }
}

impl DroneTimeModel for OracleEstimator<'_> {
    fn estimate(&self, s: Point2, d: Point2, e: Point2) -> f64 {
        let bed = self.ctx.params.truck_bed_alt;
        self.ctx
            .drone_only(s.with_z(bed), d.with_z(0.0), e.with_z(bed))
            .map_or(f64::INFINITY, |t| t.duration)
    }
}

impl<F: Fn(Point2, Point2, Point2) -> f64 + Send + Sync> DroneTimeModel for F {
    fn estimate(&self, s: Point2, d: Point2, e: Point2) -> f64 {
        self(s, d, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::Row;

    #[test]
    fn k_examples() {
        let k = DroneTimeEstimator::k(70.0 / 3.6).unwrap();
        let o = Point2::new(0.0, 0.0);
        assert_eq!(k.estimate(o, o, o), 0.0);
        let t = k.estimate(o, Point2::new(300.0, 400.0), Point2::new(600.0, 0.0));
        assert!((t - 1000.0 / (70.0 / 3.6)).abs() < 1e-12);
        assert!((t - 51.43).abs() < 0.005);
        let mk = DroneTimeEstimator::mk(70.0 / 3.6, 1.0).unwrap();
        assert_eq!(mk.estimate(o, Point2::new(3.0, 4.0), Point2::new(6.0, 0.0)), k.estimate(o, Point2::new(3.0, 4.0), Point2::new(6.0, 0.0)));
    }

    #[test]
    fn calibration() {
        let v = 10.0;
        let mk_row = |s: Point2, d: Point2, e: Point2, f: f64| Row::new(s, d, e, f * (s.dist(d) + d.dist(e)) / v);
        let o = Point2::new(0.0, 0.0);
        let ds = Dataset {
            rows: vec![
                mk_row(o, Point2::new(30.0, 40.0), o, 2.0),
                mk_row(Point2::new(5.0, 5.0), Point2::new(-30.0, 9.0), Point2::new(1.0, 1.0), 2.0),
                Row::new(o, o, o, 60.0),
            ],
            provenance: None,
        };
        assert!((calibrate_mk(&ds, v).unwrap() - 2.0).abs() < 1e-12);
        let single = Dataset {
            rows: vec![mk_row(o, Point2::new(10.0, 0.0), o, 1.7)],
            provenance: None,
        };
        assert!((calibrate_mk(&single, v).unwrap() - 1.7).abs() < 1e-12);
        let degenerate = Dataset {
            rows: vec![Row::new(o, o, o, 60.0)],
            provenance: None,
        };
        assert_eq!(calibrate_mk(&degenerate, v), Err(EstimatorError::EmptyDataset));
    }

    #[test]
    fn invalid_parameters() {
        assert!(DroneTimeEstimator::k(0.0).is_err());
        assert!(DroneTimeEstimator::mk(1.0, -1.0).is_err());
    }
}
