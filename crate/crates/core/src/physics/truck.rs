use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruckSegment {
    pub from: Point2,
    pub to: Point2,
    pub speed: f64,
}

impl TruckSegment {
    pub fn time(&self) -> f64 {
        self.from.dist(self.to) / self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruckSample {
    pub t: f64,
    pub pos: Point2,
    pub vel: [f64; 2],
}

/// Truck motion sampled on the minor-step grid.
///
/// A sample's velocity is that of the segment being driven just before the
/// sample instant, so the truck is at rest at `t = 0` and after parking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedTruckPath {
    pub dt: f64,
    pub segments: Vec<TruckSegment>,
    /// Continuous travel time to the final point.
    pub arrival: f64,
    start: Point2,
    ends: Vec<f64>,
}

impl TimedTruckPath {
    pub fn new(start: Point2, segments: Vec<TruckSegment>, dt: f64) -> Self {
        let segments: Vec<TruckSegment> = segments.into_iter().filter(|s| s.from.dist(s.to) > 0.0).collect();
        let mut ends = Vec::with_capacity(segments.len());
        let mut acc = 0.0;
        for s in &segments {
            acc += s.time();
            ends.push(acc);
        }
        Self {
            dt,
            segments,
            arrival: acc,
            start,
            ends,
        }
    }

    /// Truck parked at `p` for the whole horizon.
    pub fn parked(p: Point2, dt: f64) -> Self {
        Self::new(p, Vec::new(), dt)
    }

    /// Straight legs through `points` at constant `speed`.
    pub fn through(points: &[Point2], speed: f64, dt: f64) -> Self {
        let segments = points
            .windows(2)
            .map(|w| TruckSegment { from: w[0], to: w[1], speed })
            .collect();
        Self::new(points[0], segments, dt)
    }

    pub fn start(&self) -> Point2 {
        self.start
    }

    pub fn end(&self) -> Point2 {
        self.segments.last().map_or(self.start, |s| s.to)
    }

    /// First sample index at which the truck is parked at its final point.
    pub fn parked_index(&self) -> usize {
        (self.arrival / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn sample(&self, k: usize) -> TruckSample {
        let t = k as f64 * self.dt;
        if k == 0 || self.segments.is_empty() {
            return TruckSample { t, pos: self.start_or_end(k), vel: [0.0, 0.0] };
        }
        if t > self.arrival + 1e-9 * self.arrival.max(1.0) {
            return TruckSample { t, pos: self.end(), vel: [0.0, 0.0] };
        }
        let i = self.ends.partition_point(|&e| e < t - 1e-12).min(self.segments.len() - 1);
        let seg = &self.segments[i];
        let t0 = if i == 0 { 0.0 } else { self.ends[i - 1] };
        let len = seg.from.dist(seg.to);
        let dir = [(seg.to.x - seg.from.x) / len, (seg.to.y - seg.from.y) / len];
        let along = ((t - t0) * seg.speed).min(len);
        TruckSample {
            t,
            pos: seg.from.offset(dir, along),
            vel: [dir[0] * seg.speed, dir[1] * seg.speed],
        }
    }

    fn start_or_end(&self, k: usize) -> Point2 {
        if k == 0 {
            self.start
        } else {
            self.end()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_conventions() {
        let p = TimedTruckPath::through(&[Point2::new(0.0, 0.0), Point2::new(100.0, 0.0), Point2::new(100.0, 50.0)], 10.0, 1.0);
        assert_eq!(p.arrival, 15.0);
        assert_eq!(p.sample(0).vel, [0.0, 0.0]);
        assert_eq!(p.sample(3).pos, Point2::new(30.0, 0.0));
        assert_eq!(p.sample(10).vel, [10.0, 0.0]);
        assert_eq!(p.sample(10).pos, Point2::new(100.0, 0.0));
        assert_eq!(p.sample(12).pos, Point2::new(100.0, 20.0));
        assert_eq!(p.sample(15).pos, Point2::new(100.0, 50.0));
        assert_eq!(p.sample(16).vel, [0.0, 0.0]);
        assert_eq!(p.parked_index(), 15);
        let still = TimedTruckPath::parked(Point2::new(3.0, 4.0), 1.0);
        assert_eq!(still.sample(7).pos, Point2::new(3.0, 4.0));
        assert_eq!(still.parked_index(), 0);
    }
}
