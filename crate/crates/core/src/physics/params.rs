use serde::{Deserialize, Serialize};

use super::PhysicsError;

/// Drone, truck-bed and energy-model constants (SI units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DronePhysicsParams {
    pub v_max: f64,
    pub a_max: f64,
    pub climb_max: f64,
    pub descent_max: f64,
    pub h_lo: f64,
    pub h_hi: f64,
    pub h_min_airborne: f64,
    pub cruise_alt: f64,
    pub truck_bed_alt: f64,
    pub delivery_radius: f64,
    pub dt_minor: f64,
    pub n_f: usize,
    /// Major-step horizon for MILP export; 0 picks the smallest valid horizon.
    pub t_major: usize,
    pub altitude_band_limits: Vec<f64>,
    pub throttle_band_speeds: Vec<f64>,
    /// `energy_rate[i][j]`: watts in altitude band i, throttle band j.
    pub energy_rate: Vec<Vec<f64>>,
    pub climb_surplus: f64,
    pub battery_capacity: f64,
    pub min_charge: f64,
    pub big_m: f64,
    /// Horizontal clearance kept from RAS faces when routing.
    pub ras_clearance: f64,
}

impl Default for DronePhysicsParams {
    fn default() -> Self {
        Self {
            v_max: 19.44,
            a_max: 3.0,
            climb_max: 5.0,
            descent_max: 3.0,
            h_lo: 0.0,
            h_hi: 150.0,
            h_min_airborne: 10.0,
            cruise_alt: 50.0,
            truck_bed_alt: 1.5,
            delivery_radius: 2.0,
            dt_minor: 1.0,
            n_f: 5,
            t_major: 0,
            altitude_band_limits: vec![60.0, 150.0],
            throttle_band_speeds: vec![0.0, 7.0, 14.0, 19.44],
            energy_rate: vec![vec![500.0, 400.0, 350.0, 480.0], vec![520.0, 420.0, 370.0, 500.0]],
            climb_surplus: 40.0,
            battery_capacity: 550_000.0,
            min_charge: 50_000.0,
            big_m: 1.0e6,
            ras_clearance: 3.0,
        }
    }
}

impl DronePhysicsParams {
    pub fn major_dt(&self) -> f64 {
        self.dt_minor * self.n_f as f64
    }

    pub fn energy_budget(&self) -> f64 {
        self.battery_capacity - self.min_charge
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        let fail = |m: &str| Err(PhysicsError::InvalidParams(m.to_string()));
        let positive = [
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("climb_max", self.climb_max),
            ("descent_max", self.descent_max),
            ("dt_minor", self.dt_minor),
            ("big_m", self.big_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(&format!("{name} must be positive"));
            }
        }
        if self.n_f == 0 {
            return fail("n_f must be at least 1");
        }
        if !(0.0 <= self.h_lo
            && self.h_lo <= self.h_min_airborne
            && self.h_min_airborne <= self.cruise_alt
            && self.cruise_alt <= self.h_hi)
        {
            return fail("altitudes must satisfy 0 <= h_lo <= h_min <= cruise <= h_hi");
        }
        if !(self.truck_bed_alt >= 0.0 && self.truck_bed_alt < self.h_min_airborne.max(self.h_lo + 1e-9)) {
            return fail("truck_bed_alt must be in [0, h_min_airborne)");
        }
        if self.delivery_radius < 0.0 || self.ras_clearance < 0.0 {
            return fail("delivery_radius and ras_clearance must be nonnegative");
        }
        let h = &self.altitude_band_limits;
        if h.is_empty() || h.windows(2).any(|w| w[0] >= w[1]) || h[0] <= 0.0 {
            return fail("altitude_band_limits must be positive and strictly increasing");
        }
        if *h.last().unwrap() < self.cruise_alt {
            return fail("altitude bands must cover cruise_alt");
        }
        let th = &self.throttle_band_speeds;
        if th.is_empty() || th.windows(2).any(|w| w[0] >= w[1]) || th[0] < 0.0 {
            return fail("throttle_band_speeds must be nonnegative and strictly increasing");
        }
        if (th[th.len() - 1] - self.v_max).abs() > 1e-9 {
            return fail("the largest throttle band speed must equal v_max");
        }
        if self.energy_rate.len() != h.len() || self.energy_rate.iter().any(|r| r.len() != th.len()) {
            return fail("energy_rate must be (altitude bands) x (throttle bands)");
        }
        if self.energy_rate.iter().flatten().any(|&e| !(e > 0.0 && e.is_finite())) {
            return fail("energy_rate entries must be positive");
        }
        if self.climb_surplus < 0.0 {
            return fail("climb_surplus must be nonnegative");
        }
        if !(self.battery_capacity > self.min_charge && self.min_charge >= 0.0) {
            return fail("battery_capacity must exceed min_charge");
        }
        // Ground contact happens only in exempt major steps; the transit below h_min must fit in one.
        if self.h_min_airborne > self.major_dt() * self.climb_max.min(self.descent_max) + 1e-9 {
            return fail("h_min_airborne is unreachable from the ground within one major step");
        }
        Ok(())
    }

    /// Altitude band index for `z`.
    pub fn altitude_band(&self, z: f64) -> Result<usize, PhysicsError> {
        self.altitude_band_limits
            .iter()
            .position(|&h| z <= h + 1e-9)
            .ok_or(PhysicsError::BandError { altitude: z })
    }

    /// Throttle band whose speed is closest to `speed` (ties go to the lower band).
    pub fn throttle_band(&self, speed: f64) -> usize {
        let th = &self.throttle_band_speeds;
        let mut best = 0;
        for j in 1..th.len() {
            if (speed - th[j]).abs() < (speed - th[best]).abs() {
                best = j;
            }
        }
        best
    }

    /// Voronoi interval `[lo, hi]` of throttle band `j`.
    pub fn throttle_interval(&self, j: usize) -> (f64, f64) {
        let th = &self.throttle_band_speeds;
        let lo = if j == 0 { 0.0 } else { 0.5 * (th[j - 1] + th[j]) };
        let hi = if j + 1 == th.len() { self.v_max } else { 0.5 * (th[j] + th[j + 1]) };
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        DronePhysicsParams::default().validate().unwrap();
    }

    #[test]
    fn twenty_metre_floor_is_rejected() {
        let p = DronePhysicsParams {
            h_min_airborne: 20.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn bands() {
        let p = DronePhysicsParams::default();
        assert_eq!(p.altitude_band(50.0).unwrap(), 0);
        assert_eq!(p.altitude_band(60.0).unwrap(), 0);
        assert_eq!(p.altitude_band(61.0).unwrap(), 1);
        assert!(p.altitude_band(151.0).is_err());
        assert_eq!(p.throttle_band(0.0), 0);
        assert_eq!(p.throttle_band(3.5), 0);
        assert_eq!(p.throttle_band(3.6), 1);
        assert_eq!(p.throttle_band(19.0), 3);
        let (lo, hi) = p.throttle_interval(3);
        assert!((lo - 16.72).abs() < 1e-12 && hi == 19.44);
    }
}
