use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{DronePhysicsParams, PhysicsError};
use crate::geometry::{l2_approx_2d, Point3};

/// Drone state at one minor step. `acc` and `climb_rate` act over `[t, t + Δf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub t: f64,
    pub pos: Point3,
    pub vel: [f64; 2],
    pub acc: [f64; 2],
    pub climb_rate: f64,
    pub airborne: bool,
    /// `(altitude band, throttle band)` while airborne.
    pub band: Option<(usize, usize)>,
    pub energy: f64,
}

impl DroneState {
    pub fn speed(&self) -> f64 {
        l2_approx_2d(self.vel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<DroneState>,
    pub delivery_step: usize,
    pub landing_step: usize,
    pub duration: f64,
    pub total_energy: f64,
}

impl Trajectory {
    pub fn airborne_states(&self) -> impl Iterator<Item = &DroneState> {
        self.states.iter().filter(|s| s.airborne)
    }

    pub fn hover_steps(&self) -> usize {
        self.states
            .iter()
            .filter(|s| s.airborne && s.vel == [0.0, 0.0] && s.acc == [0.0, 0.0] && s.climb_rate == 0.0)
            .count()
    }

    /// Recomputes bands and cumulative energy in place.
    pub fn assign_energy(&mut self, params: &DronePhysicsParams) -> Result<f64, PhysicsError> {
        let mut g = 0.0;
        for s in self.states.iter_mut() {
            s.energy = g;
            if s.airborne {
                let i = params.altitude_band(s.pos.z)?;
                let j = params.throttle_band(s.speed());
                s.band = Some((i, j));
                g += params.dt_minor * (params.climb_surplus * s.climb_rate.max(0.0) + params.energy_rate[i][j]);
            } else {
                s.band = None;
            }
        }
        self.total_energy = g;
        Ok(g)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x", "y", "z", "vx", "vy", "vz", "b", "i", "j", "g"])?;
        for s in &self.states {
            let (i, j) = s.band.map_or((String::new(), String::new()), |(i, j)| (i.to_string(), j.to_string()));
            out.write_record([
                s.t.to_string(),
                s.pos.x.to_string(),
                s.pos.y.to_string(),
                s.pos.z.to_string(),
                s.vel[0].to_string(),
                s.vel[1].to_string(),
                s.climb_rate.to_string(),
                u8::from(s.airborne).to_string(),
                i,
                j,
                s.energy.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Total energy `Σ Δf(ξ·vᶻ⁺ + η_ij)` over airborne states, with bands re-derived from each state.
pub fn energy_of_trajectory(traj: &Trajectory, params: &DronePhysicsParams) -> Result<f64, PhysicsError> {
    let mut t = traj.clone();
    t.assign_energy(params)
}
