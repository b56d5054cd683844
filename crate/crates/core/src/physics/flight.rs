//! Deterministic flight construction on the minor-step grid.
//!
//! A flight is assembled from rest-to-rest horizontal legs at cruise altitude,
//! vertical phases over fixed points, hover padding and, for landings on a moving
//! truck, a co-moving approach. Delivery and landing samples fall on major-step
//! boundaries.

use serde::{Deserialize, Serialize};

use super::profile::{discrete_profile, discrete_steps, vertical_rates};
use super::truck::TimedTruckPath;
use super::{DronePhysicsParams, DroneState, PhysicsError, Trajectory};
use crate::geometry::{l2_approx_2d, point_in_ras, Point2, Point3, Ras, VisibilityMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EndTarget {
    Fixed(Point3),
    Truck(TimedTruckPath),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightSpec {
    pub start: Point3,
    /// Horizontal velocity at take-off; the oracle requires a start from rest.
    pub start_velocity: [f64; 2],
    pub delivery: Point3,
    pub end: EndTarget,
    pub ras: Vec<Ras>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoordinatedOptions {
    /// Pick the least-energy landing among those finishing by the deadline.
    pub tie_break: bool,
    /// Latest acceptable landing time; the earliest landing is used when it is later.
    pub deadline: Option<f64>,
}

struct Builder<'p> {
    params: &'p DronePhysicsParams,
    states: Vec<DroneState>,
}

impl<'p> Builder<'p> {
    fn new(params: &'p DronePhysicsParams, start: Point3) -> Self {
        Self {
            params,
            states: vec![DroneState {
                t: 0.0,
                pos: start,
                vel: [0.0, 0.0],
                acc: [0.0, 0.0],
                climb_rate: 0.0,
                airborne: true,
                band: None,
                energy: 0.0,
            }],
        }
    }

    fn step_index(&self) -> usize {
        self.states.len() - 1
    }

    fn last(&self) -> &DroneState {
        self.states.last().expect("builder is never empty")
    }

    fn step(&mut self, acc: [f64; 2], climb: f64) {
        let dt = self.params.dt_minor;
        let n = self.states.len();
        let cur = &mut self.states[n - 1];
        cur.acc = acc;
        cur.climb_rate = climb;
        let next = DroneState {
            t: n as f64 * dt,
            pos: Point3::new(
                cur.pos.x + dt * cur.vel[0] + 0.5 * dt * dt * acc[0],
                cur.pos.y + dt * cur.vel[1] + 0.5 * dt * dt * acc[1],
                cur.pos.z + dt * climb,
            ),
            vel: [cur.vel[0] + dt * acc[0], cur.vel[1] + dt * acc[1]],
            acc: [0.0, 0.0],
            climb_rate: 0.0,
            airborne: true,
            band: None,
            energy: 0.0,
        };
        self.states.push(next);
    }

    fn hover(&mut self, n: usize) {
        for _ in 0..n {
            self.step([0.0, 0.0], 0.0);
        }
    }

    fn vertical(&mut self, target_z: f64) {
        let p = self.params;
        let dz = target_z - self.last().pos.z;
        let rate = if dz > 0.0 { p.climb_max } else { p.descent_max };
        for r in vertical_rates(dz, rate, p.dt_minor) {
            self.step([0.0, 0.0], r);
        }
        self.states.last_mut().unwrap().pos.z = target_z;
    }

    fn leg(&mut self, path: &[Point2], cap: f64) {
        let p = self.params;
        for w in path.windows(2) {
            let d = w[1].sub(w[0]);
            let len = l2_approx_2d(d);
            if len <= 0.0 {
                continue;
            }
            let dir = [d[0] / len, d[1] / len];
            let prof = discrete_profile(len, cap, p.a_max, p.dt_minor);
            for k in 0..prof.steps() {
                let a = (prof.speeds[k + 1] - prof.speeds[k]) / p.dt_minor;
                self.step([a * dir[0], a * dir[1]], 0.0);
            }
            let last = self.states.last_mut().unwrap();
            last.pos.x = w[1].x;
            last.pos.y = w[1].y;
            last.vel = [0.0, 0.0];
        }
    }

    /// Accelerate from rest to `u` over `n_acc` steps, then descend to `z` at constant `u`.
    fn co_moving_descent(&mut self, u: [f64; 2], n_acc: usize, z: f64, land_at: Point2) {
        let p = self.params;
        if n_acc > 0 {
            let a = [u[0] / (n_acc as f64 * p.dt_minor), u[1] / (n_acc as f64 * p.dt_minor)];
            for _ in 0..n_acc {
                self.step(a, 0.0);
            }
            self.states.last_mut().unwrap().vel = u;
        }
        let dz = z - self.last().pos.z;
        for r in vertical_rates(dz, p.descent_max, p.dt_minor) {
            self.step([0.0, 0.0], r);
        }
        let last = self.states.last_mut().unwrap();
        last.pos = land_at.with_z(z);
        last.vel = u;
    }

    fn finish(mut self, delivery_step: usize) -> Result<Trajectory, PhysicsError> {
        let landing_step = self.step_index();
        let dt = self.params.dt_minor;
        let last = self.states.last_mut().unwrap();
        last.airborne = false;
        let mut traj = Trajectory {
            dt,
            states: self.states,
            delivery_step,
            landing_step,
            duration: landing_step as f64 * dt,
            total_energy: 0.0,
        };
        let g = traj.assign_energy(self.params)?;
        if g > self.params.energy_budget() {
            return Err(PhysicsError::InfeasibleEnergy { required: g, budget: self.params.energy_budget() });
        }
        Ok(traj)
    }
}

fn ceil_to(k: usize, m: usize) -> usize {
    k.div_ceil(m) * m
}

/// Reusable flight planner bound to a parameter set and RAS layout.
#[derive(Debug, Clone)]
pub struct FlightContext<'a> {
    pub params: &'a DronePhysicsParams,
    pub ras: &'a [Ras],
    vis: VisibilityMap,
}

enum Landing {
    Landed(Trajectory),
    TooEarly,
    Impossible,
}

/// State after the delivery half of a flight, hovering at cruise over P.
struct Outbound<'p> {
    builder: Builder<'p>,
    delivery_step: usize,
}

impl<'a> FlightContext<'a> {
    pub fn new(params: &'a DronePhysicsParams, ras: &'a [Ras]) -> Self {
        Self {
            params,
            ras,
            vis: VisibilityMap::new(ras, params.ras_clearance, params.cruise_alt),
        }
    }

    pub fn visibility(&self) -> &VisibilityMap {
        &self.vis
    }

    fn leg_steps(&self, path: &[Point2], cap: f64) -> usize {
        path.windows(2)
            .map(|w| discrete_steps(l2_approx_2d(w[1].sub(w[0])), cap, self.params.a_max, self.params.dt_minor))
            .sum()
    }

    fn vertical_steps(&self, from: f64, to: f64) -> usize {
        let rate = if to > from { self.params.climb_max } else { self.params.descent_max };
        vertical_rates(to - from, rate, self.params.dt_minor).len()
    }

    fn outbound(&self, start: Point3, delivery: Point3, cap: f64) -> Result<Outbound<'a>, PhysicsError> {
        let p = self.params;
        let path = self.vis.path(start.xy(), delivery.xy())?;
        let mut b = Builder::new(p, start);
        b.vertical(p.cruise_alt);
        b.leg(&path, cap);
        let down = self.vertical_steps(p.cruise_alt, delivery.z);
        let delivery_step = ceil_to(b.step_index() + down, p.n_f);
        b.hover(delivery_step - down - b.step_index());
        b.vertical(delivery.z);
        let last = b.states.last_mut().unwrap();
        last.pos = delivery;
        b.vertical(p.cruise_alt);
        Ok(Outbound { builder: b, delivery_step })
    }

    fn check_spec(&self, start: Point3, delivery: Point3) -> Result<(), PhysicsError> {
        for p in [start, delivery] {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(PhysicsError::InvalidSpec("non-finite coordinate".into()));
            }
            if p.z < self.params.h_lo || p.z > self.params.cruise_alt {
                return Err(PhysicsError::InvalidSpec("endpoint altitude outside [h_lo, cruise_alt]".into()));
            }
        }
        Ok(())
    }

    /// Minimum-time flight start → delivery → fixed end, at speed cap `v_max`.
    pub fn drone_only(&self, start: Point3, delivery: Point3, end: Point3) -> Result<Trajectory, PhysicsError> {
        self.drone_only_capped(start, delivery, end, self.params.v_max, self.params.v_max)
    }

    fn drone_only_capped(
        &self,
        start: Point3,
        delivery: Point3,
        end: Point3,
        cap_out: f64,
        cap_back: f64,
    ) -> Result<Trajectory, PhysicsError> {
        self.check_spec(start, delivery)?;
        self.check_spec(end, delivery)?;
        if end.z > self.params.truck_bed_alt + 1e-9 {
            return Err(PhysicsError::InvalidSpec("end altitude above the truck bed".into()));
        }
        let p = self.params;
        let Outbound { mut builder, delivery_step } = self.outbound(start, delivery, cap_out)?;
        let path = self.vis.path(delivery.xy(), end.xy())?;
        builder.leg(&path, cap_back);
        let down = self.vertical_steps(p.cruise_alt, end.z);
        let landing = ceil_to(builder.step_index() + down, p.n_f);
        builder.hover(landing - down - builder.step_index());
        builder.vertical(end.z);
        builder.states.last_mut().unwrap().pos = end;
        let traj = builder.finish(delivery_step)?;
        self.check_ras(&traj)?;
        Ok(traj)
    }

    fn check_ras(&self, traj: &Trajectory) -> Result<(), PhysicsError> {
        let margin = self.params.delivery_radius;
        for s in traj.airborne_states() {
            if let Some(r) = self.ras.iter().find(|r| point_in_ras(s.pos, r, margin)) {
                return Err(PhysicsError::RasViolation { ras: r.id.clone(), t: s.t });
            }
        }
        Ok(())
    }

    /// Landing geometry for sample `k`: (approach start B', truck velocity, acceleration steps).
    fn approach(&self, truck: &TimedTruckPath, k: usize) -> Option<(Point2, [f64; 2], usize, Point2)> {
        let p = self.params;
        let s = truck.sample(k);
        let speed = l2_approx_2d(s.vel);
        if speed > p.v_max + 1e-12 {
            return None;
        }
        let n_acc = (speed / (p.a_max * p.dt_minor) - 1e-12).ceil().max(0.0) as usize;
        let n_desc = self.vertical_steps(p.cruise_alt, p.truck_bed_alt);
        let back = p.dt_minor * (n_desc as f64 + 0.5 * n_acc as f64);
        let b = s.pos.offset(s.vel, -back);
        Some((b, s.vel, n_acc, s.pos))
    }

    /// Try to complete `out` with a landing at truck sample `k`.
    fn land_at(&self, out: &Outbound<'a>, truck: &TimedTruckPath, k: usize, cap: f64) -> Result<Landing, PhysicsError> {
        let p = self.params;
        let Some((b_prime, u, n_acc, land)) = self.approach(truck, k) else {
            return Ok(Landing::Impossible);
        };
        let n_desc = self.vertical_steps(p.cruise_alt, p.truck_bed_alt);
        let here = out.builder.step_index();
        let at_p = out.builder.last().pos.xy();
        let straight = discrete_steps(l2_approx_2d(b_prime.sub(at_p)), cap, p.a_max, p.dt_minor);
        if here + n_acc + n_desc + straight > k {
            return Ok(Landing::TooEarly);
        }
        let Ok(path) = self.vis.path(at_p, b_prime) else {
            return Ok(Landing::Impossible);
        };
        if here + self.leg_steps(&path, cap) + n_acc + n_desc > k {
            return Ok(Landing::TooEarly);
        }
        let mut b = Builder {
            params: p,
            states: out.builder.states.clone(),
        };
        b.leg(&path, cap);
        b.hover(k - n_acc - n_desc - b.step_index());
        b.co_moving_descent(u, n_acc, p.truck_bed_alt, land);
        let traj = match b.finish(out.delivery_step) {
            Ok(t) => t,
            Err(PhysicsError::InfeasibleEnergy { .. }) => return Ok(Landing::Impossible),
            Err(e) => return Err(e),
        };
        if self.check_ras(&traj).is_err() {
            return Ok(Landing::Impossible);
        }
        Ok(Landing::Landed(traj))
    }

    /// First feasible landing sample, scanning major-step boundaries.
    fn earliest_landing(&self, out: &Outbound<'a>, truck: &TimedTruckPath, cap: f64) -> Result<Option<Trajectory>, PhysicsError> {
        let p = self.params;
        let n_desc = self.vertical_steps(p.cruise_alt, p.truck_bed_alt);
        let mut k = ceil_to(out.builder.step_index() + n_desc, p.n_f);
        let parked = truck.parked_index();
        loop {
            match self.land_at(out, truck, k, cap)? {
                Landing::Landed(t) => return Ok(Some(t)),
                // Truck is at rest from here on; only an early arrival can still change.
                Landing::Impossible if k > parked => return Ok(None),
                _ => {}
            }
            k += p.n_f;
        }
    }

    /// Earliest rendezvous with the truck after serving `delivery`.
    pub fn coordinated(
        &self,
        start: Point3,
        delivery: Point3,
        truck: &TimedTruckPath,
        opts: CoordinatedOptions,
    ) -> Result<Trajectory, PhysicsError> {
        self.check_spec(start, delivery)?;
        let p = self.params;
        if truck.start().dist(start.xy()) > 1e-6 {
            return Err(PhysicsError::InvalidSpec("take-off point differs from the truck's start".into()));
        }
        let out = self.outbound(start, delivery, p.v_max)?;
        let fastest = self.earliest_landing(&out, truck, p.v_max)?.ok_or(PhysicsError::NoRendezvous)?;
        if !opts.tie_break {
            return Ok(fastest);
        }
        let deadline = opts.deadline.unwrap_or(0.0).max(fastest.duration);
        let last_k = ((deadline / p.dt_minor) + 1e-9).floor() as usize;
        let mut best = fastest;
        let caps: Vec<f64> = p.throttle_band_speeds.iter().copied().filter(|&c| c > 0.0).rev().collect();
        for &cap_out in &caps {
            let Ok(out) = self.outbound(start, delivery, cap_out) else {
                continue;
            };
            for &cap_back in &caps {
                let mut k = ceil_to(out.builder.step_index() + self.vertical_steps(p.cruise_alt, p.truck_bed_alt), p.n_f);
                while k <= last_k {
                    if let Landing::Landed(t) = self.land_at(&out, truck, k, cap_back)? {
                        if t.total_energy < best.total_energy - 1e-9 {
                            best = t;
                        }
                    }
                    k += p.n_f;
                }
            }
        }
        Ok(best)
    }
}

fn validate_start(spec: &FlightSpec) -> Result<(), PhysicsError> {
    if spec.start_velocity != [0.0, 0.0] {
        return Err(PhysicsError::InvalidSpec("take-off must start from rest".into()));
    }
    Ok(())
}

/// Minimum-time flight to a fixed end point.
pub fn plan_drone_only_flight(spec: &FlightSpec, params: &DronePhysicsParams) -> Result<Trajectory, PhysicsError> {
    validate_start(spec)?;
    let EndTarget::Fixed(end) = spec.end else {
        return Err(PhysicsError::InvalidSpec("drone-only flight needs a fixed end point".into()));
    };
    FlightContext::new(params, &spec.ras).drone_only(spec.start, spec.delivery, end)
}

/// Earliest-rendezvous flight landing on the truck.
pub fn plan_coordinated_flight(spec: &FlightSpec, params: &DronePhysicsParams) -> Result<Trajectory, PhysicsError> {
    plan_coordinated_flight_with(spec, params, CoordinatedOptions::default())
}

pub fn plan_coordinated_flight_with(
    spec: &FlightSpec,
    params: &DronePhysicsParams,
    opts: CoordinatedOptions,
) -> Result<Trajectory, PhysicsError> {
    validate_start(spec)?;
    let EndTarget::Truck(truck) = &spec.end else {
        return Err(PhysicsError::InvalidSpec("coordinated flight needs a truck path".into()));
    };
    FlightContext::new(params, &spec.ras).coordinated(spec.start, spec.delivery, truck, opts)
}
