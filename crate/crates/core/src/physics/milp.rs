//! Mixed-integer model of one drone operation on the two-level time grid, plus
//! substitution of an oracle trajectory for solver-free certification.
//!
//! Major steps `k` carry status, delivery and position-norm variables; minor
//! steps `t` carry kinematics, energy, band and airspace variables. Minor step
//! `t` belongs to major step `t / n_f`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::flight::{EndTarget, FlightContext, FlightSpec};
use super::truck::TimedTruckPath;
use super::{DronePhysicsParams, PhysicsError, Trajectory};
use crate::geometry::{l2_approx_2d, Point3, Ras, LAMBDA2, LAMBDA3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    /// Model symbol this variable instantiates, e.g. `v^A` or `f`.
    pub symbol: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub family: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MilpMode {
    MinTime,
    /// Least energy subject to finishing by `t_star`.
    MinEnergy { t_star: f64 },
}

/// Where the flight must end.
#[derive(Debug, Clone, PartialEq)]
pub enum MilpEnd<'a> {
    Fixed(Point3),
    Truck(&'a TimedTruckPath),
}

/// Everything needed to lay out the model for one operation.
#[derive(Debug, Clone)]
pub struct MilpSetup<'a> {
    pub params: &'a DronePhysicsParams,
    pub start: Point3,
    pub delivery: Point3,
    pub end: MilpEnd<'a>,
    pub ras: &'a [Ras],
    pub major_steps: usize,
    pub mode: MilpMode,
}

/// Variable indices grouped by family; vectors are indexed by step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpLayout {
    pub major: usize,
    pub minor: usize,
    pub n_f: usize,
    pub t_o: Option<usize>,
    pub g_final: Option<usize>,
    pub b: Vec<usize>,
    pub b_plus: Vec<usize>,
    pub b_minus: Vec<usize>,
    pub d: Vec<usize>,
    pub w: [Vec<usize>; 3],
    pub w_abs: [Vec<usize>; 3],
    pub w_inf: Vec<usize>,
    pub w_l2: Vec<usize>,
    pub w_m: Vec<usize>,
    pub w_la: Vec<usize>,
    pub w_lb: Vec<usize>,
    pub w_d: [Vec<usize>; 3],
    pub r: [Vec<usize>; 3],
    pub v: [Vec<usize>; 2],
    pub v_abs: [Vec<usize>; 2],
    pub v_inf: Vec<usize>,
    pub v_l2: Vec<usize>,
    pub v_m: Vec<usize>,
    pub v_d: [Vec<usize>; 2],
    pub a: [Vec<usize>; 2],
    pub a_abs: [Vec<usize>; 2],
    pub a_inf: Vec<usize>,
    pub a_l2: Vec<usize>,
    pub a_m: Vec<usize>,
    pub a_d: [Vec<usize>; 2],
    pub vz_plus: Vec<usize>,
    pub vz_minus: Vec<usize>,
    pub g: Vec<usize>,
    /// `s[i][j][t]`: altitude band i, throttle band j at minor step t.
    pub s: Vec<Vec<Vec<usize>>>,
    /// `f[q][n][t]`: face n of RAS q separates the drone at minor step t.
    pub f: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpInstance {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Minimized linear objective.
    pub objective: Vec<(usize, f64)>,
    pub mode: MilpMode,
    pub coordinated: bool,
    pub big_m: f64,
    pub layout: MilpLayout,
}

impl MilpInstance {
    pub fn variable_index(&self) -> HashMap<&str, usize> {
        self.variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect()
    }

    /// Row counts per constraint family, in emission order.
    pub fn family_counts(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for c in &self.constraints {
            match out.last_mut() {
                Some((f, n)) if *f == c.family => *n += 1,
                _ => out.push((c.family.clone(), 1)),
            }
        }
        out
    }

    pub fn binary_count(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Largest bound, integrality or row violation of assignment `x`.
    pub fn certify(&self, x: &[f64]) -> Certificate {
        let mut worst = Certificate {
            max_violation: 0.0,
            worst: None,
        };
        let mut note = |v: f64, what: &str| {
            if v > worst.max_violation {
                worst.max_violation = v;
                worst.worst = Some(what.to_string());
            }
        };
        for (var, &val) in self.variables.iter().zip(x) {
            note((var.lower - val).max(0.0).max(val - var.upper), &var.name);
            if var.kind == VarKind::Binary {
                note((val - val.round()).abs(), &var.name);
            }
        }
        for c in &self.constraints {
            note(c.violation(x), &c.name);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub max_violation: f64,
    /// Name of the most violated row or variable.
    pub worst: Option<String>,
}

struct Model {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl Model {
    fn var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64, symbol: &str) -> usize {
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
            symbol: symbol.to_string(),
        });
        self.vars.len() - 1
    }

    fn free(&mut self, name: String, symbol: &str) -> usize {
        self.var(name, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, symbol)
    }

    fn nonneg(&mut self, name: String, symbol: &str) -> usize {
        self.var(name, VarKind::Continuous, 0.0, f64::INFINITY, symbol)
    }

    fn binary(&mut self, name: String, symbol: &str) -> usize {
        self.var(name, VarKind::Binary, 0.0, 1.0, symbol)
    }

    fn row(&mut self, family: &str, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            if let Some(e) = merged.iter_mut().find(|e| e.0 == i) {
                e.1 += c;
            } else {
                merged.push((i, c));
            }
        }
        merged.retain(|e| e.1 != 0.0);
        self.rows.push(Constraint {
            name,
            family: family.to_string(),
            terms: merged,
            sense,
            rhs,
        });
    }
}

const AXES: [&str; 3] = ["x", "y", "z"];

/// Builds the model for an explicit horizon; no horizon sufficiency check.
pub fn build_milp(setup: &MilpSetup) -> MilpInstance {
    let p = setup.params;
    let big_m = p.big_m;
    let nf = p.n_f;
    let tm = setup.major_steps;
    let nt = tm * nf;
    let dt = p.dt_minor;
    let coordinated = matches!(setup.end, MilpEnd::Truck(_));
    let nl = p.altitude_band_limits.len();
    let nv = p.throttle_band_speeds.len();
    let mut m = Model {
        vars: Vec::new(),
        rows: Vec::new(),
    };
    let mut l = MilpLayout {
        major: tm,
        minor: nt,
        n_f: nf,
        ..Default::default()
    };

    match setup.mode {
        MilpMode::MinTime => l.t_o = Some(m.nonneg("t_o".into(), "t_o")),
        MilpMode::MinEnergy { .. } => l.g_final = Some(m.nonneg("g_T".into(), "g_o^T")),
    }
    for k in 0..tm {
        l.b.push(m.binary(format!("b_{k}"), "b"));
        l.b_plus.push(m.binary(format!("bp_{k}"), "b^+"));
        l.b_minus.push(m.binary(format!("bm_{k}"), "b^-"));
        l.d.push(m.binary(format!("d_{k}"), "d"));
        for i in 0..3 {
            l.w[i].push(m.free(format!("w{}_{k}", AXES[i]), "w"));
            l.w_abs[i].push(m.nonneg(format!("wA{}_{k}", AXES[i]), "w^A"));
            l.w_d[i].push(m.binary(format!("wD{}_{k}", AXES[i]), "w^D"));
        }
        l.w_inf.push(m.nonneg(format!("wInf_{k}"), "w^inf"));
        l.w_l2.push(m.nonneg(format!("wL2_{k}"), "w^L2"));
        l.w_m.push(m.nonneg(format!("wM_{k}"), "w^M"));
        l.w_la.push(m.binary(format!("wLA_{k}"), "w^LA"));
        l.w_lb.push(m.binary(format!("wLB_{k}"), "w^LB"));
    }
    for t in 0..nt {
        for i in 0..3 {
            l.r[i].push(m.free(format!("r{}_{t}", AXES[i]), "r"));
        }
        for i in 0..2 {
            l.v[i].push(m.free(format!("v{}_{t}", AXES[i]), "v"));
            l.v_abs[i].push(m.nonneg(format!("vA{}_{t}", AXES[i]), "v^A"));
            l.v_d[i].push(m.binary(format!("vD{}_{t}", AXES[i]), "v^D"));
            l.a[i].push(m.free(format!("a{}_{t}", AXES[i]), "a"));
            l.a_abs[i].push(m.nonneg(format!("aA{}_{t}", AXES[i]), "a^A"));
            l.a_d[i].push(m.binary(format!("aD{}_{t}", AXES[i]), "a^D"));
        }
        l.v_inf.push(m.nonneg(format!("vInf_{t}"), "v^inf"));
        l.v_l2.push(m.nonneg(format!("vL2_{t}"), "v^L2"));
        l.v_m.push(m.binary(format!("vM_{t}"), "v^M"));
        l.a_inf.push(m.nonneg(format!("aInf_{t}"), "a^inf"));
        l.a_l2.push(m.nonneg(format!("aL2_{t}"), "a^L2"));
        l.a_m.push(m.binary(format!("aM_{t}"), "a^M"));
        l.vz_plus.push(m.nonneg(format!("vzp_{t}"), "v^z+"));
        l.vz_minus.push(m.nonneg(format!("vzm_{t}"), "v^z-"));
        l.g.push(m.nonneg(format!("g_{t}"), "g"));
    }
    l.s = (0..nl)
        .map(|i| (0..nv).map(|j| (0..nt).map(|t| m.binary(format!("s_{i}_{j}_{t}"), "s")).collect()).collect())
        .collect();
    l.f = setup
        .ras
        .iter()
        .enumerate()
        .map(|(q, ras)| {
            (0..ras.halfspaces.len())
                .map(|n| (0..nt).map(|t| m.binary(format!("f_{q}_{n}_{t}"), "f")).collect())
                .collect()
        })
        .collect();

    let maj = |t: usize| t / nf;
    let end_time = |k: usize| ((k + 1) * nf) as f64 * dt;
    let truck_samples: Vec<_> = match &setup.end {
        MilpEnd::Truck(path) => (0..nt).map(|t| path.sample(t)).collect(),
        MilpEnd::Fixed(_) => Vec::new(),
    };

    // Operation duration.
    match setup.mode {
        MilpMode::MinTime => {
            let t_o = l.t_o.unwrap();
            for k in 0..tm {
                m.row("duration", format!("duration_{k}"), vec![(l.b[k], end_time(k)), (t_o, -1.0)], Sense::Le, 0.0);
            }
            if let MilpEnd::Truck(path) = &setup.end {
                m.row("truck_duration", "truck_duration".into(), vec![(t_o, 1.0)], Sense::Ge, path.arrival);
            }
        }
        MilpMode::MinEnergy { t_star } => {
            for k in 0..tm {
                m.row("tiebreak_duration", format!("tiebreak_duration_{k}"), vec![(l.b[k], end_time(k))], Sense::Le, t_star);
            }
        }
    }

    // Resting on the truck.
    if coordinated {
        let z = p.truck_bed_alt;
        for t in 0..nt {
            let b = l.b[maj(t)];
            m.row("rest_z", format!("rest_z_lo_{t}"), vec![(l.r[2][t], 1.0), (b, big_m)], Sense::Ge, z);
            m.row("rest_z", format!("rest_z_hi_{t}"), vec![(l.r[2][t], 1.0), (b, -big_m)], Sense::Le, z);
        }
        for t in 0..nt {
            let b = l.b[maj(t)];
            let s = &truck_samples[t];
            for (i, pt) in [s.pos.x, s.pos.y].into_iter().enumerate() {
                m.row("rest_pos", format!("rest_pos{}_lo_{t}", AXES[i]), vec![(l.r[i][t], 1.0), (b, big_m)], Sense::Ge, pt);
                m.row("rest_pos", format!("rest_pos{}_hi_{t}", AXES[i]), vec![(l.r[i][t], 1.0), (b, -big_m)], Sense::Le, pt);
            }
        }
        for t in 0..nt {
            let b = l.b[maj(t)];
            let s = &truck_samples[t];
            for i in 0..2 {
                m.row("rest_vel", format!("rest_vel{}_lo_{t}", AXES[i]), vec![(l.v[i][t], 1.0), (b, big_m)], Sense::Ge, s.vel[i]);
                m.row("rest_vel", format!("rest_vel{}_hi_{t}", AXES[i]), vec![(l.v[i][t], 1.0), (b, -big_m)], Sense::Le, s.vel[i]);
            }
        }
    }

    // Horizontal kinematics.
    let half = 0.5 * dt * dt;
    let kin_pos = |l: &MilpLayout, i: usize, t: usize| {
        vec![(l.r[i][t + 1], 1.0), (l.r[i][t], -1.0), (l.v[i][t], -dt), (l.a[i][t], -half)]
    };
    let kin_vel = |l: &MilpLayout, i: usize, t: usize| vec![(l.v[i][t + 1], 1.0), (l.v[i][t], -1.0), (l.a[i][t], -dt)];
    if coordinated {
        for (family, next_step, pos) in [
            ("kin_pos_next", true, true),
            ("kin_pos_cur", false, true),
            ("kin_vel_next", true, false),
            ("kin_vel_cur", false, false),
        ] {
            for t in 0..nt.saturating_sub(1) {
                let b = l.b[maj(if next_step { t + 1 } else { t })];
                for i in 0..2 {
                    let base = if pos { kin_pos(&l, i, t) } else { kin_vel(&l, i, t) };
                    let mut lo = base.clone();
                    lo.push((b, -big_m));
                    m.row(family, format!("{family}{}_lo_{t}", AXES[i]), lo, Sense::Ge, -big_m);
                    let mut hi = base;
                    hi.push((b, big_m));
                    m.row(family, format!("{family}{}_hi_{t}", AXES[i]), hi, Sense::Le, big_m);
                }
            }
        }
    } else {
        for t in 0..nt.saturating_sub(1) {
            for i in 0..2 {
                m.row("kin_pos", format!("kin_pos{}_{t}", AXES[i]), kin_pos(&l, i, t), Sense::Eq, 0.0);
            }
        }
        for t in 0..nt.saturating_sub(1) {
            for i in 0..2 {
                m.row("kin_vel", format!("kin_vel{}_{t}", AXES[i]), kin_vel(&l, i, t), Sense::Eq, 0.0);
            }
        }
    }

    // Airborne status.
    for k in 0..tm {
        m.row("airborne_link", format!("airborne_link_{k}"), vec![(l.b[k], 1.0), (l.b_plus[k], -1.0), (l.b_minus[k], -1.0)], Sense::Eq, -1.0);
    }
    for k in 0..tm.saturating_sub(1) {
        m.row("takeoff_once", format!("takeoff_once_{k}"), vec![(l.b_plus[k], 1.0), (l.b_plus[k + 1], -1.0)], Sense::Le, 0.0);
    }
    for k in 0..tm.saturating_sub(1) {
        m.row("landing_once", format!("landing_once_{k}"), vec![(l.b_minus[k + 1], 1.0), (l.b_minus[k], -1.0)], Sense::Le, 0.0);
    }

    // Delivery visit.
    let pd = setup.delivery.as_array();
    for k in 0..tm {
        for i in 0..3 {
            m.row("delivery_offset", format!("delivery_offset{}_{k}", AXES[i]), vec![(l.w[i][k], 1.0), (l.r[i][k * nf], -1.0)], Sense::Eq, -pd[i]);
        }
    }
    for k in 0..tm {
        m.row("delivery_radius", format!("delivery_radius_{k}"), vec![(l.w_l2[k], 1.0), (l.d[k], big_m)], Sense::Le, p.delivery_radius + big_m);
    }
    m.row("delivery_once", "delivery_once".into(), l.d.iter().map(|&d| (d, 1.0)).collect(), Sense::Eq, 1.0);

    // Altitude limits.
    for t in 0..nt {
        let b = l.b[maj(t)];
        m.row("altitude_limits", format!("altitude_lo_{t}"), vec![(l.r[2][t], 1.0), (b, -p.h_lo)], Sense::Ge, 0.0);
        m.row(
            "altitude_limits",
            format!("altitude_hi_{t}"),
            vec![(l.r[2][t], 1.0), (b, -p.h_hi + p.truck_bed_alt)],
            Sense::Le,
            p.truck_bed_alt,
        );
    }
    for t in 1..nt {
        let k = maj(t);
        let mut terms = vec![(l.r[2][t], 1.0), (l.b[k], -p.h_min_airborne), (l.d[k], big_m)];
        if k + 1 < tm {
            terms.push((l.d[k + 1], big_m));
        }
        terms.push((l.b_plus[k], big_m));
        if k > 0 {
            terms.push((l.b_plus[k - 1], -big_m));
        }
        terms.push((l.b_minus[k], big_m));
        if k + 1 < tm {
            terms.push((l.b_minus[k + 1], -big_m));
        }
        m.row("min_altitude", format!("min_altitude_{t}"), terms, Sense::Ge, 0.0);
    }

    // Start and end positions.
    let r0 = setup.start.as_array();
    for i in 0..3 {
        m.row("start", format!("start{}", AXES[i]), vec![(l.r[i][0], 1.0)], Sense::Eq, r0[i]);
    }
    if nt > 0 {
        let last = nt - 1;
        let end = match &setup.end {
            MilpEnd::Fixed(e) => e.as_array(),
            MilpEnd::Truck(_) => {
                let s = &truck_samples[last];
                [s.pos.x, s.pos.y, p.truck_bed_alt]
            }
        };
        for i in 0..3 {
            m.row("finish", format!("finish{}", AXES[i]), vec![(l.r[i][last], 1.0)], Sense::Eq, end[i]);
        }
    }

    // Vertical motion and speed limits.
    for t in 0..nt.saturating_sub(1) {
        m.row(
            "vertical_kin",
            format!("vertical_kin_{t}"),
            vec![(l.r[2][t + 1], 1.0), (l.r[2][t], -1.0), (l.vz_plus[t], -dt), (l.vz_minus[t], dt)],
            Sense::Eq,
            0.0,
        );
    }
    for t in 0..nt {
        m.row("climb_limit", format!("climb_limit_{t}"), vec![(l.vz_plus[t], 1.0)], Sense::Le, p.climb_max);
    }
    for t in 0..nt {
        m.row("descent_limit", format!("descent_limit_{t}"), vec![(l.vz_minus[t], 1.0)], Sense::Le, p.descent_max);
    }
    for t in 0..nt {
        let b = l.b[maj(t)];
        let riding = truck_samples.get(t).map_or(0.0, |s| l2_approx_2d(s.vel));
        m.row("speed_limit", format!("speed_limit_{t}"), vec![(l.v_l2[t], 1.0), (b, riding - p.v_max)], Sense::Le, riding);
    }
    for t in 0..nt {
        m.row("accel_limit", format!("accel_limit_{t}"), vec![(l.a_l2[t], 1.0), (l.b[maj(t)], -p.a_max)], Sense::Le, 0.0);
    }

    // Energy.
    for t in 0..nt {
        m.row("charge_cap", format!("charge_cap_{t}"), vec![(l.g[t], 1.0)], Sense::Le, p.energy_budget());
    }
    if nt > 0 {
        m.row("charge_init", "charge_init".into(), vec![(l.g[0], 1.0)], Sense::Eq, 0.0);
    }
    for t in 0..nt.saturating_sub(1) {
        let mut terms = vec![(l.g[t + 1], 1.0), (l.g[t], -1.0), (l.vz_plus[t], -dt * p.climb_surplus)];
        for i in 0..nl {
            for j in 0..nv {
                terms.push((l.s[i][j][t], -dt * p.energy_rate[i][j]));
            }
        }
        m.row("charge_update", format!("charge_update_{t}"), terms, Sense::Eq, 0.0);
    }
    for t in 0..nt {
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(nl * nv + 1);
        for i in 0..nl {
            for j in 0..nv {
                terms.push((l.s[i][j][t], 1.0));
            }
        }
        terms.push((l.b[maj(t)], -1.0));
        m.row("band_select", format!("band_select_{t}"), terms, Sense::Eq, 0.0);
    }
    for t in 0..nt {
        let b = l.b[maj(t)];
        let mut lo = vec![(l.v_l2[t], 1.0), (b, -big_m)];
        let mut hi = vec![(l.v_l2[t], 1.0), (b, big_m)];
        for i in 0..nl {
            for j in 0..nv {
                let (a, c) = p.throttle_interval(j);
                lo.push((l.s[i][j][t], -a));
                hi.push((l.s[i][j][t], -c));
            }
        }
        m.row("throttle_band", format!("throttle_band_lo_{t}"), lo, Sense::Ge, -big_m);
        m.row("throttle_band", format!("throttle_band_hi_{t}"), hi, Sense::Le, big_m);
    }
    for t in 0..nt {
        let b = l.b[maj(t)];
        let mut lo = vec![(l.r[2][t], 1.0), (b, -big_m)];
        let mut hi = vec![(l.r[2][t], 1.0), (b, big_m)];
        for i in 0..nl {
            let h_prev = if i == 0 { 0.0 } else { p.altitude_band_limits[i - 1] };
            for j in 0..nv {
                lo.push((l.s[i][j][t], -h_prev));
                hi.push((l.s[i][j][t], -p.altitude_band_limits[i]));
            }
        }
        m.row("altitude_band", format!("altitude_band_lo_{t}"), lo, Sense::Ge, -big_m);
        m.row("altitude_band", format!("altitude_band_hi_{t}"), hi, Sense::Le, big_m);
    }

    // Restricted airspace.
    for (q, ras) in setup.ras.iter().enumerate() {
        for (n, h) in ras.halfspaces.iter().enumerate() {
            for t in 0..nt {
                let mut terms: Vec<(usize, f64)> = (0..3).map(|i| (l.r[i][t], h.normal[i])).collect();
                terms.push((l.f[q][n][t], -big_m));
                m.row("ras_face", format!("ras_face_{q}_{n}_{t}"), terms, Sense::Ge, h.rhs - big_m);
            }
        }
    }
    for (q, ras) in setup.ras.iter().enumerate() {
        for t in 0..nt {
            let terms = (0..ras.halfspaces.len()).map(|n| (l.f[q][n][t], 1.0)).collect();
            m.row("ras_cover", format!("ras_cover_{q}_{t}"), terms, Sense::Ge, 1.0);
        }
    }

    // Norm linearizations of velocity and acceleration.
    for (tag, x, xa, xinf, xl2, xm, xd) in [
        ("vnorm", &l.v, &l.v_abs, &l.v_inf, &l.v_l2, &l.v_m, &l.v_d),
        ("anorm", &l.a, &l.a_abs, &l.a_inf, &l.a_l2, &l.a_m, &l.a_d),
    ] {
        let fam = |s: &str| format!("{tag}_{s}");
        for t in 0..nt {
            m.row(
                &fam("l2"),
                format!("{tag}_l2_{t}"),
                vec![(xl2[t], 1.0), (xa[0][t], -LAMBDA2), (xa[1][t], -LAMBDA2), (xinf[t], -(1.0 - LAMBDA2))],
                Sense::Eq,
                0.0,
            );
        }
        for t in 0..nt {
            for i in 0..2 {
                m.row(&fam("inf_bound"), format!("{tag}_inf_bound{}_{t}", AXES[i]), vec![(xa[i][t], 1.0), (xinf[t], -1.0)], Sense::Le, 0.0);
            }
        }
        for t in 0..nt {
            let base = vec![(xa[0][t], 1.0), (xinf[t], -1.0)];
            let mut lo = base.clone();
            lo.push((xm[t], big_m));
            m.row(&fam("max_x"), format!("{tag}_max_x_lo_{t}"), lo, Sense::Ge, 0.0);
            let mut hi = base;
            hi.push((xm[t], -big_m));
            m.row(&fam("max_x"), format!("{tag}_max_x_hi_{t}"), hi, Sense::Le, 0.0);
        }
        for t in 0..nt {
            let base = vec![(xa[1][t], 1.0), (xinf[t], -1.0)];
            let mut lo = base.clone();
            lo.push((xm[t], -big_m));
            m.row(&fam("max_y"), format!("{tag}_max_y_lo_{t}"), lo, Sense::Ge, -big_m);
            let mut hi = base;
            hi.push((xm[t], big_m));
            m.row(&fam("max_y"), format!("{tag}_max_y_hi_{t}"), hi, Sense::Le, big_m);
        }
        for t in 0..nt {
            for i in 0..2 {
                m.row(&fam("abs_pos"), format!("{tag}_abs_pos{}_{t}", AXES[i]), vec![(x[i][t], 1.0), (xa[i][t], -1.0)], Sense::Le, 0.0);
            }
        }
        for t in 0..nt {
            for i in 0..2 {
                m.row(&fam("abs_neg"), format!("{tag}_abs_neg{}_{t}", AXES[i]), vec![(x[i][t], -1.0), (xa[i][t], -1.0)], Sense::Le, 0.0);
            }
        }
        for t in 0..nt {
            for i in 0..2 {
                let base = vec![(xa[i][t], 1.0), (x[i][t], -1.0)];
                let mut lo = base.clone();
                lo.push((xd[i][t], big_m));
                m.row(&fam("sign_pos"), format!("{tag}_sign_pos{}_lo_{t}", AXES[i]), lo, Sense::Ge, 0.0);
                let mut hi = base;
                hi.push((xd[i][t], -big_m));
                m.row(&fam("sign_pos"), format!("{tag}_sign_pos{}_hi_{t}", AXES[i]), hi, Sense::Le, 0.0);
            }
        }
        for t in 0..nt {
            for i in 0..2 {
                let base = vec![(xa[i][t], 1.0), (x[i][t], 1.0)];
                let mut lo = base.clone();
                lo.push((xd[i][t], -big_m));
                m.row(&fam("sign_neg"), format!("{tag}_sign_neg{}_lo_{t}", AXES[i]), lo, Sense::Ge, -big_m);
                let mut hi = base;
                hi.push((xd[i][t], big_m));
                m.row(&fam("sign_neg"), format!("{tag}_sign_neg{}_hi_{t}", AXES[i]), hi, Sense::Le, big_m);
            }
        }
    }

    // Norm linearization of the offset to the delivery point.
    for k in 0..tm {
        m.row(
            "wnorm_l2",
            format!("wnorm_l2_{k}"),
            vec![
                (l.w_l2[k], 1.0),
                (l.w_abs[0][k], -LAMBDA3),
                (l.w_abs[1][k], -LAMBDA3),
                (l.w_abs[2][k], -LAMBDA3),
                (l.w_inf[k], -(1.0 - LAMBDA3)),
            ],
            Sense::Eq,
            0.0,
        );
    }
    for k in 0..tm {
        m.row("wnorm_m_bound", format!("wnorm_m_bound_{k}"), vec![(l.w_m[k], 1.0), (l.w_inf[k], -1.0)], Sense::Le, 0.0);
    }
    for k in 0..tm {
        m.row("wnorm_z_bound", format!("wnorm_z_bound_{k}"), vec![(l.w_abs[2][k], 1.0), (l.w_inf[k], -1.0)], Sense::Le, 0.0);
    }
    for k in 0..tm {
        let base = vec![(l.w_m[k], 1.0), (l.w_inf[k], -1.0)];
        let mut lo = base.clone();
        lo.push((l.w_lb[k], big_m));
        m.row("wnorm_max_m", format!("wnorm_max_m_lo_{k}"), lo, Sense::Ge, 0.0);
        let mut hi = base;
        hi.push((l.w_lb[k], -big_m));
        m.row("wnorm_max_m", format!("wnorm_max_m_hi_{k}"), hi, Sense::Le, 0.0);
    }
    for k in 0..tm {
        let base = vec![(l.w_abs[2][k], 1.0), (l.w_inf[k], -1.0)];
        let mut lo = base.clone();
        lo.push((l.w_lb[k], -big_m));
        m.row("wnorm_max_z", format!("wnorm_max_z_lo_{k}"), lo, Sense::Ge, -big_m);
        let mut hi = base;
        hi.push((l.w_lb[k], big_m));
        m.row("wnorm_max_z", format!("wnorm_max_z_hi_{k}"), hi, Sense::Le, big_m);
    }
    for k in 0..tm {
        for i in 0..2 {
            m.row("wnorm_xy_bound", format!("wnorm_xy_bound{}_{k}", AXES[i]), vec![(l.w_abs[i][k], 1.0), (l.w_m[k], -1.0)], Sense::Le, 0.0);
        }
    }
    for k in 0..tm {
        let base = vec![(l.w_abs[0][k], 1.0), (l.w_m[k], -1.0)];
        let mut lo = base.clone();
        lo.push((l.w_la[k], big_m));
        m.row("wnorm_max_x", format!("wnorm_max_x_lo_{k}"), lo, Sense::Ge, 0.0);
        let mut hi = base;
        hi.push((l.w_la[k], -big_m));
        m.row("wnorm_max_x", format!("wnorm_max_x_hi_{k}"), hi, Sense::Le, 0.0);
    }
    for k in 0..tm {
        let base = vec![(l.w_abs[1][k], 1.0), (l.w_m[k], -1.0)];
        let mut lo = base.clone();
        lo.push((l.w_la[k], -big_m));
        m.row("wnorm_max_y", format!("wnorm_max_y_lo_{k}"), lo, Sense::Ge, -big_m);
        let mut hi = base;
        hi.push((l.w_la[k], big_m));
        m.row("wnorm_max_y", format!("wnorm_max_y_hi_{k}"), hi, Sense::Le, big_m);
    }
    for k in 0..tm {
        for i in 0..3 {
            m.row("wnorm_abs_pos", format!("wnorm_abs_pos{}_{k}", AXES[i]), vec![(l.w[i][k], 1.0), (l.w_abs[i][k], -1.0)], Sense::Le, 0.0);
        }
    }
    for k in 0..tm {
        for i in 0..3 {
            m.row("wnorm_abs_neg", format!("wnorm_abs_neg{}_{k}", AXES[i]), vec![(l.w[i][k], -1.0), (l.w_abs[i][k], -1.0)], Sense::Le, 0.0);
        }
    }
    for k in 0..tm {
        for i in 0..3 {
            let base = vec![(l.w_abs[i][k], 1.0), (l.w[i][k], -1.0)];
            let mut lo = base.clone();
            lo.push((l.w_d[i][k], big_m));
            m.row("wnorm_sign_pos", format!("wnorm_sign_pos{}_lo_{k}", AXES[i]), lo, Sense::Ge, 0.0);
            let mut hi = base;
            hi.push((l.w_d[i][k], -big_m));
            m.row("wnorm_sign_pos", format!("wnorm_sign_pos{}_hi_{k}", AXES[i]), hi, Sense::Le, 0.0);
        }
    }
    for k in 0..tm {
        for i in 0..3 {
            let base = vec![(l.w_abs[i][k], 1.0), (l.w[i][k], 1.0)];
            let mut lo = base.clone();
            lo.push((l.w_d[i][k], -big_m));
            m.row("wnorm_sign_neg", format!("wnorm_sign_neg{}_lo_{k}", AXES[i]), lo, Sense::Ge, -big_m);
            let mut hi = base;
            hi.push((l.w_d[i][k], big_m));
            m.row("wnorm_sign_neg", format!("wnorm_sign_neg{}_hi_{k}", AXES[i]), hi, Sense::Le, big_m);
        }
    }

    if let MilpMode::MinEnergy { .. } = setup.mode {
        if nt > 0 {
            m.row("tiebreak_energy", "tiebreak_energy".into(), vec![(l.g_final.unwrap(), 1.0), (l.g[nt - 1], -1.0)], Sense::Eq, 0.0);
        }
    }

    let objective = match setup.mode {
        MilpMode::MinTime => vec![(l.t_o.unwrap(), 1.0)],
        MilpMode::MinEnergy { .. } => vec![(l.g_final.unwrap(), 1.0)],
    };
    MilpInstance {
        variables: m.vars,
        constraints: m.rows,
        objective,
        mode: setup.mode,
        coordinated,
        big_m,
        layout: l,
    }
}

/// Smallest major-step horizon covering 1.5x `duration`.
pub fn horizon_for(duration: f64, params: &DronePhysicsParams) -> usize {
    ((1.5 * duration) / params.major_dt() - 1e-9).ceil().max(1.0) as usize + 1
}

/// Runs the oracle for `spec`, then builds the model on a horizon of `params.t_major`
/// major steps (or the smallest adequate horizon when that is 0).
pub fn build_trajectory_milp(
    spec: &FlightSpec,
    params: &DronePhysicsParams,
    mode: MilpMode,
) -> Result<(MilpInstance, Trajectory), PhysicsError> {
    let ctx = FlightContext::new(params, &spec.ras);
    let traj = match &spec.end {
        EndTarget::Fixed(e) => ctx.drone_only(spec.start, spec.delivery, *e)?,
        EndTarget::Truck(path) => ctx.coordinated(spec.start, spec.delivery, path, Default::default())?,
    };
    let major_steps = if params.t_major > 0 { params.t_major } else { horizon_for(traj.duration, params) };
    let horizon = (major_steps * params.n_f) as f64 * params.dt_minor;
    if horizon < 1.5 * traj.duration || major_steps * params.n_f <= traj.landing_step {
        return Err(PhysicsError::HorizonTooShort {
            horizon,
            required: 1.5 * traj.duration,
        });
    }
    let end = match &spec.end {
        EndTarget::Fixed(e) => MilpEnd::Fixed(*e),
        EndTarget::Truck(path) => MilpEnd::Truck(path),
    };
    let setup = MilpSetup {
        params,
        start: spec.start,
        delivery: spec.delivery,
        end,
        ras: &spec.ras,
        major_steps,
        mode,
    };
    Ok((build_milp(&setup), traj))
}

fn abs_link(v: f64) -> (f64, f64) {
    (v.abs(), if v < 0.0 { 1.0 } else { 0.0 })
}

/// Variable assignment reproducing `traj` on the model's grid.
///
/// After landing the drone rests at the fixed end point or rides the truck.
pub fn trajectory_assignment(
    milp: &MilpInstance,
    traj: &Trajectory,
    setup: &MilpSetup,
) -> Result<Vec<f64>, PhysicsError> {
    let p = setup.params;
    let l = &milp.layout;
    let nt = l.minor;
    if traj.landing_step >= nt {
        return Err(PhysicsError::HorizonTooShort {
            horizon: nt as f64 * p.dt_minor,
            required: traj.duration,
        });
    }
    let mut x = vec![0.0; milp.variables.len()];
    let landed = traj.states[traj.landing_step];
    let state = |t: usize| -> (Point3, [f64; 2], [f64; 2], f64, bool) {
        if t < traj.landing_step {
            let s = &traj.states[t];
            (s.pos, s.vel, s.acc, s.climb_rate, s.airborne)
        } else {
            match &setup.end {
                MilpEnd::Fixed(_) => (landed.pos, [0.0, 0.0], [0.0, 0.0], 0.0, false),
                MilpEnd::Truck(path) => {
                    let s = path.sample(t);
                    (s.pos.with_z(p.truck_bed_alt), s.vel, [0.0, 0.0], 0.0, false)
                }
            }
        }
    };
    let last_airborne_major = (traj.landing_step - 1) / l.n_f;
    let delivery_major = traj.delivery_step / l.n_f;
    for k in 0..l.major {
        let airborne = k <= last_airborne_major;
        x[l.b[k]] = f64::from(u8::from(airborne));
        x[l.b_plus[k]] = 1.0;
        x[l.b_minus[k]] = f64::from(u8::from(airborne));
        x[l.d[k]] = f64::from(u8::from(k == delivery_major));
        let (pos, ..) = state(k * l.n_f);
        let w = [pos.x - setup.delivery.x, pos.y - setup.delivery.y, pos.z - setup.delivery.z];
        let wa = w.map(f64::abs);
        for i in 0..3 {
            x[l.w[i][k]] = w[i];
            let (a, dsign) = abs_link(w[i]);
            x[l.w_abs[i][k]] = a;
            x[l.w_d[i][k]] = dsign;
        }
        let wm = wa[0].max(wa[1]);
        let winf = wm.max(wa[2]);
        x[l.w_m[k]] = wm;
        x[l.w_inf[k]] = winf;
        x[l.w_la[k]] = f64::from(u8::from(wa[1] >= wa[0]));
        x[l.w_lb[k]] = f64::from(u8::from(wa[2] >= wm));
        x[l.w_l2[k]] = LAMBDA3 * (wa[0] + wa[1] + wa[2]) + (1.0 - LAMBDA3) * winf;
    }
    let mut g = 0.0;
    for t in 0..nt {
        let (pos, vel, acc, climb, airborne) = state(t);
        let pa = pos.as_array();
        for i in 0..3 {
            x[l.r[i][t]] = pa[i];
        }
        for (vals, xs, xa, xinf, xl2, xm, xd) in [
            (vel, &l.v, &l.v_abs, &l.v_inf, &l.v_l2, &l.v_m, &l.v_d),
            (acc, &l.a, &l.a_abs, &l.a_inf, &l.a_l2, &l.a_m, &l.a_d),
        ] {
            for i in 0..2 {
                x[xs[i][t]] = vals[i];
                let (a, dsign) = abs_link(vals[i]);
                x[xa[i][t]] = a;
                x[xd[i][t]] = dsign;
            }
            let (ax, ay) = (vals[0].abs(), vals[1].abs());
            x[xinf[t]] = ax.max(ay);
            x[xm[t]] = f64::from(u8::from(ay >= ax));
            x[xl2[t]] = l2_approx_2d(vals);
        }
        x[l.vz_plus[t]] = climb.max(0.0);
        x[l.vz_minus[t]] = (-climb).max(0.0);
        x[l.g[t]] = g;
        if airborne {
            let i = p.altitude_band(pos.z)?;
            let j = p.throttle_band(l2_approx_2d(vel));
            x[l.s[i][j][t]] = 1.0;
            g += p.dt_minor * (p.climb_surplus * climb.max(0.0) + p.energy_rate[i][j]);
        }
        for (q, ras) in setup.ras.iter().enumerate() {
            if let Some(n) = ras.halfspaces.iter().position(|h| {
                h.normal[0] * pos.x + h.normal[1] * pos.y + h.normal[2] * pos.z >= h.rhs
            }) {
                x[l.f[q][n][t]] = 1.0;
            }
        }
    }
    if let Some(t_o) = l.t_o {
        let truck = match &setup.end {
            MilpEnd::Truck(path) => path.arrival,
            MilpEnd::Fixed(_) => 0.0,
        };
        x[t_o] = traj.duration.max(truck);
    }
    if let Some(gf) = l.g_final {
        x[gf] = x[l.g[nt - 1]];
    }
    Ok(x)
}
