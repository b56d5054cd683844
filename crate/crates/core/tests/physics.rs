use dronetour::geometry::{l2_approx_2d, point_in_ras, Point2, Point3, Ras};
use dronetour::physics::lp::{export_milp, parse_lp};
use dronetour::physics::milp::{build_milp, trajectory_assignment, MilpEnd, MilpSetup, Sense, VarKind};
use dronetour::physics::*;
use proptest::prelude::*;

fn params() -> DronePhysicsParams {
    DronePhysicsParams::default()
}

fn fixed_spec(start: Point3, delivery: Point3, end: Point3, ras: Vec<Ras>) -> FlightSpec {
    FlightSpec {
        start,
        start_velocity: [0.0, 0.0],
        delivery,
        end: EndTarget::Fixed(end),
        ras,
    }
}

// Step-by-step reference simulation, written without the library's profile helpers.

#[derive(Clone, Copy)]
enum Phase {
    Vertical(f64, f64),
    Leg(f64),
    HoverTo(usize),
}

struct Sim {
    /// (altitude, horizontal speed, climb rate) at the start of each airborne step.
    steps: Vec<(f64, f64, f64)>,
}

fn leg_speeds(d: f64, p: &DronePhysicsParams) -> Vec<f64> {
    let dt = p.dt_minor;
    for n in 1usize.. {
        let v = |k: usize| p.v_max.min(p.a_max * dt * k as f64).min(p.a_max * dt * (n - k) as f64);
        let mut covered = 0.0;
        for k in 0..n {
            covered += dt * (v(k) + v(k + 1)) / 2.0;
        }
        if covered >= d {
            return (0..n).map(|k| v(k) * d / covered).collect();
        }
    }
    unreachable!()
}

impl Sim {
    fn run(phases: &[Phase], p: &DronePhysicsParams) -> Sim {
        let mut steps = Vec::new();
        let mut z = 0.0;
        for ph in phases {
            match *ph {
                Phase::Vertical(from, to) => {
                    z = from;
                    let rate = if to > from { p.climb_max } else { -p.descent_max };
                    while (to - z).abs() > 1e-9 {
                        let dz = if (to - z).abs() < rate.abs() * p.dt_minor { to - z } else { rate * p.dt_minor };
                        steps.push((z, 0.0, dz / p.dt_minor));
                        z += dz;
                    }
                }
                Phase::Leg(d) => {
                    for v in leg_speeds(d, p) {
                        steps.push((z, v, 0.0));
                    }
                }
                Phase::HoverTo(multiple_plus) => {
                    while (steps.len() + multiple_plus) % p.n_f != 0 {
                        steps.push((z, 0.0, 0.0));
                    }
                }
            }
        }
        Sim { steps }
    }

    fn energy(&self, p: &DronePhysicsParams) -> f64 {
        let th = &p.throttle_band_speeds;
        self.steps
            .iter()
            .map(|&(z, v, c)| {
                let i = p.altitude_band_limits.iter().position(|&h| z <= h).unwrap();
                let mut j = 0;
                for k in 0..th.len() {
                    if (v - th[k]).abs() < (v - th[j]).abs() {
                        j = k;
                    }
                }
                p.dt_minor * (p.climb_surplus * c.max(0.0) + p.energy_rate[i][j])
            })
            .sum()
    }
}

fn descent_steps(from: f64, to: f64, rate: f64) -> usize {
    ((from - to) / rate - 1e-9).ceil() as usize
}

#[test]
fn degenerate_flight_is_a_pure_vertical_cycle() {
    let p = params();
    let o = Point3::new(0.0, 0.0, 0.0);
    let t = plan_drone_only_flight(&fixed_spec(o, o, o, vec![]), &p).unwrap();
    let up = (p.cruise_alt / p.climb_max).ceil() as usize;
    let down = descent_steps(p.cruise_alt, 0.0, p.descent_max);
    let half = (up + down).div_ceil(p.n_f) * p.n_f;
    assert_eq!(t.delivery_step, half);
    assert_eq!(t.duration, (2 * half) as f64 * p.dt_minor);
}

#[test]
fn seven_hundred_metre_round_trip_matches_step_simulation() {
    let p = params();
    let start = Point3::new(0.0, 0.0, 1.5);
    let deliv = Point3::new(0.0, 700.0, 0.0);
    let t = plan_drone_only_flight(&fixed_spec(start, deliv, start, vec![]), &p).unwrap();
    let down_to_p = descent_steps(50.0, 0.0, p.descent_max);
    let down_to_bed = descent_steps(50.0, 1.5, p.descent_max);
    let sim = Sim::run(
        &[
            Phase::Vertical(1.5, 50.0),
            Phase::Leg(700.0),
            Phase::HoverTo(down_to_p),
            Phase::Vertical(50.0, 0.0),
            Phase::Vertical(0.0, 50.0),
            Phase::Leg(700.0),
            Phase::HoverTo(down_to_bed),
            Phase::Vertical(50.0, 1.5),
        ],
        &p,
    );
    assert_eq!(t.landing_step, sim.steps.len());
    assert_eq!(t.duration, sim.steps.len() as f64 * p.dt_minor);
    assert!((t.total_energy - sim.energy(&p)).abs() < 1e-6, "{} vs {}", t.total_energy, sim.energy(&p));
    let pos = t.states[t.delivery_step].pos;
    assert!(l2_approx_2d([pos.x - deliv.x, pos.y - deliv.y]).max((pos.z - deliv.z).abs()) <= p.delivery_radius);
}

#[test]
fn blocking_ras_lengthens_the_flight() {
    let p = params();
    let start = Point3::new(0.0, 0.0, 1.5);
    let deliv = Point3::new(0.0, 700.0, 0.0);
    let free = plan_drone_only_flight(&fixed_spec(start, deliv, start, vec![]), &p).unwrap();
    let wall = Ras::axis_box("wall", Point3::new(-80.0, 300.0, 0.0), Point3::new(60.0, 400.0, 200.0));
    let blocked = plan_drone_only_flight(&fixed_spec(start, deliv, start, vec![wall.clone()]), &p).unwrap();
    assert!(blocked.duration > free.duration);
    assert!(blocked.airborne_states().all(|s| !point_in_ras(s.pos, &wall, p.delivery_radius)));
}

#[test]
fn enclosed_delivery_has_no_path() {
    let p = params();
    let ring: Vec<Ras> = [
        ((-100.0, 600.0), (100.0, 620.0)),
        ((-100.0, 780.0), (100.0, 800.0)),
        ((-100.0, 600.0), (-80.0, 800.0)),
        ((80.0, 600.0), (100.0, 800.0)),
    ]
    .iter()
    .enumerate()
    .map(|(i, &((x0, y0), (x1, y1)))| Ras::axis_box(format!("r{i}"), Point3::new(x0, y0, 0.0), Point3::new(x1, y1, 200.0)))
    .collect();
    let o = Point3::new(0.0, 0.0, 1.5);
    let err = plan_drone_only_flight(&fixed_spec(o, Point3::new(0.0, 700.0, 0.0), o, ring), &p).unwrap_err();
    assert!(matches!(err, PhysicsError::Geometry(_)));
}

#[test]
fn energy_budget_is_enforced() {
    let p = DronePhysicsParams {
        battery_capacity: 60_000.0,
        min_charge: 50_000.0,
        ..params()
    };
    let o = Point3::new(0.0, 0.0, 1.5);
    let err = plan_drone_only_flight(&fixed_spec(o, Point3::new(0.0, 700.0, 0.0), o, vec![]), &p).unwrap_err();
    assert!(matches!(err, PhysicsError::InfeasibleEnergy { .. }));
}

fn coordinated_spec(delivery: Point3, truck: TimedTruckPath) -> FlightSpec {
    FlightSpec {
        start: truck.start().with_z(1.5),
        start_velocity: [0.0, 0.0],
        delivery,
        end: EndTarget::Truck(truck),
        ras: vec![],
    }
}

#[test]
fn parked_truck_reduces_to_fixed_end() {
    let p = params();
    let home = Point2::new(0.0, 0.0);
    let d = Point3::new(300.0, 400.0, 0.0);
    let coord = plan_coordinated_flight(&coordinated_spec(d, TimedTruckPath::parked(home, p.dt_minor)), &p).unwrap();
    let fixed = plan_drone_only_flight(&fixed_spec(home.with_z(1.5), d, home.with_z(1.5), vec![]), &p).unwrap();
    assert_eq!(coord.duration, fixed.duration);
    assert!((coord.total_energy - fixed.total_energy).abs() < 1e-9);
}

#[test]
fn flyover_truck_is_caught_no_later_than_its_destination() {
    let p = params();
    let truck = TimedTruckPath::through(&[Point2::new(0.0, 0.0), Point2::new(0.0, 1400.0)], 11.11, p.dt_minor);
    let d = Point3::new(0.0, 700.0, 0.0);
    let coord = plan_coordinated_flight(&coordinated_spec(d, truck.clone()), &p).unwrap();
    let fixed = plan_drone_only_flight(
        &fixed_spec(Point3::new(0.0, 0.0, 1.5), d, Point3::new(0.0, 1400.0, 1.5), vec![]),
        &p,
    )
    .unwrap();
    assert!(coord.duration <= fixed.duration);
    let land = coord.states[coord.landing_step];
    let s = truck.sample(coord.landing_step);
    assert!(land.pos.xy().dist(s.pos) <= 1e-6);
    assert!((land.vel[0] - s.vel[0]).abs() <= 1e-6 && (land.vel[1] - s.vel[1]).abs() <= 1e-6);
    assert!((land.pos.z - p.truck_bed_alt).abs() <= 1e-9);
}

#[test]
fn early_drone_hovers_and_pays_for_it() {
    let p = params();
    let truck = TimedTruckPath::through(&[Point2::new(0.0, 0.0), Point2::new(400.0, 0.0)], 2.0, p.dt_minor);
    let t = plan_coordinated_flight(&coordinated_spec(Point3::new(100.0, 50.0, 0.0), truck), &p).unwrap();
    assert!(t.hover_steps() >= 1);
    let hover_rate = p.energy_rate[p.altitude_band(p.cruise_alt).unwrap()][0];
    let no_hover: f64 = t
        .airborne_states()
        .filter(|s| !(s.vel == [0.0, 0.0] && s.acc == [0.0, 0.0] && s.climb_rate == 0.0))
        .map(|s| {
            let (i, j) = s.band.unwrap();
            p.dt_minor * (p.climb_surplus * s.climb_rate.max(0.0) + p.energy_rate[i][j])
        })
        .sum();
    assert!(t.total_energy > no_hover);
    assert!((t.total_energy - no_hover - hover_rate * t.hover_steps() as f64 * p.dt_minor).abs() < 1e-6);
}

#[test]
fn tie_break_never_costs_more_energy_or_time_past_deadline() {
    let p = params();
    let truck = TimedTruckPath::through(&[Point2::new(0.0, 0.0), Point2::new(1500.0, 0.0)], 11.11, p.dt_minor);
    let spec = coordinated_spec(Point3::new(300.0, 300.0, 0.0), truck.clone());
    let fast = plan_coordinated_flight(&spec, &p).unwrap();
    let opts = CoordinatedOptions {
        tie_break: true,
        deadline: Some(truck.arrival),
    };
    let lean = plan_coordinated_flight_with(&spec, &p, opts).unwrap();
    assert!(lean.total_energy <= fast.total_energy + 1e-9);
    assert!(lean.duration <= truck.arrival.max(fast.duration) + 1e-9);
}

#[test]
fn moving_start_is_rejected() {
    let p = params();
    let o = Point3::new(0.0, 0.0, 1.5);
    let mut spec = fixed_spec(o, Point3::new(10.0, 0.0, 0.0), o, vec![]);
    spec.start_velocity = [1.0, 0.0];
    assert!(matches!(plan_drone_only_flight(&spec, &p), Err(PhysicsError::InvalidSpec(_))));
}

#[test]
fn trajectory_csv_has_expected_columns() {
    let p = params();
    let o = Point3::new(0.0, 0.0, 1.5);
    let t = plan_drone_only_flight(&fixed_spec(o, Point3::new(50.0, 0.0, 0.0), o, vec![]), &p).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x,y,z,vx,vy,vz,b,i,j,g");
    assert_eq!(text.lines().count(), t.states.len() + 1);
}

// Model census at two major steps, one minor step each, no RAS.

fn small_setup<'a>(p: &'a DronePhysicsParams, end: MilpEnd<'a>, mode: MilpMode) -> MilpSetup<'a> {
    MilpSetup {
        params: p,
        start: Point3::new(0.0, 0.0, 1.5),
        delivery: Point3::new(5.0, 0.0, 0.0),
        end,
        ras: &[],
        major_steps: 2,
        mode,
    }
}

fn census_params() -> DronePhysicsParams {
    DronePhysicsParams {
        n_f: 1,
        h_min_airborne: 3.0,
        ..params()
    }
}

/// Expected (family, rows) list derived per constraint family.
fn expected_census(t: usize, nf: usize, bands: usize, coordinated: bool, time_mode: bool) -> Vec<(&'static str, usize)> {
    let n = t * nf;
    let mut v = Vec::new();
    if time_mode {
        v.push(("duration", t));
        if coordinated {
            v.push(("truck_duration", 1));
        }
    } else {
        v.push(("tiebreak_duration", t));
    }
    if coordinated {
        v.extend([("rest_z", 2 * n), ("rest_pos", 4 * n), ("rest_vel", 4 * n)]);
        v.extend([("kin_pos_next", 4 * (n - 1)), ("kin_pos_cur", 4 * (n - 1)), ("kin_vel_next", 4 * (n - 1)), ("kin_vel_cur", 4 * (n - 1))]);
    } else {
        v.extend([("kin_pos", 2 * (n - 1)), ("kin_vel", 2 * (n - 1))]);
    }
    v.extend([
        ("airborne_link", t),
        ("takeoff_once", t - 1),
        ("landing_once", t - 1),
        ("delivery_offset", 3 * t),
        ("delivery_radius", t),
        ("delivery_once", 1),
        ("altitude_limits", 2 * n),
        ("min_altitude", n - 1),
        ("start", 3),
        ("finish", 3),
        ("vertical_kin", n - 1),
        ("climb_limit", n),
        ("descent_limit", n),
        ("speed_limit", n),
        ("accel_limit", n),
        ("charge_cap", n),
        ("charge_init", 1),
        ("charge_update", n - 1),
        ("band_select", n),
        ("throttle_band", 2 * n),
        ("altitude_band", 2 * n),
    ]);
    let _ = bands;
    for tag in ["vnorm", "anorm"] {
        let fams: [(&str, usize); 8] = [
            ("l2", n),
            ("inf_bound", 2 * n),
            ("max_x", 2 * n),
            ("max_y", 2 * n),
            ("abs_pos", 2 * n),
            ("abs_neg", 2 * n),
            ("sign_pos", 4 * n),
            ("sign_neg", 4 * n),
        ];
        for (f, c) in fams {
            v.push((Box::leak(format!("{tag}_{f}").into_boxed_str()), c));
        }
    }
    v.extend([
        ("wnorm_l2", t),
        ("wnorm_m_bound", t),
        ("wnorm_z_bound", t),
        ("wnorm_max_m", 2 * t),
        ("wnorm_max_z", 2 * t),
        ("wnorm_xy_bound", 2 * t),
        ("wnorm_max_x", 2 * t),
        ("wnorm_max_y", 2 * t),
        ("wnorm_abs_pos", 3 * t),
        ("wnorm_abs_neg", 3 * t),
        ("wnorm_sign_pos", 6 * t),
        ("wnorm_sign_neg", 6 * t),
    ]);
    if !time_mode {
        v.push(("tiebreak_energy", 1));
    }
    v
}

fn expected_variables(t: usize, nf: usize, bands: usize) -> (usize, usize) {
    let n = t * nf;
    // per major: b, b+, b-, d, w(3), wA(3), wD(3), w_inf, w_l2, w_m, w_LA, w_LB
    // binaries: b, b+, b-, d, wD(3), w_LA, w_LB per major; vD(2), aD(2), v_M, a_M, s per minor
    // per minor: r(3), v(2), vA(2), vD(2), a(2), aA(2), aD(2), v_inf, v_l2, v_M, a_inf, a_l2, a_M, vz+, vz-, g, s(bands)
    let total = 1 + 18 * t + 24 * n + bands * n;
    let binaries = 9 * t + 6 * n + bands * n;
    (total, binaries)
}

#[test]
fn census_drone_only_and_coordinated() {
    let p = census_params();
    let bands = p.altitude_band_limits.len() * p.throttle_band_speeds.len();
    let truck = TimedTruckPath::through(&[Point2::new(0.0, 0.0), Point2::new(20.0, 0.0)], 10.0, p.dt_minor);
    for (end, coordinated) in [(MilpEnd::Fixed(Point3::new(0.0, 0.0, 1.5)), false), (MilpEnd::Truck(&truck), true)] {
        for (mode, time_mode) in [(MilpMode::MinTime, true), (MilpMode::MinEnergy { t_star: 10.0 }, false)] {
            let m = build_milp(&small_setup(&p, end.clone(), mode));
            let expected = expected_census(2, 1, bands, coordinated, time_mode);
            let got = m.family_counts();
            let got: Vec<(&str, usize)> = got.iter().map(|(f, c)| (f.as_str(), *c)).collect();
            assert_eq!(got, expected);
            assert_eq!(m.constraints.len(), expected.iter().map(|e| e.1).sum::<usize>());
            let (nv, nb) = expected_variables(2, 1, bands);
            assert_eq!(m.variables.len(), nv);
            assert_eq!(m.binary_count(), nb);
        }
    }
}

#[test]
fn binaries_are_zero_one_and_big_m_is_uniform() {
    let p = census_params();
    let m = build_milp(&small_setup(&p, MilpEnd::Fixed(Point3::new(0.0, 0.0, 1.5)), MilpMode::MinTime));
    for v in m.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        assert_eq!((v.lower, v.upper), (0.0, 1.0));
    }
    let text = export_milp(&m);
    let declared = text.lines().filter(|l| l.trim().starts_with("0.0 <= ") && l.trim().ends_with("<= 1.0")).count();
    assert_eq!(declared, m.binary_count());
    for c in &m.constraints {
        for &(_, a) in &c.terms {
            assert!(a.abs() <= p.big_m + p.h_hi, "{}: {a}", c.name);
        }
    }
}

#[test]
fn zero_deadline_forces_grounding() {
    let p = census_params();
    let m = build_milp(&small_setup(&p, MilpEnd::Fixed(Point3::new(0.0, 0.0, 1.5)), MilpMode::MinEnergy { t_star: 0.0 }));
    let rows: Vec<_> = m.constraints.iter().filter(|c| c.family == "tiebreak_duration").collect();
    assert_eq!(rows.len(), 2);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r.terms, vec![(m.layout.b[k], (k + 1) as f64 * p.dt_minor)]);
        assert_eq!((r.sense, r.rhs), (Sense::Le, 0.0));
    }
    // With every b at zero the take-off flag contradicts the single-transition rows.
    let link: Vec<_> = m.constraints.iter().filter(|c| c.family == "airborne_link").collect();
    assert_eq!(link[0].rhs, -1.0);
}

#[test]
fn export_round_trip_is_identical() {
    let p = census_params();
    let m = build_milp(&small_setup(&p, MilpEnd::Fixed(Point3::new(0.0, 0.0, 1.5)), MilpMode::MinTime));
    let text = export_milp(&m);
    assert_eq!(text, export_milp(&m));
    assert!(parse_lp(&text).unwrap().same_matrix(&m));
}

/// Deliberately naive reader: section-aware token scan, no shared code with the library.
fn independent_read(text: &str) -> (usize, std::collections::HashSet<String>, std::collections::HashSet<String>, Vec<String>) {
    let mut section = "";
    let mut rows = 0;
    let mut declared = std::collections::HashSet::new();
    let mut binaries = std::collections::HashSet::new();
    let mut referenced = Vec::new();
    for line in text.lines() {
        let l = line.trim();
        if l.starts_with('\\') || l.is_empty() {
            continue;
        }
        match l {
            "Minimize" | "Subject To" | "Bounds" | "Binaries" | "End" => {
                section = l;
                continue;
            }
            _ => {}
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        match section {
            "Subject To" => {
                if toks[0].ends_with(':') {
                    rows += 1;
                }
                for t in toks.iter().filter(|t| !t.ends_with(':')) {
                    if t.chars().next().unwrap().is_ascii_alphabetic() {
                        referenced.push(t.to_string());
                    }
                }
            }
            "Bounds" => {
                let name = toks.iter().find(|t| t.chars().next().unwrap().is_ascii_alphabetic() && **t != "free").unwrap();
                declared.insert(name.to_string());
            }
            "Binaries" => binaries.extend(toks.iter().map(|t| t.to_string())),
            _ => {}
        }
    }
    assert_eq!(section, "End");
    (rows, declared, binaries, referenced)
}

#[test]
fn export_reads_back_with_an_independent_reader() {
    let p = census_params();
    let truck = TimedTruckPath::parked(Point2::new(0.0, 0.0), p.dt_minor);
    let m = build_milp(&small_setup(&p, MilpEnd::Truck(&truck), MilpMode::MinTime));
    let (rows, declared, binaries, referenced) = independent_read(&export_milp(&m));
    assert_eq!(rows, m.constraints.len());
    assert_eq!(declared.len(), m.variables.len());
    assert_eq!(binaries.len(), m.binary_count());
    assert!(referenced.iter().all(|r| declared.contains(r)));
}

#[test]
fn horizon_too_short_is_reported() {
    let p = DronePhysicsParams { t_major: 2, ..params() };
    let o = Point3::new(0.0, 0.0, 1.5);
    let spec = fixed_spec(o, Point3::new(0.0, 700.0, 0.0), o, vec![]);
    assert!(matches!(build_trajectory_milp(&spec, &p, MilpMode::MinTime), Err(PhysicsError::HorizonTooShort { .. })));
}

fn certify(spec: &FlightSpec, p: &DronePhysicsParams, mode: MilpMode) -> f64 {
    let (m, traj) = build_trajectory_milp(spec, p, mode).unwrap();
    let end = match &spec.end {
        EndTarget::Fixed(e) => MilpEnd::Fixed(*e),
        EndTarget::Truck(t) => MilpEnd::Truck(t),
    };
    let setup = MilpSetup {
        params: p,
        start: spec.start,
        delivery: spec.delivery,
        end,
        ras: &spec.ras,
        major_steps: m.layout.major,
        mode,
    };
    let x = trajectory_assignment(&m, &traj, &setup).unwrap();
    m.certify(&x).max_violation
}

#[test]
fn oracle_satisfies_its_model() {
    let p = params();
    let o = Point3::new(0.0, 0.0, 1.5);
    let wall = Ras::axis_box("wall", Point3::new(-80.0, 150.0, 0.0), Point3::new(60.0, 250.0, 200.0));
    let fixed = fixed_spec(o, Point3::new(0.0, 400.0, 0.0), o, vec![wall]);
    assert!(certify(&fixed, &p, MilpMode::MinTime) < 1e-6);
    let truck = TimedTruckPath::through(&[Point2::new(0.0, 0.0), Point2::new(500.0, 0.0), Point2::new(500.0, 300.0)], 11.11, p.dt_minor);
    let coord = coordinated_spec(Point3::new(200.0, 250.0, 0.0), truck);
    assert!(certify(&coord, &p, MilpMode::MinTime) < 1e-6);
    assert!(certify(&coord, &p, MilpMode::MinEnergy { t_star: 400.0 }) < 1e-6);
}

fn pt() -> impl Strategy<Value = Point2> {
    (-600.0..600.0f64, -600.0..600.0f64).prop_map(|(x, y)| Point2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn drone_only_invariants(a in pt(), d in pt(), e in pt(), dz in 0.0..50.0f64) {
        let p = params();
        let spec = fixed_spec(a.with_z(1.5), d.with_z(dz), e.with_z(1.5), vec![]);
        let t = plan_drone_only_flight(&spec, &p).unwrap();
        let vertical = (50.0 - 1.5) / p.climb_max + (50.0 - dz) / p.descent_max + (50.0 - dz) / p.climb_max + (50.0 - 1.5) / p.descent_max;
        let horizontal = (l2_approx_2d(d.sub(a)) + l2_approx_2d(e.sub(d))) / p.v_max;
        prop_assert!(t.duration + 1e-9 >= vertical + horizontal);
        prop_assert!(t.states.windows(2).all(|w| w[1].energy >= w[0].energy));
        prop_assert!(t.total_energy <= p.energy_budget());
        let flags: String = t.states.iter().map(|s| if s.airborne { '1' } else { '0' }).collect();
        let trimmed = flags.trim_start_matches('0').trim_start_matches('1').trim_start_matches('0');
        prop_assert!(trimmed.is_empty());
        for s in t.airborne_states() {
            prop_assert!(s.speed() <= p.v_max + 1e-9);
            prop_assert!(s.pos.z >= p.h_lo - 1e-9 && s.pos.z <= p.h_hi + 1e-9);
        }
    }

    #[test]
    fn coordinated_landing_matches_truck(w in pt(), d in pt(), kmh in 20.0..60.0f64) {
        let p = params();
        let truck = TimedTruckPath::through(&[Point2::new(0.0, 0.0), w, Point2::new(w.x + 300.0, w.y)], kmh / 3.6, p.dt_minor);
        let t = plan_coordinated_flight(&coordinated_spec(d.with_z(0.0), truck.clone()), &p).unwrap();
        let land = t.states[t.landing_step];
        let s = truck.sample(t.landing_step);
        prop_assert!(land.pos.xy().dist(s.pos) <= 1e-6);
        prop_assert!((land.vel[0] - s.vel[0]).abs() <= 1e-6 && (land.vel[1] - s.vel[1]).abs() <= 1e-6);
        prop_assert_eq!(t.landing_step % p.n_f, 0);
        prop_assert_eq!(t.delivery_step % p.n_f, 0);
    }

    #[test]
    fn flights_stay_clear_of_ras(cx in -200.0..200.0f64, cy in 200.0..500.0f64, hw in 10.0..120.0f64, hh in 10.0..60.0f64) {
        let p = params();
        let ras = vec![Ras::axis_box("b", Point3::new(cx - hw, cy - hh, 0.0), Point3::new(cx + hw, cy + hh, 200.0))];
        let o = Point3::new(0.0, 0.0, 1.5);
        let spec = fixed_spec(o, Point3::new(0.0, 800.0, 0.0), o, ras.clone());
        let t = plan_drone_only_flight(&spec, &p).unwrap();
        prop_assert!(t.airborne_states().all(|s| !point_in_ras(s.pos, &ras[0], p.delivery_radius)));
    }

    #[test]
    fn enlarging_a_blocking_ras_never_shortens(cx in -60.0..60.0f64, hw in 10.0..80.0f64, grow in 1.0..2.0f64) {
        let p = params();
        let o = Point3::new(0.0, 0.0, 1.5);
        let mk = |s: f64| vec![Ras::axis_box("b", Point3::new(cx - hw * s, 350.0 - 40.0 * s, 0.0), Point3::new(cx + hw * s, 350.0 + 40.0 * s, 200.0))];
        let small = plan_drone_only_flight(&fixed_spec(o, Point3::new(0.0, 800.0, 0.0), o, mk(1.0)), &p).unwrap();
        let big = plan_drone_only_flight(&fixed_spec(o, Point3::new(0.0, 800.0, 0.0), o, mk(grow)), &p).unwrap();
        prop_assert!(big.duration >= small.duration);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_flights_certify(d in pt(), w in pt()) {
        let p = params();
        let o = Point3::new(0.0, 0.0, 1.5);
        prop_assert!(certify(&fixed_spec(o, d.with_z(10.0), Point3::new(w.x, w.y, 0.0), vec![]), &p, MilpMode::MinTime) < 1e-6);
        let truck = TimedTruckPath::through(&[Point2::new(0.0, 0.0), w], 11.11, p.dt_minor);
        prop_assert!(certify(&coordinated_spec(d.with_z(0.0), truck), &p, MilpMode::MinTime) < 1e-6);
    }
}
