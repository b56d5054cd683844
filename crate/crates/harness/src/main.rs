use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dronetour::geometry::Point2;
use dronetour::physics::{build_trajectory_milp, lp::export_milp, FlightSpec, MilpMode};
use dronetour::planner::{finalize_plan, nearest_neighbor_tour, two_opt, Instance, Splitter};
use dronetour::predictor::{
    generate_training_data, grid_search, save_model, train_with_report, Activation, Dataset, LrSchedule, Region, TrainConfig,
};
use harness::battery::{run_battery, run_on_instances, BatteryOptions, Cell};
use harness::case_study::{sample_case_study, RegionFile};
use harness::report::{emit_report, emit_timing};
use harness::scenario::{gen_instance, RasGenConfig, Scenario, ScenarioConfig};
use harness::{build_methods, calibration_factor, load_params, HarnessError, MethodInputs, PARAMS_ENV};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "dronetour", version, about = "Truck-and-drone delivery planning")]
struct Cli {
    /// Physics parameter JSON; falls back to the file named by DRONETOUR_PARAMS.
    #[arg(long, global = true, env = PARAMS_ENV)]
    params: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate flight-time training rows labelled by the trajectory oracle.
    GenData(GenData),
    /// Train the flight-time regressor.
    Train(Train),
    /// Score a lattice of training configurations on a holdout split.
    GridSearch(GridSearch),
    /// Write one generated scenario instance as JSON.
    GenInstance(GenInstance),
    /// Plan one instance and finalize it with drone trajectories.
    Plan(PlanCmd),
    /// Compare truck-only and estimator-driven plans on generated instances.
    Battery(BatteryCmd),
    /// Write the trajectory MILP of one flight in LP format.
    ExportMilp(ExportMilp),
    /// Battery on demand sampled from a city region with a road network.
    CaseStudy(CaseStudy),
}

#[derive(Args)]
struct GenData {
    #[arg(long, default_value_t = 20_000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side of the square sampling region in metres.
    #[arg(long, default_value_t = 5000.0)]
    side: f64,
    /// Take restricted airspace from this instance file.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct TrainOpts {
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    #[arg(long, default_value = "relu", value_parser = parse_activation)]
    activation: Activation,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "constant", value_parser = parse_schedule)]
    schedule: LrSchedule,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    batch: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainOpts {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            hidden_size: self.hidden,
            activation: self.activation,
            alpha: self.alpha,
            lr_schedule: self.schedule,
            base_lr: self.lr,
            batch_size: self.batch,
            max_epochs: self.epochs,
            patience: self.patience,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args)]
struct Train {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: TrainOpts,
    /// Also write per-epoch losses as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GridSearch {
    #[arg(long)]
    data: PathBuf,
    /// Best configuration as JSON.
    #[arg(long)]
    out: PathBuf,
    /// One CSV row per lattice point.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 256, 1024])]
    hidden: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values = ["identity", "relu"], value_parser = parse_activation)]
    activations: Vec<Activation>,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-4, 1e-3, 1e-2, 5e-2])]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values = ["constant", "inverse_scaling", "adaptive"], value_parser = parse_schedule)]
    schedules: Vec<LrSchedule>,
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenInstance {
    #[arg(long, default_value_t = 1)]
    scenario: u8,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long = "speed-kmh", default_value_t = 40.0)]
    speed_kmh: f64,
    #[arg(long, default_value_t = 5000.0)]
    side: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Position of the instance in the seeded sequence.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct EstimatorOpts {
    /// Trained model for estimator p.
    #[arg(long)]
    model: Option<PathBuf>,
    /// MK correction factor; calibrated on generated rows when absent.
    #[arg(long)]
    mk_factor: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    calibration_rows: usize,
    /// Improvement budget in adopted moves; unlimited when absent.
    #[arg(long)]
    budget: Option<usize>,
    /// Take the earliest landing instead of the least-energy one.
    #[arg(long)]
    no_tie_break: bool,
}

#[derive(Args)]
struct PlanCmd {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "p")]
    estimator: String,
    #[command(flatten)]
    est: EstimatorOpts,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Directory for one trajectory CSV per drone operation.
    #[arg(long)]
    trajectories: Option<PathBuf>,
}

#[derive(Args)]
struct BatteryCmd {
    #[arg(long, default_value_t = 1)]
    scenario: u8,
    #[arg(long, value_delimiter = ',', default_values_t = [20usize])]
    nodes: Vec<usize>,
    #[arg(long = "speed-kmh", value_delimiter = ',', default_values_t = [40.0])]
    speed_kmh: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values = ["k", "mk", "p"])]
    estimators: Vec<String>,
    #[command(flatten)]
    est: EstimatorOpts,
    #[arg(long, default_value_t = 5000.0)]
    side: f64,
    #[arg(long, default_value_t = 3)]
    ras_count_min: usize,
    #[arg(long, default_value_t = 6)]
    ras_count_max: usize,
    #[arg(long, default_value_t = 0.10)]
    ras_coverage_min: f64,
    #[arg(long, default_value_t = 0.20)]
    ras_coverage_max: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportMilp {
    /// Flight specification JSON.
    #[arg(long)]
    spec: PathBuf,
    /// `time` or `energy`.
    #[arg(long, default_value = "time")]
    mode: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CaseStudy {
    /// Region JSON; a synthetic street grid is used when absent.
    #[arg(long)]
    region: Option<PathBuf>,
    /// Blocks per side of the synthetic grid.
    #[arg(long, default_value_t = 12)]
    blocks: usize,
    #[arg(long, default_value_t = 250.0)]
    block_size: f64,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values = ["k", "mk", "p"])]
    estimators: Vec<String>,
    #[command(flatten)]
    est: EstimatorOpts,
    #[arg(long)]
    out: PathBuf,
}

fn parse_activation(s: &str) -> Result<Activation, String> {
    match s {
        "relu" => Ok(Activation::Relu),
        "identity" => Ok(Activation::Identity),
        _ => Err(format!("unknown activation {s:?} (relu, identity)")),
    }
}

fn parse_schedule(s: &str) -> Result<LrSchedule, String> {
    match s {
        "constant" => Ok(LrSchedule::Constant),
        "inverse_scaling" | "invscaling" => Ok(LrSchedule::InverseScaling),
        "adaptive" => Ok(LrSchedule::Adaptive),
        _ => Err(format!("unknown schedule {s:?} (constant, inverse_scaling, adaptive)")),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

#[derive(Serialize)]
struct NodeRole {
    node: usize,
    role: &'static str,
}

#[derive(Serialize)]
struct OperationOut {
    start: usize,
    end: usize,
    nodes: Vec<NodeRole>,
    t_truck: f64,
    t_drone_est: f64,
    t_o: f64,
    energy_j: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<String>,
}

#[derive(Serialize)]
struct PlanOut {
    estimator: String,
    tour: Vec<usize>,
    truck_only_duration: f64,
    search_duration: f64,
    total_duration: f64,
    total_dec_j: f64,
    verified: bool,
    operations: Vec<OperationOut>,
}

fn cmd_plan(c: PlanCmd, params_path: Option<&Path>) -> Result<(), HarnessError> {
    let params = load_params(params_path)?;
    let inst: Instance = read_json(&c.instance)?;
    inst.validate()?;
    let side = bounding_side(&inst);
    let inputs = MethodInputs {
        model: c.est.model.clone(),
        mk_factor: c.est.mk_factor,
        calibration_side: side,
        calibration_rows: c.est.calibration_rows,
        calibration_seed: c.seed,
    };
    let method = build_methods(std::slice::from_ref(&c.estimator), &params, &inputs)?.remove(0);
    let sp = Splitter::new(&inst, &method.estimator)?;
    let tour = two_opt(&sp.net, nearest_neighbor_tour(&sp.net), c.seed);
    let truck_only = sp.net.route_time(&tour);
    let (tour, searched) = sp.improve(&tour, c.est.budget);
    let plan = finalize_plan(&inst, &searched, &params, !c.est.no_tie_break)?;
    if let Some(dir) = &c.trajectories {
        fs::create_dir_all(dir)?;
    }
    let mut operations = Vec::new();
    for (i, op) in plan.operations.iter().enumerate() {
        let mut nodes = vec![NodeRole { node: op.start, role: "truck" }];
        let mut seq: Vec<NodeRole> = op.truck_seq.iter().map(|&u| NodeRole { node: u, role: "truck" }).collect();
        if let Some(d) = op.drone_node {
            seq.insert(op.slot.min(seq.len()), NodeRole { node: d, role: "drone" });
        }
        nodes.extend(seq);
        nodes.push(NodeRole { node: op.end, role: "truck" });
        let trajectory = match (&c.trajectories, &op.trajectory) {
            (Some(dir), Some(t)) => {
                let name = format!("op{i:03}.csv");
                t.write_csv(fs::File::create(dir.join(&name))?)?;
                Some(name)
            }
            _ => None,
        };
        operations.push(OperationOut {
            start: op.start,
            end: op.end,
            nodes,
            t_truck: op.t_truck,
            t_drone_est: op.t_drone_est,
            t_o: op.t_o,
            energy_j: op.energy,
            trajectory,
        });
    }
    let out = PlanOut {
        estimator: method.name,
        tour,
        truck_only_duration: truck_only,
        search_duration: searched.total_duration,
        total_duration: plan.total_duration,
        total_dec_j: plan.total_dec,
        verified: plan.verified,
        operations,
    };
    write_json(&c.out, &out)?;
    println!(
        "{}: {:.1} s (truck only {:.1} s), {} drone deliveries, {:.0} J",
        out.estimator,
        out.total_duration,
        truck_only,
        plan.drone_count(),
        out.total_dec_j
    );
    Ok(())
}

fn bounding_side(inst: &Instance) -> f64 {
    let pts: Vec<Point2> = (0..=inst.n()).map(|i| inst.target(i)).collect();
    let span = |f: fn(&Point2) -> f64| {
        let (lo, hi) = pts.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        hi - lo
    };
    span(|p| p.x).max(span(|p| p.y)).max(100.0)
}

fn cmd_battery(c: BatteryCmd, params_path: Option<&Path>) -> Result<(), HarnessError> {
    let params = load_params(params_path)?;
    let scenario = Scenario::from_number(c.scenario).ok_or_else(|| HarnessError::Config(format!("unknown scenario {}", c.scenario)))?;
    let inputs = MethodInputs {
        model: c.est.model.clone(),
        mk_factor: c.est.mk_factor,
        calibration_side: c.side,
        calibration_rows: c.est.calibration_rows,
        calibration_seed: c.seed,
    };
    let methods = build_methods(&c.estimators, &params, &inputs)?;
    let opts = BatteryOptions {
        params,
        tie_break: !c.est.no_tie_break,
        improve_budget: c.est.budget,
        ..BatteryOptions::default()
    };
    let mut reports = Vec::new();
    for &n in &c.nodes {
        for &speed in &c.speed_kmh {
            let cfg = ScenarioConfig {
                scenario,
                n,
                truck_speed_kmh: speed,
                instance_count: c.count,
                region_side: c.side,
                ras: RasGenConfig {
                    count_min: c.ras_count_min,
                    count_max: c.ras_count_max,
                    coverage_min: c.ras_coverage_min,
                    coverage_max: c.ras_coverage_max,
                    ..RasGenConfig::default()
                },
                seed: c.seed,
            };
            let rep = run_battery(&cfg, &methods, &opts)?;
            print_summary(&rep);
            reports.push(rep);
        }
    }
    emit_report(&reports, &c.out)?;
    emit_timing(&reports, &c.out)?;
    Ok(())
}

fn print_summary(rep: &harness::battery::ComparisonReport) {
    let c = &rep.cell;
    println!("scenario {} n={} speed={} km/h: {} failures", c.scenario, c.n, c.speed_kmh, rep.failures());
    for a in &rep.aggregates {
        println!(
            "  {:>6} vs {:<10} {:<11} wins {:>3}/{:<3} mean reduction {:>7.2}% [{:.2}, {:.2}]",
            a.method,
            a.baseline,
            a.metric.name(),
            a.wins,
            a.paired,
            a.mean_reduction_pct,
            a.ci_low_pct,
            a.ci_high_pct
        );
    }
}

fn cmd_case_study(c: CaseStudy, params_path: Option<&Path>) -> Result<(), HarnessError> {
    let params = load_params(params_path)?;
    let region = match &c.region {
        Some(p) => read_json::<RegionFile>(p)?,
        None => RegionFile::synthetic(c.blocks, c.block_size, c.seed),
    };
    region.validate()?;
    let side = (region.bounds.max.x - region.bounds.min.x).max(region.bounds.max.y - region.bounds.min.y);
    let mk_factor = match c.est.mk_factor {
        Some(f) => Some(f),
        None if c.estimators.iter().any(|e| e.eq_ignore_ascii_case("mk")) => {
            Some(calibration_factor(&params, side, &region.ras, c.est.calibration_rows, c.seed)?)
        }
        None => None,
    };
    let inputs = MethodInputs {
        model: c.est.model.clone(),
        mk_factor,
        calibration_side: side,
        calibration_rows: c.est.calibration_rows,
        calibration_seed: c.seed,
    };
    let methods = build_methods(&c.estimators, &params, &inputs)?;
    let opts = BatteryOptions {
        params,
        tie_break: !c.est.no_tie_break,
        improve_budget: c.est.budget,
        ..BatteryOptions::default()
    };
    let speed = region.road.edges.iter().map(|e| e.speed).sum::<f64>() / region.road.edges.len().max(1) as f64 * 3.6;
    let cell = Cell {
        scenario: "case".into(),
        n: c.n,
        speed_kmh: speed,
    };
    let rep = run_on_instances(cell, c.repeats, |i| sample_case_study(&region, c.n, c.seed, i), &methods, &opts);
    print_summary(&rep);
    let reports = [rep];
    emit_report(&reports, &c.out)?;
    emit_timing(&reports, &c.out)?;
    write_json(&c.out.join("region.json"), &region)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let params_path = cli.params.as_deref();
    match cli.command {
        Command::GenData(c) => {
            let params = load_params(params_path)?;
            let ras = match &c.instance {
                Some(p) => read_json::<Instance>(p)?.ras,
                None => Vec::new(),
            };
            let ds = generate_training_data(&Region::square(Point2::new(0.0, 0.0), c.side), c.count, &params, &ras, c.seed)?;
            ds.write_csv(fs::File::create(&c.out)?)?;
            println!("wrote {} rows to {}", ds.len(), c.out.display());
        }
        Command::Train(c) => {
            let ds = Dataset::read_csv(fs::File::open(&c.data)?)?;
            let cfg = c.opts.config();
            let (model, report) = train_with_report(&ds, &cfg)?;
            save_model(&c.out, &model, Some(&cfg))?;
            if let Some(p) = &c.report {
                write_json(p, &report)?;
            }
            println!(
                "trained on {} rows: loss {:.5} -> {:.5}, best epoch {}",
                ds.len(),
                report.initial_loss,
                report.final_loss,
                report.best_epoch
            );
        }
        Command::GridSearch(c) => {
            let ds = Dataset::read_csv(fs::File::open(&c.data)?)?;
            let base = TrainConfig {
                max_epochs: c.epochs,
                seed: c.seed,
                ..TrainConfig::default()
            };
            let grid = base.lattice(&c.hidden, &c.activations, &c.alphas, &c.schedules);
            let (best, rows) = grid_search(&ds, &grid, c.holdout)?;
            write_json(&c.out, &best)?;
            if let Some(p) = &c.report {
                let mut w = csv::Writer::from_path(p)?;
                for r in &rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            println!(
                "best: hidden {} {:?} alpha {} {:?}",
                best.hidden_size, best.activation, best.alpha, best.lr_schedule
            );
        }
        Command::GenInstance(c) => {
            let scenario =
                Scenario::from_number(c.scenario).ok_or_else(|| HarnessError::Config(format!("unknown scenario {}", c.scenario)))?;
            let cfg = ScenarioConfig {
                scenario,
                n: c.n,
                truck_speed_kmh: c.speed_kmh,
                instance_count: c.index + 1,
                region_side: c.side,
                ras: RasGenConfig::default(),
                seed: c.seed,
            };
            cfg.validate()?;
            write_json(&c.out, &gen_instance(&cfg, c.index)?)?;
        }
        Command::Plan(c) => cmd_plan(c, params_path)?,
        Command::Battery(c) => cmd_battery(c, params_path)?,
        Command::ExportMilp(c) => {
            let params = load_params(params_path)?;
            let spec: FlightSpec = read_json(&c.spec)?;
            let (timed, traj) = build_trajectory_milp(&spec, &params, MilpMode::MinTime)?;
            let milp = match c.mode.as_str() {
                "time" => timed,
                "energy" => build_trajectory_milp(&spec, &params, MilpMode::MinEnergy { t_star: traj.duration })?.0,
                other => return Err(HarnessError::Config(format!("unknown mode {other:?} (time, energy)"))),
            };
            fs::write(&c.out, export_milp(&milp))?;
            println!(
                "{} variables ({} binary), {} constraints; oracle duration {:.1} s",
                milp.variables.len(),
                milp.binary_count(),
                milp.constraints.len(),
                traj.duration
            );
        }
        Command::CaseStudy(c) => cmd_case_study(c, params_path)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
