//! Truck-only versus estimator-driven planning over many instances.

use std::time::Instant;

use dronetour::estimators::DroneTimeEstimator;
use dronetour::physics::DronePhysicsParams;
use dronetour::planner::{finalize_plan, nearest_neighbor_tour, two_opt, Instance, Plan, Splitter, TruckNetwork};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scenario::{gen_instance, ScenarioConfig};
use crate::HarnessError;

pub const TRUCK_ONLY: &str = "truck_only";

#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub name: String,
    pub estimator: DroneTimeEstimator,
}

impl MethodSpec {
    pub fn new(estimator: DroneTimeEstimator) -> Self {
        Self {
            name: estimator.label().to_string(),
            estimator,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatteryOptions {
    pub params: DronePhysicsParams,
    /// Least-energy landing among those meeting each operation's duration.
    pub tie_break: bool,
    pub improve_budget: Option<usize>,
    pub two_opt_seed: u64,
    /// Keep finalized plans (with trajectories) in the report.
    pub keep_plans: bool,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            params: DronePhysicsParams::default(),
            tie_break: true,
            improve_budget: None,
            two_opt_seed: 0,
            keep_plans: false,
        }
    }
}

/// Identifies one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub scenario: String,
    pub n: usize,
    pub speed_kmh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance: usize,
    pub method: String,
    /// Finalized tour duration in seconds.
    pub duration: f64,
    /// Finalized drone energy in joules.
    pub dec: f64,
    pub drone_nodes: usize,
    /// Duration predicted during search, before finalization.
    pub search_duration: f64,
    /// Airborne trajectory samples inside some RAS.
    pub ras_violations: usize,
    pub error: Option<String>,
}

impl InstanceResult {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub instance: usize,
    pub method: String,
    pub search_s: f64,
    pub finalize_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Duration,
    Dec,
    DroneNodes,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Duration => "duration",
            Metric::Dec => "dec",
            Metric::DroneNodes => "drone_nodes",
        }
    }

    fn of(self, r: &InstanceResult) -> f64 {
        match self {
            Metric::Duration => r.duration,
            Metric::Dec => r.dec,
            Metric::DroneNodes => r.drone_nodes as f64,
        }
    }
}

/// Paired comparison of `method` against `baseline` on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub baseline: String,
    pub method: String,
    pub metric: Metric,
    /// Instances where both methods succeeded.
    pub paired: usize,
    /// Paired instances with a nonzero baseline value, used for the reduction.
    pub ratio_count: usize,
    /// Instances where the method is strictly below the baseline.
    pub wins: usize,
    pub baseline_mean: f64,
    pub method_mean: f64,
    /// Mean of `(baseline - method) / baseline`, in percent.
    pub mean_reduction_pct: f64,
    pub ci_low_pct: f64,
    pub ci_high_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub cell: Cell,
    pub methods: Vec<String>,
    pub instance_count: usize,
    /// Sorted by instance, then method in `methods` order.
    pub results: Vec<InstanceResult>,
    pub aggregates: Vec<Aggregate>,
    pub timings: Vec<Timing>,
    #[serde(skip)]
    pub plans: Vec<(usize, String, Plan)>,
}

impl ComparisonReport {
    pub fn result(&self, instance: usize, method: &str) -> Option<&InstanceResult> {
        self.results.iter().find(|r| r.instance == instance && r.method == method)
    }

    pub fn aggregate(&self, baseline: &str, method: &str, metric: Metric) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.baseline == baseline && a.method == method && a.metric == metric)
    }

    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| !r.ok()).count()
    }
}

fn failed(instance: usize, method: &str, e: impl ToString) -> InstanceResult {
    InstanceResult {
        instance,
        method: method.to_string(),
        duration: f64::NAN,
        dec: f64::NAN,
        drone_nodes: 0,
        search_duration: f64::NAN,
        ras_violations: 0,
        error: Some(e.to_string()),
    }
}

fn ras_violations(inst: &Instance, plan: &Plan) -> usize {
    plan.operations
        .iter()
        .filter_map(|o| o.trajectory.as_ref())
        .flat_map(|t| t.airborne_states())
        .filter(|s| inst.ras.iter().any(|r| r.contains(s.pos, 0.0)))
        .count()
}

type InstanceOutput = (Vec<InstanceResult>, Vec<Timing>, Vec<(usize, String, Plan)>);

fn run_one(index: usize, inst: Result<Instance, HarnessError>, methods: &[MethodSpec], opts: &BatteryOptions) -> InstanceOutput {
    let names: Vec<&str> = std::iter::once(TRUCK_ONLY).chain(methods.iter().map(|m| m.name.as_str())).collect();
    let fail_all = |e: &dyn std::fmt::Display| -> InstanceOutput {
        (names.iter().map(|m| failed(index, m, e)).collect(), Vec::new(), Vec::new())
    };
    let inst = match inst {
        Ok(i) => i,
        Err(e) => return fail_all(&e),
    };
    let t0 = Instant::now();
    let net = match inst.validate().and_then(|_| TruckNetwork::build(&inst)) {
        Ok(n) => n,
        Err(e) => return fail_all(&e),
    };
    let tour = two_opt(&net, nearest_neighbor_tour(&net), opts.two_opt_seed);
    let truck = net.route_time(&tour);
    let mut results = vec![InstanceResult {
        instance: index,
        method: TRUCK_ONLY.to_string(),
        duration: truck,
        dec: 0.0,
        drone_nodes: 0,
        search_duration: truck,
        ras_violations: 0,
        error: None,
    }];
    let mut timings = vec![Timing {
        instance: index,
        method: TRUCK_ONLY.to_string(),
        search_s: t0.elapsed().as_secs_f64(),
        finalize_s: 0.0,
    }];
    let mut plans = Vec::new();
    for m in methods {
        let t1 = Instant::now();
        let searched = Splitter::new(&inst, &m.estimator).map(|sp| sp.improve(&tour, opts.improve_budget).1);
        let t2 = Instant::now();
        let outcome = searched.and_then(|plan| finalize_plan(&inst, &plan, &opts.params, opts.tie_break).map(|f| (plan, f)));
        let t3 = Instant::now();
        timings.push(Timing {
            instance: index,
            method: m.name.clone(),
            search_s: (t2 - t1).as_secs_f64(),
            finalize_s: (t3 - t2).as_secs_f64(),
        });
        match outcome {
            Ok((searched, fin)) => {
                results.push(InstanceResult {
                    instance: index,
                    method: m.name.clone(),
                    duration: fin.total_duration,
                    dec: fin.total_dec,
                    drone_nodes: fin.drone_count(),
                    search_duration: searched.total_duration,
                    ras_violations: ras_violations(&inst, &fin),
                    error: None,
                });
                if opts.keep_plans {
                    plans.push((index, m.name.clone(), fin));
                }
            }
            Err(e) => results.push(failed(index, &m.name, e)),
        }
    }
    (results, timings, plans)
}

/// Runs every method on every instance yielded by `make`, in parallel over
/// instances; output order depends only on the instance index.
pub fn run_on_instances<F>(cell: Cell, count: usize, make: F, methods: &[MethodSpec], opts: &BatteryOptions) -> ComparisonReport
where
    F: Fn(usize) -> Result<Instance, HarnessError> + Sync,
{
    let outputs: Vec<InstanceOutput> = (0..count).into_par_iter().map(|i| run_one(i, make(i), methods, opts)).collect();
    let mut results = Vec::new();
    let mut timings = Vec::new();
    let mut plans = Vec::new();
    for (r, t, p) in outputs {
        results.extend(r);
        timings.extend(t);
        plans.extend(p);
    }
    let method_names: Vec<String> = std::iter::once(TRUCK_ONLY.to_string()).chain(methods.iter().map(|m| m.name.clone())).collect();
    let aggregates = aggregate(&results, &method_names, count);
    ComparisonReport {
        cell,
        methods: method_names,
        instance_count: count,
        results,
        aggregates,
        timings,
        plans,
    }
}

/// One scenario cell: shared two-opt tour per instance, then split, improve and
/// finalize for each estimator.
pub fn run_battery(cfg: &ScenarioConfig, methods: &[MethodSpec], opts: &BatteryOptions) -> Result<ComparisonReport, HarnessError> {
    cfg.validate()?;
    let cell = Cell {
        scenario: cfg.scenario.number().to_string(),
        n: cfg.n,
        speed_kmh: cfg.truck_speed_kmh,
    };
    Ok(run_on_instances(cell, cfg.instance_count, |i| gen_instance(cfg, i), methods, opts))
}

/// Normal-approximation 95% interval on the mean with the sample standard error.
pub fn mean_ci(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

fn compare(results: &[InstanceResult], count: usize, baseline: &str, method: &str, metric: Metric) -> Aggregate {
    let mut base_vals = Vec::new();
    let mut meth_vals = Vec::new();
    for i in 0..count {
        let b = results.iter().find(|r| r.instance == i && r.method == baseline);
        let m = results.iter().find(|r| r.instance == i && r.method == method);
        if let (Some(b), Some(m)) = (b, m) {
            if b.ok() && m.ok() {
                base_vals.push(metric.of(b));
                meth_vals.push(metric.of(m));
            }
        }
    }
    let reductions: Vec<f64> = base_vals
        .iter()
        .zip(&meth_vals)
        .filter(|(b, _)| **b != 0.0)
        .map(|(b, m)| 100.0 * (b - m) / b)
        .collect();
    let (mean, lo, hi) = mean_ci(&reductions);
    let avg = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    Aggregate {
        baseline: baseline.to_string(),
        method: method.to_string(),
        metric,
        paired: base_vals.len(),
        ratio_count: reductions.len(),
        wins: base_vals.iter().zip(&meth_vals).filter(|(b, m)| b > m).count(),
        baseline_mean: avg(&base_vals),
        method_mean: avg(&meth_vals),
        mean_reduction_pct: mean,
        ci_low_pct: lo,
        ci_high_pct: hi,
    }
}

/// Truck-only against each estimator on duration, then every later estimator
/// against every earlier one on duration, energy and drone-node count.
pub fn aggregate(results: &[InstanceResult], methods: &[String], count: usize) -> Vec<Aggregate> {
    let mut out = Vec::new();
    let estimators: Vec<&String> = methods.iter().filter(|m| m.as_str() != TRUCK_ONLY).collect();
    if methods.iter().any(|m| m == TRUCK_ONLY) {
        for m in &estimators {
            out.push(compare(results, count, TRUCK_ONLY, m, Metric::Duration));
        }
    }
    for (i, a) in estimators.iter().enumerate() {
        for b in &estimators[i + 1..] {
            for metric in [Metric::Duration, Metric::Dec, Metric::DroneNodes] {
                out.push(compare(results, count, a, b, metric));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_of_constant_sample_is_a_point() {
        let (m, lo, hi) = mean_ci(&[2.0, 2.0, 2.0]);
        assert_eq!((m, lo, hi), (2.0, 2.0, 2.0));
        let (m, lo, hi) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((hi - m - 1.96 * 1.0).abs() < 1e-12);
        assert!((m - lo - 1.96).abs() < 1e-12);
        assert!(mean_ci(&[]).0.is_nan());
    }

    #[test]
    fn truck_only_battery() {
        let cfg = ScenarioConfig {
            n: 6,
            instance_count: 3,
            ..Default::default()
        };
        let rep = run_battery(&cfg, &[], &BatteryOptions::default()).unwrap();
        assert_eq!(rep.results.len(), 3);
        assert!(rep.results.iter().all(|r| r.method == TRUCK_ONLY && r.duration > 0.0));
        assert!(rep.aggregates.is_empty());
    }
}
