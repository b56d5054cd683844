use rayon::prelude::*;

use super::network::TruckNetwork;
use super::{Instance, Operation, Plan, PlanError};
use crate::estimators::DroneTimeModel;

/// Estimated drone time for every (start, delivery, end) node triple.
#[derive(Debug, Clone)]
pub struct EstimateTable {
    m: usize,
    data: Vec<f64>,
}

impl EstimateTable {
    pub fn build(inst: &Instance, est: &dyn DroneTimeModel) -> Self {
        let m = inst.n() + 1;
        let stops = inst.coords();
        let targets: Vec<_> = (0..m).map(|i| inst.target(i)).collect();
        let mut data = vec![f64::INFINITY; m * m * m];
        data.par_chunks_mut(m * m).enumerate().for_each(|(s, plane)| {
            for k in 0..m {
                if k == 0 && m > 1 {
                    continue;
                }
                for e in 0..m {
                    plane[k * m + e] = est.estimate(stops[s], targets[k], stops[e]);
                }
            }
        });
        Self { m, data }
    }

    #[inline]
    pub fn get(&self, s: usize, k: usize, e: usize) -> f64 {
        self.data[(s * self.m + k) * self.m + e]
    }
}

/// Secondary key used to break duration ties inside the split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieKey {
    DroneCount,
    DroneTime,
}

const NO_DRONE: u32 = u32::MAX;
const TIGHT: f64 = 1e-12;

#[inline]
fn tight_tol(x: f64) -> f64 {
    TIGHT * x.abs().max(1.0)
}

/// Reusable DP buffers for one tour.
#[derive(Debug, Clone, Default)]
pub(crate) struct DpState {
    pub d: Vec<f64>,
    pub sec: Vec<f64>,
    pred: Vec<(u32, u32)>,
    cum: Vec<f64>,
    save: Vec<f64>,
}

impl DpState {
    pub fn copy_from(&mut self, o: &DpState) {
        self.d.clone_from(&o.d);
        self.sec.clone_from(&o.sec);
        self.pred.clone_from(&o.pred);
        self.cum.clone_from(&o.cum);
        self.save.clone_from(&o.save);
    }

    pub fn value(&self) -> (f64, f64) {
        (*self.d.last().unwrap(), *self.sec.last().unwrap())
    }
}

/// Truck network plus estimate table: everything needed to split tours of one instance.
pub struct Splitter<'a> {
    pub inst: &'a Instance,
    pub net: TruckNetwork,
    pub table: EstimateTable,
}

impl<'a> Splitter<'a> {
    pub fn new(inst: &'a Instance, est: &dyn DroneTimeModel) -> Result<Self, PlanError> {
        inst.validate()?;
        if inst.n() == 0 {
            return Err(PlanError::InvalidInstance("no deliveries".into()));
        }
        let net = TruckNetwork::build(inst)?;
        let table = EstimateTable::build(inst, est);
        Ok(Self { inst, net, table })
    }

    pub fn n(&self) -> usize {
        self.inst.n()
    }

    /// Shortest path over the operation DAG of `tour`, recomputing positions `from..`
    /// and reusing the values already in `st` before that.
    pub(crate) fn run(&self, tour: &[usize], key: TieKey, from: usize, st: &mut DpState) {
        let m = tour.len() - 1;
        let net = &self.net;
        let from = if st.d.len() == m + 1 { from.max(1) } else { 1 };
        if from == 1 {
            st.d.clear();
            st.d.resize(m + 1, 0.0);
            st.sec.clear();
            st.sec.resize(m + 1, 0.0);
            st.pred.clear();
            st.pred.resize(m + 1, (0, NO_DRONE));
            st.cum.clear();
            st.cum.resize(m + 1, 0.0);
            st.save.clear();
            st.save.resize(m + 1, 0.0);
        }
        for j in from..=m {
            st.cum[j] = st.cum[j - 1] + net.time(tour[j - 1], tour[j]);
        }
        for k in (from - 1).max(1)..m {
            st.save[k] = net.time(tour[k - 1], tour[k]) + net.time(tour[k], tour[k + 1]) - net.time(tour[k - 1], tour[k + 1]);
        }
        // Prefix maximum of the savings up to position j - 1.
        let mut max_save = st.save[1..from.max(2) - 1].iter().copied().fold(0.0, f64::max);
        for j in from..=m {
            if j >= 2 {
                max_save = max_save.max(st.save[j - 1]);
            }
            let cum_j = st.cum[j];
            let mut best = st.d[j - 1] + net.time(tour[j - 1], tour[j]);
            let mut best_sec = st.sec[j - 1];
            let mut best_pred = ((j - 1) as u32, NO_DRONE);
            let mut run_max = 0.0f64;
            for i in (0..j.saturating_sub(1)).rev() {
                let di = st.d[i];
                let slack = tight_tol(best);
                if cum_j + di - st.cum[i] - max_save > best + slack {
                    break;
                }
                run_max = run_max.max(st.save[i + 1]);
                let base = di + cum_j - st.cum[i];
                if base - run_max > best + slack {
                    continue;
                }
                let (s, e) = (tour[i], tour[j]);
                for k in i + 1..j {
                    let truck = cum_j - st.cum[i] - st.save[k];
                    if di + truck > best + tight_tol(best) {
                        continue;
                    }
                    let est = self.table.get(s, tour[k], e);
                    if !est.is_finite() {
                        continue;
                    }
                    let cand = di + truck.max(est);
                    let cand_sec = st.sec[i]
                        + match key {
                            TieKey::DroneCount => 1.0,
                            TieKey::DroneTime => est,
                        };
                    let tol = tight_tol(best);
                    if cand < best - tol || (cand <= best + tol && cand_sec < best_sec) {
                        best = cand;
                        best_sec = cand_sec;
                        best_pred = (i as u32, k as u32);
                    }
                }
            }
            st.d[j] = best;
            st.sec[j] = best_sec;
            st.pred[j] = best_pred;
        }
    }

    pub(crate) fn plan_from(&self, tour: &[usize], st: &DpState) -> Plan {
        let mut ops = Vec::new();
        let mut j = tour.len() - 1;
        while j > 0 {
            let (i, k) = st.pred[j];
            let i = i as usize;
            let t_truck = st.cum[j] - st.cum[i] - if k == NO_DRONE { 0.0 } else { st.save[k as usize] };
            let op = if k == NO_DRONE {
                Operation {
                    start: tour[i],
                    truck_seq: tour[i + 1..j].to_vec(),
                    drone_node: None,
                    slot: 0,
                    end: tour[j],
                    t_truck,
                    t_drone_est: 0.0,
                    t_o: t_truck,
                    energy: 0.0,
                    trajectory: None,
                }
            } else {
                let k = k as usize;
                let est = self.table.get(tour[i], tour[k], tour[j]);
                let truck_seq: Vec<usize> = (i + 1..j).filter(|&p| p != k).map(|p| tour[p]).collect();
                Operation {
                    start: tour[i],
                    truck_seq,
                    drone_node: Some(tour[k]),
                    slot: k - i - 1,
                    end: tour[j],
                    t_truck,
                    t_drone_est: est,
                    t_o: t_truck.max(est),
                    energy: 0.0,
                    trajectory: None,
                }
            };
            ops.push(op);
            j = i;
        }
        ops.reverse();
        let mut plan = Plan::from_operations(ops);
        // Keep the DP value so reconstruction round-off cannot break comparisons.
        plan.total_duration = st.d[tour.len() - 1];
        plan
    }

    /// Optimal order-preserving split of `tour` (ties: fewer drone operations).
    pub fn split(&self, tour: &[usize]) -> Plan {
        self.split_keyed(tour, TieKey::DroneCount)
    }

    pub fn split_keyed(&self, tour: &[usize], key: TieKey) -> Plan {
        let mut st = DpState::default();
        self.run(tour, key, 1, &mut st);
        self.plan_from(tour, &st)
    }
}

/// Optimal split of `tour` into operations under the estimator `est`.
pub fn split(inst: &Instance, tour: &[usize], est: &dyn DroneTimeModel) -> Result<Plan, PlanError> {
    let sp = Splitter::new(inst, est)?;
    if !super::is_valid_tour(tour, inst.n()) {
        return Err(PlanError::InvalidInstance("tour is not a depot-anchored permutation".into()));
    }
    Ok(sp.split(tour))
}
