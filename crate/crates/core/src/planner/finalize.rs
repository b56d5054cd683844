use rayon::prelude::*;

use super::network::TruckNetwork;
use super::{Instance, Operation, Plan, PlanError};
use crate::physics::{CoordinatedOptions, DronePhysicsParams, FlightContext, TimedTruckPath};

/// Timed path of the truck through an operation's truck nodes.
pub fn operation_truck_path(
    inst: &Instance,
    net: &TruckNetwork,
    op: &Operation,
    dt: f64,
) -> Result<TimedTruckPath, PlanError> {
    net.timed_path(inst, &op.truck_nodes(), dt)
}

/// Replaces estimated drone times with oracle flights landing on the moving truck.
///
/// With `tie_break` the flight may use any landing up to the operation's
/// quantized duration and takes the least-energy one.
pub fn finalize_plan(
    inst: &Instance,
    plan: &Plan,
    params: &DronePhysicsParams,
    tie_break: bool,
) -> Result<Plan, PlanError> {
    params.validate().map_err(|source| PlanError::Operation { index: 0, source })?;
    let net = TruckNetwork::build(inst)?;
    let ctx = FlightContext::new(params, &inst.ras);
    let ops = plan
        .operations
        .par_iter()
        .enumerate()
        .map(|(index, op)| {
            let mut op = op.clone();
            let Some(k) = op.drone_node else {
                op.t_o = op.t_truck;
                op.energy = 0.0;
                op.trajectory = None;
                return Ok(op);
            };
            let truck = operation_truck_path(inst, &net, &op, params.dt_minor)?;
            let start = inst.stop(op.start).with_z(params.truck_bed_alt);
            let delivery = inst.target(k).with_z(0.0);
            let opts = CoordinatedOptions {
                tie_break,
                deadline: Some(op.t_truck),
            };
            let traj = ctx
                .coordinated(start, delivery, &truck, opts)
                .map_err(|source| PlanError::Operation { index, source })?;
            op.t_o = op.t_truck.max(traj.duration);
            op.energy = traj.total_energy;
            op.trajectory = Some(traj);
            Ok(op)
        })
        .collect::<Result<Vec<_>, PlanError>>()?;
    let mut out = Plan::from_operations(ops);
    out.verified = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::DroneTimeEstimator;
    use crate::geometry::Point2;
    use crate::planner::split;

    #[test]
    fn truck_only_plan_is_unchanged() {
        let inst = Instance::euclidean(Point2::new(0.0, 0.0), &[Point2::new(500.0, 0.0), Point2::new(500.0, 500.0)], 10.0);
        let never = |_: Point2, _: Point2, _: Point2| f64::INFINITY;
        let plan = split(&inst, &[0, 1, 2, 0], &never).unwrap();
        let fin = finalize_plan(&inst, &plan, &DronePhysicsParams::default(), true).unwrap();
        assert_eq!(fin.total_duration, plan.total_duration);
        assert_eq!(fin.total_dec, 0.0);
        assert!(fin.verified);
    }

    #[test]
    fn drone_operation_gets_a_trajectory() {
        let inst = Instance::euclidean(Point2::new(0.0, 0.0), &[Point2::new(800.0, 0.0), Point2::new(400.0, 300.0)], 40.0 / 3.6);
        let k = DroneTimeEstimator::k(1000.0).unwrap();
        let plan = split(&inst, &[0, 1, 2, 0], &k).unwrap();
        assert!(plan.drone_count() > 0);
        let p = DronePhysicsParams::default();
        let fin = finalize_plan(&inst, &plan, &p, false).unwrap();
        for op in fin.operations.iter().filter(|o| o.drone_node.is_some()) {
            let traj = op.trajectory.as_ref().unwrap();
            assert!(op.t_o >= op.t_truck);
            assert!(op.t_o >= traj.duration);
            assert!(op.energy > 0.0);
        }
        // Physics is slower than a 1000 m/s estimate.
        assert!(fin.total_duration > plan.total_duration);
    }
}
