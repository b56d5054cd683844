//! Drone kinematics, energy and the trajectory model.

mod flight;
pub mod lp;
pub mod milp;
mod params;
mod profile;
mod trajectory;
mod truck;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use flight::{
    plan_coordinated_flight, plan_coordinated_flight_with, plan_drone_only_flight, CoordinatedOptions, EndTarget,
    FlightContext, FlightSpec,
};
pub use milp::{build_trajectory_milp, MilpInstance, MilpMode};
pub use params::DronePhysicsParams;
pub use profile::{discrete_profile, discrete_steps, min_time_profile_1d, vertical_rates, DiscreteProfile};
pub use trajectory::{energy_of_trajectory, DroneState, Trajectory};
pub use truck::{TimedTruckPath, TruckSample, TruckSegment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid flight spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("flight needs {required:.1} J but only {budget:.1} J are usable")]
    InfeasibleEnergy { required: f64, budget: f64 },
    #[error("altitude {altitude} m lies above every band")]
    BandError { altitude: f64 },
    #[error("no landing sample on the truck path is reachable")]
    NoRendezvous,
    #[error("trajectory enters RAS {ras} at t = {t} s")]
    RasViolation { ras: String, t: f64 },
    #[error("horizon of {horizon} s is shorter than the required {required} s")]
    HorizonTooShort { horizon: f64, required: f64 },
}
