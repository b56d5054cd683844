//! Truck-and-drone last-mile planning.
//!
//! The crate is organised bottom-up: [`geometry`] supplies points, norm
//! approximations and restricted airspace; [`physics`] turns a drone operation
//! into a discretized 4D trajectory and can emit the matching MILP; [`predictor`]
//! learns flight times from physics labels; [`estimators`] wraps the three
//! flight-time estimators; [`planner`] orders, splits and improves tours.

pub mod estimators;
pub mod geometry;
pub mod physics;
pub mod planner;
pub mod predictor;
