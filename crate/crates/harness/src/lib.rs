//! Experiment harness for the truck-and-drone planner: scenario generators,
//! case-study sampling, comparison batteries and report output.

pub mod battery;
pub mod case_study;
pub mod report;
pub mod scenario;

use std::path::{Path, PathBuf};

use dronetour::estimators::{calibrate_mk, DroneTimeEstimator, EstimatorError};
use dronetour::geometry::{Point2, Ras};
use dronetour::physics::{DronePhysicsParams, PhysicsError};
use dronetour::planner::PlanError;
use dronetour::predictor::{generate_training_data, load_model, PredictorError, Region};
use thiserror::Error;

use battery::MethodSpec;

/// Environment variable naming the default physics parameter file.
pub const PARAMS_ENV: &str = "DRONETOUR_PARAMS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

impl HarnessError {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Json(_) | HarnessError::Estimator(_) => 2,
            HarnessError::Io(_) | HarnessError::Csv(_) => 3,
            HarnessError::Sampling(_) | HarnessError::Plan(_) | HarnessError::Physics(_) => 4,
            HarnessError::Predictor(_) => 5,
        }
    }
}

/// Parameters from `path`, else from the file named by [`PARAMS_ENV`], else defaults.
pub fn load_params(path: Option<&Path>) -> Result<DronePhysicsParams, HarnessError> {
    let from_env = std::env::var_os(PARAMS_ENV).map(PathBuf::from);
    let p = match path.map(Path::to_path_buf).or(from_env) {
        Some(file) => serde_json::from_str(&std::fs::read_to_string(&file)?)?,
        None => DronePhysicsParams::default(),
    };
    let p: DronePhysicsParams = p;
    p.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(p)
}

/// Calibration set used for MK when no factor is given.
pub fn calibration_factor(params: &DronePhysicsParams, side: f64, ras: &[Ras], rows: usize, seed: u64) -> Result<f64, HarnessError> {
    let ds = generate_training_data(&Region::square(Point2::new(0.0, 0.0), side), rows, params, ras, seed)?;
    Ok(calibrate_mk(&ds, params.v_max)?)
}

/// Inputs for turning estimator names (`k`, `mk`, `p`) into methods.
#[derive(Debug, Clone, Default)]
pub struct MethodInputs {
    pub model: Option<PathBuf>,
    pub mk_factor: Option<f64>,
    /// Region side for on-the-fly MK calibration.
    pub calibration_side: f64,
    pub calibration_rows: usize,
    pub calibration_seed: u64,
}

pub fn build_methods(names: &[String], params: &DronePhysicsParams, inputs: &MethodInputs) -> Result<Vec<MethodSpec>, HarnessError> {
    let mut out = Vec::new();
    for name in names {
        let est = match name.to_ascii_lowercase().as_str() {
            "k" => DroneTimeEstimator::k(params.v_max)?,
            "mk" => {
                let c = match inputs.mk_factor {
                    Some(c) => c,
                    None => calibration_factor(params, inputs.calibration_side, &[], inputs.calibration_rows, inputs.calibration_seed)?,
                };
                DroneTimeEstimator::mk(params.v_max, c)?
            }
            "p" => {
                let path = inputs
                    .model
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("estimator p needs --model".into()))?;
                DroneTimeEstimator::p(load_model(path)?.0)
            }
            other => return Err(HarnessError::Config(format!("unknown estimator {other:?}"))),
        };
        out.push(MethodSpec::new(est));
    }
    Ok(out)
}
