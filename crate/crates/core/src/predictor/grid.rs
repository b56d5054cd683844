use serde::{Deserialize, Serialize};

use super::{train, Activation, Dataset, LrSchedule, PredictorError, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub hidden_size: usize,
    pub activation: Activation,
    pub alpha: f64,
    pub lr_schedule: LrSchedule,
    /// Holdout mean squared error in seconds²; infinite when training diverged.
    pub holdout_mse: f64,
}

/// Trains every lattice point on the same split and returns the holdout-MSE
/// minimizer (ties: smaller hidden size, then smaller alpha) with one report row per point.
pub fn grid_search(
    ds: &Dataset,
    grid: &[TrainConfig],
    holdout_fraction: f64,
) -> Result<(TrainConfig, Vec<GridRow>), PredictorError> {
    let first = grid.first().ok_or(PredictorError::EmptyGrid)?;
    let (train_set, holdout) = ds.split(holdout_fraction, first.seed);
    let holdout = if holdout.is_empty() { train_set.clone() } else { holdout };
    let mut report = Vec::with_capacity(grid.len());
    for cfg in grid {
        let mse = match train(&train_set, cfg) {
            Ok(m) => {
                holdout.rows.iter().map(|r| (m.predict(&r.features) - r.label).powi(2)).sum::<f64>() / holdout.len() as f64
            }
            Err(PredictorError::Divergence { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        report.push(GridRow {
            hidden_size: cfg.hidden_size,
            activation: cfg.activation,
            alpha: cfg.alpha,
            lr_schedule: cfg.lr_schedule,
            holdout_mse: mse,
        });
    }
    let best = (0..grid.len())
        .min_by(|&a, &b| {
            let (ra, rb) = (&report[a], &report[b]);
            ra.holdout_mse
                .total_cmp(&rb.holdout_mse)
                .then(ra.hidden_size.cmp(&rb.hidden_size))
                .then(ra.alpha.total_cmp(&rb.alpha))
        })
        .expect("grid is nonempty");
    Ok((grid[best].clone(), report))
}
