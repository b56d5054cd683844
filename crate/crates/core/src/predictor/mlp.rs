use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PredictorError, TrainConfig};

pub const MODEL_VERSION: u32 = 1;
pub const FEATURES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    #[inline]
    pub(crate) fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
        }
    }

    #[inline]
    pub(crate) fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `y = y_mean + y_std · (w2 · act(W1 · x̂ + b1) + b2)` with `x̂` the standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub activation: Activation,
    /// Row-major `hidden × 6`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub x_mean: [f64; FEATURES],
    pub x_std: [f64; FEATURES],
    pub y_mean: f64,
    pub y_std: f64,
}

impl Mlp {
    /// Zero-weight network with identity standardization.
    pub fn zeros(hidden: usize, activation: Activation) -> Self {
        Self {
            activation,
            w1: vec![0.0; hidden * FEATURES],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            x_mean: [0.0; FEATURES],
            x_std: [1.0; FEATURES],
            y_mean: 0.0,
            y_std: 1.0,
        }
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        let h = self.hidden();
        let bad = |m: &str| Err(PredictorError::InvalidConfig(m.to_string()));
        if h == 0 {
            return bad("hidden size must be at least 1");
        }
        if self.w1.len() != h * FEATURES || self.w2.len() != h {
            return bad("weight shapes disagree with the hidden size");
        }
        let weights = self.w1.iter().chain(&self.b1).chain(&self.w2).chain(std::iter::once(&self.b2));
        if weights.chain(&self.x_mean).any(|w| !w.is_finite()) || !self.y_mean.is_finite() {
            return bad("non-finite weight");
        }
        if self.x_std.iter().chain(std::iter::once(&self.y_std)).any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad("standardization scales must be positive");
        }
        Ok(())
    }

    pub fn standardize(&self, f: &[f64; FEATURES]) -> [f64; FEATURES] {
        std::array::from_fn(|i| (f[i] - self.x_mean[i]) / self.x_std[i])
    }

    /// Network output in standardized label units.
    pub(crate) fn raw(&self, x: &[f64; FEATURES]) -> f64 {
        let mut out = self.b2;
        for (j, row) in self.w1.chunks_exact(FEATURES).enumerate() {
            let z = self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            out += self.w2[j] * self.activation.apply(z);
        }
        out
    }

    /// Unclamped prediction in seconds.
    pub fn predict_unclamped(&self, f: &[f64; FEATURES]) -> f64 {
        self.y_mean + self.y_std * self.raw(&self.standardize(f))
    }

    /// Predicted seconds, never negative.
    pub fn predict(&self, f: &[f64; FEATURES]) -> f64 {
        self.predict_unclamped(f).max(0.0)
    }

    pub(crate) fn params_len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Weights flattened as `[W1, b1, w2, b2]`.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.params_len());
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn set_params_flat(&mut self, v: &[f64]) {
        let (a, b) = (self.w1.len(), self.b1.len());
        self.w1.copy_from_slice(&v[..a]);
        self.b1.copy_from_slice(&v[a..a + b]);
        self.w2.copy_from_slice(&v[a + b..a + 2 * b]);
        self.b2 = v[a + 2 * b];
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    config: Option<TrainConfig>,
    model: Mlp,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

fn parse_error(e: serde_json::Error) -> PredictorError {
    PredictorError::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    }
}

/// Writes the model as JSON alongside the configuration that produced it.
pub fn save_model(path: &Path, model: &Mlp, config: Option<&TrainConfig>) -> Result<(), PredictorError> {
    let file = ModelFile {
        version: MODEL_VERSION,
        config: config.cloned(),
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&file).expect("model serializes");
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(Mlp, Option<TrainConfig>), PredictorError> {
    let text = fs::read_to_string(path)?;
    model_from_str(&text)
}

pub(crate) fn model_from_str(text: &str) -> Result<(Mlp, Option<TrainConfig>), PredictorError> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(parse_error)?;
    if probe.version != MODEL_VERSION {
        return Err(PredictorError::Incompatible {
            found: probe.version,
            expected: MODEL_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_str(text).map_err(parse_error)?;
    file.model.validate()?;
    Ok((file.model, file.config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_head() {
        let mut m = Mlp::zeros(4, Activation::Relu);
        m.b2 = 120.0;
        m.w1.iter_mut().enumerate().for_each(|(i, w)| *w = i as f64 * 0.1);
        for f in [[0.0; 6], [1e3, -5e2, 3.0, 4.0, 1e4, 7.0]] {
            assert_eq!(m.predict(&f), 120.0);
        }
    }

    #[test]
    fn negative_output_clamps() {
        let mut m = Mlp::zeros(1, Activation::Identity);
        m.b2 = -3.0;
        assert_eq!(m.predict_unclamped(&[0.0; 6]), -3.0);
        assert_eq!(m.predict(&[0.0; 6]), 0.0);
    }

    #[test]
    fn version_and_truncation_errors() {
        let m = Mlp::zeros(2, Activation::Relu);
        let file = ModelFile {
            version: MODEL_VERSION,
            config: None,
            model: m,
        };
        let text = serde_json::to_string(&file).unwrap();
        assert!(model_from_str(&text).is_ok());
        assert!(matches!(model_from_str(&text[..text.len() / 2]), Err(PredictorError::Parse { .. })));
        let bumped = text.replacen(&format!("\"version\":{MODEL_VERSION}"), "\"version\":99", 1);
        assert!(matches!(model_from_str(&bumped), Err(PredictorError::Incompatible { found: 99, .. })));
    }
}
