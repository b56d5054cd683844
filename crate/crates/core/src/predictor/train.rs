use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::FEATURES;
use super::{Activation, Dataset, Mlp, PredictorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// `base_lr / sqrt(epoch + 1)`.
    InverseScaling,
    /// Halve the rate after two consecutive epochs without validation improvement.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub activation: Activation,
    pub alpha: f64,
    pub lr_schedule: LrSchedule,
    pub base_lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_size: 4000,
            activation: Activation::Relu,
            alpha: 0.05,
            lr_schedule: LrSchedule::Constant,
            base_lr: 1e-3,
            batch_size: 200,
            max_epochs: 200,
            seed: 0,
            patience: 10,
            validation_fraction: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PredictorError> {
        let ok = self.hidden_size >= 1
            && self.base_lr > 0.0
            && self.batch_size >= 1
            && self.max_epochs >= 1
            && self.alpha >= 0.0
            && (0.0..0.5).contains(&self.validation_fraction)
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PredictorError::InvalidConfig(format!("{self:?}")))
        }
    }

    /// Cartesian product of the candidate values, on top of `self`.
    pub fn lattice(&self, hidden: &[usize], activations: &[Activation], alphas: &[f64], schedules: &[LrSchedule]) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &h in hidden {
            for &a in activations {
                for &al in alphas {
                    for &s in schedules {
                        out.push(TrainConfig {
                            hidden_size: h,
                            activation: a,
                            alpha: al,
                            lr_schedule: s,
                            ..self.clone()
                        });
                    }
                }
            }
        }
        out
    }

    /// The full candidate lattice: 3 hidden sizes, 2 activations, 4 alphas, 3 schedules.
    pub fn reference_lattice(&self) -> Vec<TrainConfig> {
        self.lattice(
            &[1000, 2500, 4000],
            &[Activation::Identity, Activation::Relu],
            &[0.0001, 0.05, 0.5, 0.8],
            &[LrSchedule::Constant, LrSchedule::InverseScaling, LrSchedule::Adaptive],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Full-train-set loss before the first update.
    pub initial_loss: f64,
    /// Full-train-set loss after each epoch.
    pub epoch_losses: Vec<f64>,
    pub validation_losses: Vec<f64>,
    /// Step size used in each epoch.
    pub learning_rates: Vec<f64>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
    pub final_loss: f64,
}

/// Regularized loss and its gradient (flattened like [`Mlp::params_flat`]) on
/// standardized inputs `xs` and standardized targets `ys`:
/// `½·mean((ŷ−y)²) + α/(2N)·(‖W1‖² + ‖w2‖²)`.
pub fn loss_and_gradient(m: &Mlp, xs: &[[f64; FEATURES]], ys: &[f64], alpha: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; m.params_len()];
    let loss = accumulate(m, xs, ys, alpha, Some(&mut grad));
    (loss, grad)
}

fn accumulate(m: &Mlp, xs: &[[f64; FEATURES]], ys: &[f64], alpha: f64, mut grad: Option<&mut [f64]>) -> f64 {
    let h = m.hidden();
    let n = xs.len() as f64;
    let mut z = vec![0.0; h];
    let mut sq = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let mut out = m.b2;
        for j in 0..h {
            let row = &m.w1[j * FEATURES..(j + 1) * FEATURES];
            let mut s = m.b1[j];
            for i in 0..FEATURES {
                s += row[i] * x[i];
            }
            z[j] = s;
            out += m.w2[j] * m.activation.apply(s);
        }
        let r = out - y;
        sq += r * r;
        if let Some(g) = grad.as_deref_mut() {
            let d = r / n;
            let (gw1, rest) = g.split_at_mut(h * FEATURES);
            let (gb1, rest) = rest.split_at_mut(h);
            let (gw2, gb2) = rest.split_at_mut(h);
            gb2[0] += d;
            for j in 0..h {
                let act = m.activation.apply(z[j]);
                gw2[j] += d * act;
                let dz = d * m.w2[j] * m.activation.derivative(z[j]);
                if dz != 0.0 {
                    gb1[j] += dz;
                    let gr = &mut gw1[j * FEATURES..(j + 1) * FEATURES];
                    for i in 0..FEATURES {
                        gr[i] += dz * x[i];
                    }
                }
            }
        }
    }
    let l2: f64 = m.w1.iter().chain(&m.w2).map(|w| w * w).sum();
    if let Some(g) = grad {
        let k = alpha / n;
        let (gw1, rest) = g.split_at_mut(h * FEATURES);
        for (gw, w) in gw1.iter_mut().zip(&m.w1) {
            *gw += k * w;
        }
        for (gw, w) in rest[h..2 * h].iter_mut().zip(&m.w2) {
            *gw += k * w;
        }
    }
    0.5 * sq / n + 0.5 * alpha / n * l2
}

fn mean_std(vals: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = vals.clone().count() as f64;
    let mean = vals.clone().sum::<f64>() / n;
    let var = vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 * mean.abs().max(1.0) { std } else { 1.0 })
}

fn init(cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Mlp {
    let h = cfg.hidden_size;
    let mut m = Mlp::zeros(h, cfg.activation);
    let gain = if cfg.activation == Activation::Relu { 2.0 } else { 1.0 };
    let b1 = (gain * 6.0 / (FEATURES + h) as f64).sqrt();
    let b2 = (gain * 6.0 / (h + 1) as f64).sqrt();
    for w in m.w1.iter_mut() {
        *w = rng.gen_range(-b1..b1);
    }
    for w in m.b1.iter_mut() {
        *w = rng.gen_range(-b1..b1);
    }
    for w in m.w2.iter_mut() {
        *w = rng.gen_range(-b2..b2);
    }
    m.b2 = rng.gen_range(-b2..b2);
    m
}

pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<Mlp, PredictorError> {
    train_with_report(ds, cfg).map(|(m, _)| m)
}

/// Adam on minibatches with a held-out validation slice for early stopping.
/// The weights of the best validation epoch are returned.
pub fn train_with_report(ds: &Dataset, cfg: &TrainConfig) -> Result<(Mlp, TrainReport), PredictorError> {
    cfg.validate()?;
    if ds.rows.len() < 10 {
        return Err(PredictorError::TooFewRows {
            needed: 10,
            got: ds.rows.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..ds.rows.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((ds.rows.len() as f64 * cfg.validation_fraction).floor() as usize).min(ds.rows.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);

    let mut m = init(cfg, &mut rng);
    for i in 0..FEATURES {
        let (mu, sd) = mean_std(train_idx.iter().map(|&r| ds.rows[r].features[i]));
        m.x_mean[i] = mu;
        m.x_std[i] = sd;
    }
    let (mu, sd) = mean_std(train_idx.iter().map(|&r| ds.rows[r].label));
    m.y_mean = mu;
    m.y_std = sd;
    let prep = |idx: &[usize]| -> (Vec<[f64; FEATURES]>, Vec<f64>) {
        idx.iter()
            .map(|&r| (m.standardize(&ds.rows[r].features), (ds.rows[r].label - mu) / sd))
            .unzip()
    };
    let (xt, yt) = prep(train_idx);
    let (xv, yv) = if val_idx.is_empty() { (xt.clone(), yt.clone()) } else { prep(val_idx) };

    let full_loss = |m: &Mlp| accumulate(m, &xt, &yt, cfg.alpha, None);
    let val_loss = |m: &Mlp| accumulate(m, &xv, &yv, 0.0, None);
    let initial_loss = full_loss(&m);
    let mut report = TrainReport {
        initial_loss,
        epoch_losses: Vec::new(),
        validation_losses: Vec::new(),
        learning_rates: Vec::new(),
        best_epoch: 0,
        final_loss: initial_loss,
    };

    let np = m.params_len();
    let mut theta = m.params_flat();
    let mut mom = vec![0.0; np];
    let mut vel = vec![0.0; np];
    let mut step = 0i32;
    let mut best = (val_loss(&m), theta.clone(), initial_loss);
    let mut since_best = 0;
    let mut lr = cfg.base_lr;
    let mut adaptive_misses = 0;
    let mut prev_val = best.0;
    let mut batch_order: Vec<usize> = (0..xt.len()).collect();
    let mut bx = Vec::with_capacity(cfg.batch_size);
    let mut by = Vec::with_capacity(cfg.batch_size);
    let mut grad = vec![0.0; np];

    for epoch in 0..cfg.max_epochs {
        if cfg.lr_schedule == LrSchedule::InverseScaling {
            lr = cfg.base_lr / ((epoch + 1) as f64).sqrt();
        }
        report.learning_rates.push(lr);
        batch_order.shuffle(&mut rng);
        for chunk in batch_order.chunks(cfg.batch_size) {
            bx.clear();
            by.clear();
            bx.extend(chunk.iter().map(|&i| xt[i]));
            by.extend(chunk.iter().map(|&i| yt[i]));
            grad.iter_mut().for_each(|g| *g = 0.0);
            let l = accumulate(&m, &bx, &by, cfg.alpha, Some(&mut grad));
            if !l.is_finite() {
                return Err(PredictorError::Divergence { epoch });
            }
            step += 1;
            let c1 = 1.0 - cfg.beta1.powi(step);
            let c2 = 1.0 - cfg.beta2.powi(step);
            for k in 0..np {
                let g = grad[k];
                mom[k] = cfg.beta1 * mom[k] + (1.0 - cfg.beta1) * g;
                vel[k] = cfg.beta2 * vel[k] + (1.0 - cfg.beta2) * g * g;
                theta[k] -= lr * (mom[k] / c1) / ((vel[k] / c2).sqrt() + cfg.epsilon);
            }
            m.set_params_flat(&theta);
        }
        let tl = full_loss(&m);
        let vl = val_loss(&m);
        if !tl.is_finite() || !vl.is_finite() {
            return Err(PredictorError::Divergence { epoch });
        }
        report.epoch_losses.push(tl);
        report.validation_losses.push(vl);
        if cfg.lr_schedule == LrSchedule::Adaptive {
            if vl < prev_val - 1e-4 * prev_val.abs() {
                adaptive_misses = 0;
            } else {
                adaptive_misses += 1;
                if adaptive_misses >= 2 {
                    lr *= 0.5;
                    adaptive_misses = 0;
                }
            }
            prev_val = vl;
        }
        if vl < best.0 {
            best = (vl, theta.clone(), tl);
            report.best_epoch = epoch + 1;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    m.set_params_flat(&best.1);
    report.final_loss = best.2;
    Ok((m, report))
}
