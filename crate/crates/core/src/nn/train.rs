use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{NetGrads, Network, Real, Tensor};
use crate::rng::rng_from_seed;
use crate::{exec, Error, Result};

/// Optimization settings: Adam on mean absolute error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-4,
            batch_size: 16,
            epochs: 40,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            validation_fraction: 0.20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("learning rate, batch size and epochs must be positive".into()));
        }
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            return Err(Error::InvalidConfig("validation fraction must be in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("bad Adam parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mae: f64,
    pub val_mae: f64,
}

/// Loss history; epoch 0 is the untrained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
}

impl TrainReport {
    pub fn initial_train_mae(&self) -> f64 {
        self.history.first().map(|e| e.train_mae).unwrap_or(f64::NAN)
    }

    pub fn final_train_mae(&self) -> f64 {
        self.history.last().map(|e| e.train_mae).unwrap_or(f64::NAN)
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "epoch,train_mae,val_mae")?;
        for e in &self.history {
            writeln!(f, "{},{},{}", e.epoch, e.train_mae, e.val_mae)?;
        }
        Ok(())
    }
}

/// Sum of absolute errors between two equally sized tensors.
fn abs_error_sum<T: Real>(pred: &Tensor<T>, label: &Tensor<T>) -> f64 {
    debug_assert_eq!(pred.len(), label.len());
    pred.data
        .iter()
        .zip(&label.data)
        .map(|(&p, &y)| (p.to_f64() - y.to_f64()).abs())
        .sum()
}

/// Mean absolute error of the network over a dataset.
pub fn evaluate_mae<T: Real>(net: &Network<T>, data: &[(Tensor<T>, Tensor<T>)]) -> Result<f64> {
    if data.is_empty() {
        return Ok(f64::NAN);
    }
    let sums = exec::map_slice(data, |(x, y)| net.forward(x).map(|p| abs_error_sum(&p, y)));
    let mut total = 0.0;
    for s in sums {
        total += s?;
    }
    let n_out = data[0].1.len();
    Ok(total / (data.len() * n_out) as f64)
}

struct Adam<T> {
    m: Vec<(Vec<T>, Vec<T>)>,
    v: Vec<(Vec<T>, Vec<T>)>,
    t: u32,
}

impl<T: Real> Adam<T> {
    fn new(net: &Network<T>) -> Self {
        let zeros = |net: &Network<T>| {
            net.layers
                .iter()
                .map(|l| (vec![T::ZERO; l.weights.len()], vec![T::ZERO; l.bias.len()]))
                .collect()
        };
        Adam {
            m: zeros(net),
            v: zeros(net),
            t: 0,
        }
    }

    fn step(&mut self, net: &mut Network<T>, grads: &NetGrads<T>, cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        // Fold the bias corrections into one scalar step size.
        let alpha = T::from_f64(cfg.learning_rate / bc1);
        let vscale = T::from_f64(1.0 / bc2);
        let b1 = T::from_f64(cfg.beta1);
        let b1c = T::from_f64(1.0 - cfg.beta1);
        let b2 = T::from_f64(cfg.beta2);
        let b2c = T::from_f64(1.0 - cfg.beta2);
        let eps = T::from_f64(cfg.epsilon);
        for (k, layer) in net.layers.iter_mut().enumerate() {
            adam_update(&mut layer.weights, &grads.layers[k].0, &mut self.m[k].0, &mut self.v[k].0, alpha, vscale, b1, b1c, b2, b2c, eps);
            adam_update(&mut layer.bias, &grads.layers[k].1, &mut self.m[k].1, &mut self.v[k].1, alpha, vscale, b1, b1c, b2, b2c, eps);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_update<T: Real>(
    w: &mut [T],
    g: &[T],
    m: &mut [T],
    v: &mut [T],
    alpha: T,
    vscale: T,
    b1: T,
    b1c: T,
    b2: T,
    b2c: T,
    eps: T,
) {
    let update = |w: &mut [T], g: &[T], m: &mut [T], v: &mut [T]| {
        for i in 0..w.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + b1c * gi;
            v[i] = b2 * v[i] + b2c * gi * gi;
            let vhat = (v[i] * vscale).sqrt() + eps;
            w[i] -= alpha * m[i] / vhat;
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        const CHUNK: usize = 1 << 15;
        w.par_chunks_mut(CHUNK)
            .zip(g.par_chunks(CHUNK))
            .zip(m.par_chunks_mut(CHUNK))
            .zip(v.par_chunks_mut(CHUNK))
            .for_each(|(((wc, gc), mc), vc)| update(wc, gc, mc, vc));
    }
    #[cfg(not(feature = "parallel"))]
    {
        update(w, g, m, v);
    }
}

/// Mini-batch Adam on MAE. Validation is split off the provided data by a
/// seeded shuffle; epoch 0 in the history records the untrained losses.
/// Deterministic: same seed, same data, same history, same final weights.
pub fn train<T: Real>(
    net: &mut Network<T>,
    data: &[(Tensor<T>, Tensor<T>)],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training dataset".into()));
    }
    let n_out: usize = net.output_shape().0 * net.output_shape().1 * net.output_shape().2;
    for (x, y) in data {
        net.check_input(x)?;
        if y.len() != n_out {
            return Err(Error::shape(format!("label len {n_out}"), format!("{}", y.len())));
        }
    }

    let mut rng = rng_from_seed(cfg.seed);
    let mut indices: Vec<usize> = (0..data.len()).collect();
    indices.shuffle(&mut rng);
    let n_val = ((data.len() as f64) * cfg.validation_fraction).round() as usize;
    let (val_idx, train_idx) = indices.split_at(n_val.min(data.len().saturating_sub(1)));
    let val_set: Vec<(Tensor<T>, Tensor<T>)> = val_idx.iter().map(|&i| data[i].clone()).collect();
    let train_set: Vec<(Tensor<T>, Tensor<T>)> = train_idx.iter().map(|&i| data[i].clone()).collect();

    let mut history = vec![EpochStats {
        epoch: 0,
        train_mae: evaluate_mae(net, &train_set)?,
        val_mae: evaluate_mae(net, &val_set)?,
    }];

    let mut grads = NetGrads::zeros_like(net);
    let mut adam = Adam::new(net);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut abs_sum = 0.0;
        let mut seen = 0usize;
        for (batch_no, batch_idx) in order.chunks(cfg.batch_size).enumerate() {
            let inputs: Vec<Tensor<T>> = batch_idx.iter().map(|&i| train_set[i].0.clone()).collect();
            let labels: Vec<&Tensor<T>> = batch_idx.iter().map(|&i| &train_set[i].1).collect();

            let acts = net.forward_batch(&inputs)?;
            let scale = T::from_f64(1.0 / (batch_idx.len() * n_out) as f64);
            let mut batch_abs = 0.0;
            let mut d_outs = Vec::with_capacity(inputs.len());
            for (s, label) in labels.iter().enumerate() {
                let pred = &acts[s][net.layers.len() - 1];
                batch_abs += abs_error_sum(pred, label);
                let mut d = Tensor::from_shape(pred.shape());
                for ((dv, &p), &y) in d.data.iter_mut().zip(&pred.data).zip(&label.data) {
                    *dv = if p > y {
                        scale
                    } else if p < y {
                        -scale
                    } else {
                        T::ZERO
                    };
                }
                d_outs.push(d);
            }
            if !batch_abs.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: batch_no });
            }
            abs_sum += batch_abs;
            seen += batch_idx.len();

            grads.reset();
            net.backward_batch(&inputs, &acts, d_outs, &mut grads);
            adam.step(net, &grads, cfg);
        }
        let train_mae = abs_sum / (seen * n_out) as f64;
        let val_mae = evaluate_mae(net, &val_set)?;
        if !train_mae.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0 });
        }
        history.push(EpochStats {
            epoch,
            train_mae,
            val_mae,
        });
    }

    Ok(TrainReport { history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};

    fn toy_data(n: usize, seed: u64) -> Vec<(Tensor<f32>, Tensor<f32>)> {
        use rand::RngExt;
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                let mut x = Tensor::zeros(6, 5, 1);
                for v in &mut x.data {
                    *v = rng.random_range(0.0..1.0);
                }
                let mut y = Tensor::zeros(1, 1, 4);
                for v in &mut y.data {
                    *v = rng.random_range(0.0..1.0);
                }
                (x, y)
            })
            .collect()
    }

    fn toy_net(seed: u64) -> Network<f32> {
        Network::from_specs(
            (6, 5, 1),
            &[
                LayerSpec::Conv2D {
                    filters: 3,
                    kernel: (3, 3),
                    activation: Activation::ReLU,
                },
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    units: 4,
                    activation: Activation::Linear,
                },
            ],
            seed,
        )
        .unwrap()
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let data = toy_data(24, 5);
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 4,
            learning_rate: 5e-3,
            seed: 9,
            ..Default::default()
        };
        let mut net_a = toy_net(2);
        let report_a = train(&mut net_a, &data, &cfg).unwrap();
        assert!(report_a.final_train_mae() < report_a.initial_train_mae());

        let mut net_b = toy_net(2);
        let report_b = train(&mut net_b, &data, &cfg).unwrap();
        assert_eq!(report_a, report_b);
        assert_eq!(net_a, net_b);
    }

    #[test]
    fn history_includes_untrained_epoch_zero() {
        let data = toy_data(10, 1);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 4,
            seed: 3,
            ..Default::default()
        };
        let mut net = toy_net(1);
        let report = train(&mut net, &data, &cfg).unwrap();
        assert_eq!(report.history.len(), 3);
        assert_eq!(report.history[0].epoch, 0);
        assert!(report.history.iter().all(|e| e.train_mae.is_finite() && e.val_mae.is_finite()));
    }

    #[test]
    fn empty_dataset_rejected() {
        let mut net = toy_net(1);
        assert!(train(&mut net, &[], &TrainConfig::default()).is_err());
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = TrainConfig {
            validation_fraction: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_are_the_published_hyperparameters() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.learning_rate, 5e-4);
        assert_eq!(cfg.batch_size, 16);
        assert_eq!(cfg.epochs, 40);
        assert_eq!(cfg.beta1, 0.9);
        assert_eq!(cfg.beta2, 0.999);
        assert_eq!(cfg.epsilon, 1e-7);
        assert_eq!(cfg.validation_fraction, 0.20);
    }
}
