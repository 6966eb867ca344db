//! Finite-difference validation of the analytic gradients.

use rand::RngExt;

use super::{NetGrads, Network, Tensor};
use crate::rng::rng_from_seed;
use crate::Result;

fn mae_loss(net: &Network<f64>, x: &Tensor<f64>, y: &Tensor<f64>) -> Result<f64> {
    let pred = net.forward(x)?;
    Ok(pred
        .data
        .iter()
        .zip(&y.data)
        .map(|(&p, &t)| (p - t).abs())
        .sum::<f64>()
        / y.len() as f64)
}

/// Analytic parameter gradients of the MAE loss for one sample.
pub fn analytic_grads(net: &Network<f64>, x: &Tensor<f64>, y: &Tensor<f64>) -> Result<NetGrads<f64>> {
    let inputs = vec![x.clone()];
    let acts = net.forward_batch(&inputs)?;
    let pred = &acts[0][net.layers.len() - 1];
    let scale = 1.0 / y.len() as f64;
    let mut d = Tensor::from_shape(pred.shape());
    for ((dv, &p), &t) in d.data.iter_mut().zip(&pred.data).zip(&y.data) {
        *dv = scale * (p - t).signum();
    }
    let mut grads = NetGrads::zeros_like(net);
    net.backward_batch(&inputs, &acts, vec![d], &mut grads);
    Ok(grads)
}

/// Compares analytic gradients with central finite differences on a random
/// parameter subset; returns the maximum relative error. Runs in f64 with a
/// step of 1e-5.
pub fn gradient_check(
    net: &Network<f64>,
    x: &Tensor<f64>,
    y: &Tensor<f64>,
    samples_per_layer: usize,
    seed: u64,
) -> Result<f64> {
    let step = 1e-5;
    let grads = analytic_grads(net, x, y)?;
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    let mut scratch = net.clone();
    for k in 0..net.layers.len() {
        for (param_kind, n_params) in [(0, net.layers[k].weights.len()), (1, net.layers[k].bias.len())] {
            if n_params == 0 {
                continue;
            }
            for _ in 0..samples_per_layer.min(n_params) {
                let idx = rng.random_range(0..n_params);
                let read = |l: &Network<f64>| {
                    if param_kind == 0 {
                        l.layers[k].weights[idx]
                    } else {
                        l.layers[k].bias[idx]
                    }
                };
                let write = |l: &mut Network<f64>, v: f64| {
                    if param_kind == 0 {
                        l.layers[k].weights[idx] = v;
                    } else {
                        l.layers[k].bias[idx] = v;
                    }
                };
                let orig = read(net);
                write(&mut scratch, orig + step);
                let up = mae_loss(&scratch, x, y)?;
                write(&mut scratch, orig - step);
                let down = mae_loss(&scratch, x, y)?;
                write(&mut scratch, orig);
                let numeric = (up - down) / (2.0 * step);
                let analytic = if param_kind == 0 {
                    grads.layers[k].0[idx]
                } else {
                    grads.layers[k].1[idx]
                };
                let denom = analytic.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max((analytic - numeric).abs() / denom);
            }
        }
    }
    Ok(worst)
}
