//! DeepLIFT-style attribution against a background reference set.
//!
//! Multipliers propagate backward from the aggregated output score: linear
//! layers (conv, transpose conv, dense, upsampling, flatten) pass them like
//! gradients; ReLU uses the rescale rule delta_out / delta_in with a gradient
//! fallback when the pre-activation difference vanishes; max pooling routes
//! through the actual input's argmax, rescaled so the summation-to-delta
//! property is preserved. Attributions are multipliers times (x - reference),
//! averaged over the background set. Everything runs in f64 so the
//! telescoping identity survives to roundoff.


use super::OutputScore;
use crate::grid::Grid;
use crate::nn::{LayerSpec, Network, Tensor};
use crate::{exec, Error, Result};

/// Threshold below which the rescale rule falls back to the gradient.
const RESCALE_EPS: f64 = 1e-9;

/// Signed attribution map at input resolution, averaged over the background.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMap {
    pub values: Grid<f64>,
    pub background_size: usize,
    pub score: OutputScore,
    pub input_id: String,
}

/// Attribution against a single reference, with the two scores needed for
/// the summation-to-delta check.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceAttribution {
    pub phi: Tensor<f64>,
    pub score_x: f64,
    pub score_r: f64,
}

impl ReferenceAttribution {
    pub fn phi_sum(&self) -> f64 {
        self.phi.data.iter().sum()
    }

    /// |sum(phi) - (S(x) - S(r))|.
    pub fn completeness_residual(&self) -> f64 {
        (self.phi_sum() - (self.score_x - self.score_r)).abs()
    }
}

/// Pre- and post-activation outputs of every layer.
struct Caches {
    pre: Vec<Tensor<f64>>,
    post: Vec<Tensor<f64>>,
}

fn forward_caches(net: &Network<f64>, x: &Tensor<f64>) -> Result<Caches> {
    let mut pre = Vec::with_capacity(net.layers.len());
    let mut post = Vec::with_capacity(net.layers.len());
    let mut cur = x.clone();
    for layer in &net.layers {
        let z = layer.forward_linear(&cur)?;
        let mut a = z.clone();
        layer.apply_activation(&mut a);
        pre.push(z);
        post.push(a.clone());
        cur = a;
    }
    Ok(Caches { pre, post })
}

/// Max-pool multiplier. A positive output delta is routed through the actual
/// input's argmax; a negative one through the reference's argmax. At the
/// chosen position |delta_in| >= |delta_out| always holds, so the rescale is
/// singularity-free and the summation-to-delta identity survives every
/// window, including ones the ReLU below has fully zeroed for one side.
fn pool_multiplier(
    spec: (usize, usize),
    in_x: &Tensor<f64>,
    in_r: &Tensor<f64>,
    out_x: &Tensor<f64>,
    out_r: &Tensor<f64>,
    m_out: &Tensor<f64>,
) -> Tensor<f64> {
    let (ph, pw) = spec;
    let (ih, iw, c) = in_x.shape();
    let (oh, ow, _) = out_x.shape();
    let mut m_in = Tensor::zeros(ih, iw, c);
    let argmax = |t: &Tensor<f64>, oy: usize, ox: usize, ch: usize| -> usize {
        let mut best_idx = (oy * ph * iw + ox * pw) * c + ch;
        let mut best = t.data[best_idx];
        for dy in 0..ph {
            for dx in 0..pw {
                let idx = ((oy * ph + dy) * iw + ox * pw + dx) * c + ch;
                if t.data[idx] > best {
                    best = t.data[idx];
                    best_idx = idx;
                }
            }
        }
        best_idx
    };
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let d_out = out_x.at(oy, ox, ch) - out_r.at(oy, ox, ch);
                if d_out == 0.0 {
                    continue;
                }
                let target = if d_out > 0.0 {
                    argmax(in_x, oy, ox, ch)
                } else {
                    argmax(in_r, oy, ox, ch)
                };
                let d_in = in_x.data[target] - in_r.data[target];
                m_in.data[target] += m_out.at(oy, ox, ch) * d_out / d_in;
            }
        }
    }
    m_in
}

fn multipliers(
    net: &Network<f64>,
    x: &Tensor<f64>,
    r: &Tensor<f64>,
    cx: &Caches,
    cr: &Caches,
    score: OutputScore,
) -> Tensor<f64> {
    let n = net.layers.len();
    let mut m = score.gradient::<f64>(cx.post[n - 1].shape());
    for k in (0..n).rev() {
        let layer = &net.layers[k];
        // Activation stage: rescale rule on ReLU layers.
        if layer.spec.activation() == crate::nn::Activation::ReLU {
            for (i, mv) in m.data.iter_mut().enumerate() {
                let dz = cx.pre[k].data[i] - cr.pre[k].data[i];
                let mult = if dz.abs() >= RESCALE_EPS {
                    (cx.post[k].data[i] - cr.post[k].data[i]) / dz
                } else if cx.pre[k].data[i] > 0.0 {
                    1.0
                } else {
                    0.0
                };
                *mv *= mult;
            }
        }
        // Linear stage.
        let in_x = if k == 0 { x } else { &cx.post[k - 1] };
        m = match layer.spec {
            LayerSpec::MaxPool2D { pool } => {
                let in_r = if k == 0 { r } else { &cr.post[k - 1] };
                pool_multiplier(pool, in_x, in_r, &cx.pre[k], &cr.pre[k], &m)
            }
            _ => layer.backward_input(in_x, &m),
        };
    }
    m
}

/// Attribution of `x` against one reference.
pub fn deep_shap_single(
    net: &Network<f64>,
    x: &Tensor<f64>,
    reference: &Tensor<f64>,
    score: OutputScore,
) -> Result<ReferenceAttribution> {
    net.check_input(x)?;
    net.check_input(reference)?;
    score.validate()?;
    let cx = forward_caches(net, x)?;
    let cr = forward_caches(net, reference)?;
    Ok(attribution(net, x, reference, &cx, &cr, score))
}

fn attribution(
    net: &Network<f64>,
    x: &Tensor<f64>,
    r: &Tensor<f64>,
    cx: &Caches,
    cr: &Caches,
    score: OutputScore,
) -> ReferenceAttribution {
    let n = net.layers.len();
    let m = multipliers(net, x, r, cx, cr, score);
    let mut phi = Tensor::from_shape(x.shape());
    for ((p, &mv), (&xv, &rv)) in phi.data.iter_mut().zip(&m.data).zip(x.data.iter().zip(&r.data)) {
        *p = mv * (xv - rv);
    }
    ReferenceAttribution {
        phi,
        score_x: score.apply(&cx.post[n - 1]),
        score_r: score.apply(&cr.post[n - 1]),
    }
}

/// Mean attribution over a background reference set; references are
/// processed in parallel and averaged in order.
pub fn deep_shap(
    net: &Network<f64>,
    x: &Tensor<f64>,
    background: &[Tensor<f64>],
    score: OutputScore,
    input_id: &str,
) -> Result<AttributionMap> {
    if background.is_empty() {
        return Err(Error::InvalidArgument("Deep SHAP needs a non-empty background set".into()));
    }
    net.check_input(x)?;
    score.validate()?;
    let cx = forward_caches(net, x)?;
    let per_ref: Vec<Result<Tensor<f64>>> = exec::map_slice(background, |r| {
        net.check_input(r)?;
        let cr = forward_caches(net, r)?;
        Ok(attribution(net, x, r, &cx, &cr, score).phi)
    });
    let mut mean = Tensor::<f64>::from_shape(x.shape());
    for phi in per_ref {
        let phi = phi?;
        for (m, &p) in mean.data.iter_mut().zip(&phi.data) {
            *m += p;
        }
    }
    let scale = 1.0 / background.len() as f64;
    for m in &mut mean.data {
        *m *= scale;
    }
    Ok(AttributionMap {
        values: mean.channel_to_grid(0),
        background_size: background.len(),
        score,
        input_id: input_id.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};
    use rand::RngExt;

    fn rand_tensor(h: usize, w: usize, seed: u64) -> Tensor<f64> {
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut t = Tensor::zeros(h, w, 1);
        for v in &mut t.data {
            *v = rng.random_range(-1.0..1.0);
        }
        t
    }

    #[test]
    fn linear_network_attributions_are_w_effective_times_delta() {
        // One linear dense layer: phi_i = mean_j(W_ji) * (x - r)_i exactly.
        let net = Network::<f64>::from_specs(
            (1, 1, 6),
            &[LayerSpec::Dense {
                units: 3,
                activation: Activation::Linear,
            }],
            5,
        )
        .unwrap();
        let x = Tensor {
            h: 1,
            w: 1,
            c: 6,
            data: vec![0.4, -0.2, 0.9, 0.1, -0.7, 0.3],
        };
        let r = Tensor {
            h: 1,
            w: 1,
            c: 6,
            data: vec![0.0, 0.1, -0.3, 0.2, 0.5, -0.1],
        };
        let att = deep_shap_single(&net, &x, &r, OutputScore::Mean).unwrap();
        let w = &net.layers[0].weights;
        for i in 0..6 {
            let w_eff: f64 = (0..3).map(|j| w[j * 6 + i]).sum::<f64>() / 3.0;
            let expected = w_eff * (x.data[i] - r.data[i]);
            assert!((att.phi.data[i] - expected).abs() < 1e-14);
        }
        assert!(att.completeness_residual() < 1e-14);
    }

    #[test]
    fn input_equal_to_reference_gives_zero_attributions() {
        let net = Network::<f64>::from_specs(
            (6, 4, 1),
            &[
                LayerSpec::Conv2D {
                    filters: 2,
                    kernel: (3, 3),
                    activation: Activation::ReLU,
                },
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    units: 3,
                    activation: Activation::Linear,
                },
            ],
            2,
        )
        .unwrap();
        let x = rand_tensor(6, 4, 9);
        let att = deep_shap_single(&net, &x, &x, OutputScore::Mean).unwrap();
        assert!(att.phi.data.iter().all(|&p| p == 0.0));
    }

    /// Hand-rolled DeepLIFT for a dense->ReLU->dense net, written
    /// independently of the layer machinery.
    fn oracle_two_layer(
        w1: &[f64],
        b1: &[f64],
        w2: &[f64],
        b2: &[f64],
        n_in: usize,
        n_hidden: usize,
        n_out: usize,
        x: &[f64],
        r: &[f64],
    ) -> (Vec<f64>, f64, f64) {
        let dense = |w: &[f64], b: &[f64], nin: usize, nout: usize, v: &[f64]| -> Vec<f64> {
            (0..nout)
                .map(|j| b[j] + (0..nin).map(|i| w[j * nin + i] * v[i]).sum::<f64>())
                .collect()
        };
        let z1x = dense(w1, b1, n_in, n_hidden, x);
        let z1r = dense(w1, b1, n_in, n_hidden, r);
        let a1x: Vec<f64> = z1x.iter().map(|&z| z.max(0.0)).collect();
        let a1r: Vec<f64> = z1r.iter().map(|&z| z.max(0.0)).collect();
        let yx = dense(w2, b2, n_hidden, n_out, &a1x);
        let yr = dense(w2, b2, n_hidden, n_out, &a1r);
        let sx = yx.iter().sum::<f64>() / n_out as f64;
        let sr = yr.iter().sum::<f64>() / n_out as f64;
        // Multipliers: output mean -> hidden post -> hidden pre -> input.
        let m_out = 1.0 / n_out as f64;
        let m_hidden_post: Vec<f64> = (0..n_hidden)
            .map(|h| (0..n_out).map(|j| m_out * w2[j * n_hidden + h]).sum::<f64>())
            .collect();
        let m_hidden_pre: Vec<f64> = (0..n_hidden)
            .map(|h| {
                let dz = z1x[h] - z1r[h];
                let rat = if dz.abs() >= 1e-9 {
                    (a1x[h] - a1r[h]) / dz
                } else if z1x[h] > 0.0 {
                    1.0
                } else {
                    0.0
                };
                m_hidden_post[h] * rat
            })
            .collect();
        let phi: Vec<f64> = (0..n_in)
            .map(|i| {
                let m: f64 = (0..n_hidden).map(|h| m_hidden_pre[h] * w1[h * n_in + i]).sum();
                m * (x[i] - r[i])
            })
            .collect();
        (phi, sx, sr)
    }

    #[test]
    fn matches_hand_rolled_two_layer_oracle() {
        let (n_in, n_hidden, n_out) = (5, 4, 3);
        let net = Network::<f64>::from_specs(
            (1, 1, n_in),
            &[
                LayerSpec::Dense {
                    units: n_hidden,
                    activation: Activation::ReLU,
                },
                LayerSpec::Dense {
                    units: n_out,
                    activation: Activation::Linear,
                },
            ],
            17,
        )
        .unwrap();
        let mut rng = crate::rng::rng_from_seed(23);
        for trial in 0..20 {
            let x = Tensor {
                h: 1,
                w: 1,
                c: n_in,
                data: (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            let r = Tensor {
                h: 1,
                w: 1,
                c: n_in,
                data: (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            let att = deep_shap_single(&net, &x, &r, OutputScore::Mean).unwrap();
            let (phi, sx, sr) = oracle_two_layer(
                &net.layers[0].weights,
                &net.layers[0].bias,
                &net.layers[1].weights,
                &net.layers[1].bias,
                n_in,
                n_hidden,
                n_out,
                &x.data,
                &r.data,
            );
            for (a, b) in att.phi.data.iter().zip(&phi) {
                assert!((a - b).abs() < 1e-12, "trial {trial}");
            }
            assert!((att.score_x - sx).abs() < 1e-12);
            assert!((att.score_r - sr).abs() < 1e-12);
            // Summation-to-delta against the oracle's own scores.
            let delta = sx - sr;
            assert!(
                att.completeness_residual() <= 1e-6 * delta.abs() + 1e-8,
                "residual {} vs delta {delta}",
                att.completeness_residual()
            );
        }
    }

    #[test]
    fn completeness_through_conv_pool_relu_stack() {
        let net = Network::<f64>::from_specs(
            (12, 9, 1),
            &[
                LayerSpec::Conv2D {
                    filters: 3,
                    kernel: (3, 3),
                    activation: Activation::ReLU,
                },
                LayerSpec::MaxPool2D { pool: (2, 2) },
                LayerSpec::Conv2D {
                    filters: 2,
                    kernel: (3, 1),
                    activation: Activation::ReLU,
                },
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    units: 6,
                    activation: Activation::Linear,
                },
            ],
            31,
        )
        .unwrap();
        for seed in 0..10 {
            let x = rand_tensor(12, 9, 100 + seed);
            let r = rand_tensor(12, 9, 200 + seed);
            let att = deep_shap_single(&net, &x, &r, OutputScore::Mean).unwrap();
            let delta = att.score_x - att.score_r;
            assert!(
                att.completeness_residual() <= 1e-6 * delta.abs() + 1e-8,
                "seed {seed}: residual {} vs delta {delta}",
                att.completeness_residual()
            );
        }
    }

    #[test]
    fn linear_scaling_of_input_difference_scales_attributions() {
        let net = Network::<f64>::from_specs(
            (1, 1, 8),
            &[
                LayerSpec::Dense {
                    units: 5,
                    activation: Activation::Linear,
                },
                LayerSpec::Dense {
                    units: 2,
                    activation: Activation::Linear,
                },
            ],
            3,
        )
        .unwrap();
        let r = Tensor {
            h: 1,
            w: 1,
            c: 8,
            data: rand_tensor(2, 4, 41).data,
        };
        let d = Tensor {
            h: 1,
            w: 1,
            c: 8,
            data: rand_tensor(2, 4, 43).data,
        };
        let alpha = 2.5;
        let x1 = Tensor {
            h: 1,
            w: 1,
            c: 8,
            data: r.data.iter().zip(&d.data).map(|(&rv, &dv)| rv + dv).collect(),
        };
        let x2 = Tensor {
            h: 1,
            w: 1,
            c: 8,
            data: r.data.iter().zip(&d.data).map(|(&rv, &dv)| rv + alpha * dv).collect(),
        };
        let a1 = deep_shap_single(&net, &x1, &r, OutputScore::Mean).unwrap();
        let a2 = deep_shap_single(&net, &x2, &r, OutputScore::Mean).unwrap();
        for (p1, p2) in a1.phi.data.iter().zip(&a2.phi.data) {
            assert!((p2 - alpha * p1).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_background_rejected() {
        let net = Network::<f64>::from_specs(
            (1, 1, 4),
            &[LayerSpec::Dense {
                units: 2,
                activation: Activation::Linear,
            }],
            1,
        )
        .unwrap();
        let x = Tensor::zeros(1, 1, 4);
        assert!(matches!(
            deep_shap(&net, &x, &[], OutputScore::Mean, "t"),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn mean_over_background_matches_singles() {
        let net = Network::<f64>::from_specs(
            (1, 1, 4),
            &[
                LayerSpec::Dense {
                    units: 3,
                    activation: Activation::ReLU,
                },
                LayerSpec::Dense {
                    units: 2,
                    activation: Activation::Linear,
                },
            ],
            7,
        )
        .unwrap();
        let x = Tensor {
            h: 1,
            w: 1,
            c: 4,
            data: vec![0.3, -0.8, 0.5, 0.1],
        };
        let refs: Vec<Tensor<f64>> = (0..3)
            .map(|s| Tensor {
                h: 1,
                w: 1,
                c: 4,
                data: rand_tensor(2, 2, 300 + s).data,
            })
            .collect();
        let map = deep_shap(&net, &x, &refs, OutputScore::Mean, "t").unwrap();
        let mut manual = vec![0.0; 4];
        for r in &refs {
            let a = deep_shap_single(&net, &x, r, OutputScore::Mean).unwrap();
            for (m, &p) in manual.iter_mut().zip(&a.phi.data) {
                *m += p / refs.len() as f64;
            }
        }
        for (a, b) in map.values.data().iter().zip(&manual) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
