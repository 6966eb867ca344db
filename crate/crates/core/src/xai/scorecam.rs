use serde::{Deserialize, Serialize};

use super::{bilinear_resize, OutputScore};
use crate::grid::Grid;
use crate::nn::{Network, Tensor};
use crate::{exec, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeatmapSource {
    Layer(usize),
    Average,
}

/// Non-negative saliency map at input resolution, display-normalized so the
/// maximum is 1 unless the map is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub values: Grid<f64>,
    pub source: HeatmapSource,
    pub input_id: String,
}

fn display_normalize(mut g: Grid<f64>) -> Grid<f64> {
    let max = g.data().iter().copied().fold(0.0f64, f64::max);
    if max > 0.0 {
        for v in g.data_mut() {
            *v /= max;
        }
    }
    g
}

/// Score-CAM for one convolutional layer:
/// feature maps are upsampled to input size, min-max normalized into masks,
/// each mask scores one masked forward pass against the all-zero baseline,
/// and the ReLU of the softmax-weighted sum of upsampled maps is the heatmap.
pub fn score_cam(
    net: &Network<f32>,
    input: &Tensor<f32>,
    layer: usize,
    score: OutputScore,
    input_id: &str,
) -> Result<Heatmap> {
    net.check_input(input)?;
    score.validate()?;
    let spec = net
        .layers
        .get(layer)
        .ok_or_else(|| Error::InvalidArgument(format!("layer index {layer} out of range")))?
        .spec;
    if !spec.is_convolutional() {
        return Err(Error::InvalidArgument(format!(
            "Score-CAM needs a convolutional layer, layer {layer} is {}",
            spec.name()
        )));
    }

    let (in_h, in_w, _) = input.shape();
    let (_, cache) = net.forward_cached(input)?;
    let maps = &cache[layer];
    let k_maps = maps.c;

    // Upsampled raw maps (for the combination) and normalized masks.
    let upsampled: Vec<Grid<f64>> = (0..k_maps)
        .map(|k| bilinear_resize(&maps.channel_to_grid(k), in_h, in_w))
        .collect();
    let masks: Vec<Grid<f64>> = upsampled
        .iter()
        .map(|up| {
            let lo = up.min();
            let hi = up.max();
            if hi > lo {
                up.map(|v| (v - lo) / (hi - lo))
            } else {
                // Constant map carries no spatial information: zero mask.
                Grid::filled(up.rows(), up.cols(), 0.0)
            }
        })
        .collect();

    let baseline = score.apply(&net.forward(&Tensor::zeros(in_h, in_w, 1))?);
    let raw_scores: Vec<Result<f64>> = exec::map_indexed(k_maps, |k| {
        let mut masked = input.clone();
        for (v, &m) in masked.data.iter_mut().zip(masks[k].data()) {
            *v *= m as f32;
        }
        Ok(score.apply(&net.forward(&masked)?) - baseline)
    });
    let mut scores = Vec::with_capacity(k_maps);
    for s in raw_scores {
        scores.push(s?);
    }

    // Softmax weights.
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    let alphas: Vec<f64> = exps.iter().map(|&e| e / z).collect();

    let mut heat = Grid::filled(in_h, in_w, 0.0);
    for (alpha, up) in alphas.iter().zip(&upsampled) {
        for (h, &u) in heat.data_mut().iter_mut().zip(up.data()) {
            *h += alpha * u;
        }
    }
    for v in heat.data_mut() {
        *v = v.max(0.0);
    }
    Ok(Heatmap {
        values: display_normalize(heat),
        source: HeatmapSource::Layer(layer),
        input_id: input_id.to_string(),
    })
}

/// Mean of the per-layer heatmaps over every convolutional layer,
/// renormalized for display.
pub fn average_score_cam(
    net: &Network<f32>,
    input: &Tensor<f32>,
    score: OutputScore,
    input_id: &str,
) -> Result<Heatmap> {
    let conv_layers = net.conv_layer_indices();
    if conv_layers.is_empty() {
        return Err(Error::InvalidArgument("network has no convolutional layers".into()));
    }
    let (in_h, in_w, _) = input.shape();
    let mut acc = Grid::filled(in_h, in_w, 0.0);
    for &layer in &conv_layers {
        let h = score_cam(net, input, layer, score, input_id)?;
        for (a, &v) in acc.data_mut().iter_mut().zip(h.values.data()) {
            *a += v;
        }
    }
    let n = conv_layers.len() as f64;
    for a in acc.data_mut() {
        *a /= n;
    }
    Ok(Heatmap {
        values: display_normalize(acc),
        source: HeatmapSource::Average,
        input_id: input_id.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};

    fn toy_input(seed: u64) -> Tensor<f32> {
        use rand::RngExt;
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut x = Tensor::zeros(10, 8, 1);
        for v in &mut x.data {
            *v = rng.random_range(0.0..1.0);
        }
        x
    }

    fn toy_net(filters: usize, seed: u64) -> Network<f32> {
        Network::from_specs(
            (10, 8, 1),
            &[
                LayerSpec::Conv2D {
                    filters,
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

    /// Independent step-by-step reimplementation used as the oracle.
    fn brute_force_score_cam(net: &Network<f32>, x: &Tensor<f32>, layer: usize) -> Grid<f64> {
        let (_, cache) = net.forward_cached(x).unwrap();
        let maps = &cache[layer];
        let mut ups = Vec::new();
        let mut cs = Vec::new();
        let zero_out = net.forward(&Tensor::zeros(x.h, x.w, x.c)).unwrap();
        let base: f64 = zero_out.data.iter().map(|&v| v as f64).sum::<f64>() / zero_out.len() as f64;
        for k in 0..maps.c {
            let up = bilinear_resize(&maps.channel_to_grid(k), x.h, x.w);
            let (lo, hi) = (up.min(), up.max());
            let mask = if hi > lo {
                up.map(|v| (v - lo) / (hi - lo))
            } else {
                Grid::filled(x.h, x.w, 0.0)
            };
            let mut masked = x.clone();
            for (v, &m) in masked.data.iter_mut().zip(mask.data()) {
                *v *= m as f32;
            }
            let out = net.forward(&masked).unwrap();
            let s: f64 = out.data.iter().map(|&v| v as f64).sum::<f64>() / out.len() as f64;
            cs.push(s - base);
            ups.push(up);
        }
        let m = cs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = cs.iter().map(|&c| (c - m).exp()).collect();
        let z: f64 = exps.iter().sum();
        let mut heat = Grid::filled(x.h, x.w, 0.0);
        for (e, up) in exps.iter().zip(&ups) {
            for (h, &u) in heat.data_mut().iter_mut().zip(up.data()) {
                *h += (e / z) * u;
            }
        }
        for v in heat.data_mut() {
            *v = v.max(0.0);
        }
        let max = heat.data().iter().copied().fold(0.0f64, f64::max);
        if max > 0.0 {
            for v in heat.data_mut() {
                *v /= max;
            }
        }
        heat
    }

    #[test]
    fn matches_brute_force_on_toy_net() {
        let net = toy_net(2, 3);
        let x = toy_input(5);
        let got = score_cam(&net, &x, 0, OutputScore::Mean, "t").unwrap();
        let want = brute_force_score_cam(&net, &x, 0);
        for (a, b) in got.values.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn heatmap_is_nonnegative_and_normalized() {
        let net = toy_net(4, 1);
        let h = score_cam(&net, &toy_input(2), 0, OutputScore::Mean, "t").unwrap();
        let max = h.values.data().iter().copied().fold(0.0f64, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        assert!(h.values.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn identical_feature_maps_reduce_to_normalized_relu_map() {
        // Make both conv filters identical: the convex softmax combination
        // of identical upsampled maps is the map itself.
        let mut net = toy_net(2, 3);
        let l = &mut net.layers[0];
        // kernel layout [kh][kw][cin][cout]: copy channel 0 into channel 1.
        for tap in 0..9 {
            let base = tap * 2;
            l.weights[base + 1] = l.weights[base];
        }
        l.bias[1] = l.bias[0];
        let x = toy_input(7);
        let h = score_cam(&net, &x, 0, OutputScore::Mean, "t").unwrap();
        let (_, cache) = net.forward_cached(&x).unwrap();
        let expected = display_normalize(bilinear_resize(&cache[0].channel_to_grid(0), x.h, x.w));
        for (a, b) in h.values.data().iter().zip(expected.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_input_gives_flat_heatmap() {
        // All masks are zero masks, every masked forward equals the baseline,
        // softmax weights are uniform, and the combination of constant
        // upsampled maps stays constant.
        let net = toy_net(3, 9);
        let x = Tensor::zeros(10, 8, 1);
        let h = score_cam(&net, &x, 0, OutputScore::Mean, "t").unwrap();
        let first = h.values.get(0, 0);
        assert!(h.values.data().iter().all(|&v| (v - first).abs() < 1e-12));
    }

    #[test]
    fn channel_permutation_leaves_heatmap_unchanged() {
        let net = toy_net(2, 11);
        let x = toy_input(13);
        let base = score_cam(&net, &x, 0, OutputScore::Mean, "t").unwrap();

        // Swap the two conv output channels and the matching dense columns,
        // leaving the network function identical.
        let mut permuted = net.clone();
        {
            let l = &mut permuted.layers[0];
            for tap in 0..9 {
                l.weights.swap(tap * 2, tap * 2 + 1);
            }
            l.bias.swap(0, 1);
        }
        {
            let l = &mut permuted.layers[2];
            let n_in = l.in_shape.2;
            for row in 0..l.out_shape.2 {
                for pos in 0..n_in / 2 {
                    l.weights.swap(row * n_in + pos * 2, row * n_in + pos * 2 + 1);
                }
            }
        }
        let out_a = net.forward(&x).unwrap();
        let out_b = permuted.forward(&x).unwrap();
        for (a, b) in out_a.data.iter().zip(&out_b.data) {
            assert!((a - b).abs() < 1e-6);
        }

        let swapped = score_cam(&permuted, &x, 0, OutputScore::Mean, "t").unwrap();
        for (a, b) in base.values.data().iter().zip(swapped.values.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn average_equals_single_layer_for_one_conv() {
        let net = toy_net(3, 4);
        let x = toy_input(6);
        let single = score_cam(&net, &x, 0, OutputScore::Mean, "t").unwrap();
        let avg = average_score_cam(&net, &x, OutputScore::Mean, "t").unwrap();
        assert_eq!(avg.source, HeatmapSource::Average);
        for (a, b) in avg.values.data().iter().zip(single.values.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_conv_layer_rejected() {
        let net = toy_net(2, 2);
        let err = score_cam(&net, &toy_input(1), 1, OutputScore::Mean, "t").unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn all_dead_feature_maps_give_finite_zero_average() {
        // Negative kernels and biases keep every ReLU feature map at zero:
        // the per-layer heatmaps are zero, and the average must stay zero
        // without dividing by a zero maximum.
        let mut net = toy_net(2, 5);
        {
            let l = &mut net.layers[0];
            for w in &mut l.weights {
                *w = -w.abs() - 0.1;
            }
            for b in &mut l.bias {
                *b = -1.0;
            }
        }
        let avg = average_score_cam(&net, &toy_input(3), OutputScore::Mean, "t").unwrap();
        assert!(avg.values.data().iter().all(|&v| v == 0.0 && v.is_finite()));
    }
}
