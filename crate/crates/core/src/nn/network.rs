use super::{ArchitectureId, Layer, LayerSpec, Real, Shape, Tensor, INPUT_SHAPE, OUTPUT_COLS, OUTPUT_ROWS};
use crate::grid::Grid;
use crate::rng::rng_from_seed;
use crate::{exec, Error, Result};

/// Post-activation output of every layer for one forward pass, in layer order.
pub type ActivationCache<T> = Vec<Tensor<T>>;

/// An ordered layer stack with parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub architecture: Option<ArchitectureId>,
    pub input_shape: Shape,
    pub layers: Vec<Layer<T>>,
    /// Seed the parameters were initialized from.
    pub init_seed: u64,
}

/// Per-layer (weight, bias) gradient buffers.
pub struct NetGrads<T> {
    pub layers: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Real> NetGrads<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        NetGrads {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![T::ZERO; l.weights.len()], vec![T::ZERO; l.bias.len()]))
                .collect(),
        }
    }

    pub fn reset(&mut self) {
        for (w, b) in &mut self.layers {
            w.iter_mut().for_each(|v| *v = T::ZERO);
            b.iter_mut().for_each(|v| *v = T::ZERO);
        }
    }
}

impl<T: Real> Network<T> {
    /// Instantiates one of the five fixed architectures with seeded
    /// Glorot-uniform parameters.
    pub fn build(arch: ArchitectureId, seed: u64) -> Result<Self> {
        let mut net = Self::from_specs(INPUT_SHAPE, &arch.layers(), seed)?;
        net.architecture = Some(arch);
        Ok(net)
    }

    /// Builds a custom stack; used by tests and the explainability toys.
    pub fn from_specs(input_shape: Shape, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut layers = Vec::with_capacity(specs.len());
        let mut shape = input_shape;
        for spec in specs {
            let layer = Layer::new(*spec, shape, &mut rng)?;
            shape = layer.out_shape;
            layers.push(layer);
        }
        Ok(Network {
            architecture: None,
            input_shape,
            layers,
            init_seed: seed,
        })
    }

    pub fn output_shape(&self) -> Shape {
        self.layers.last().map(|l| l.out_shape).unwrap_or(self.input_shape)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.parameter_count()).sum()
    }

    /// Indices of layers Score-CAM can explain (feature-map producers).
    pub fn conv_layer_indices(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.spec.is_convolutional())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    /// Forward pass that also returns every layer's post-activation output.
    pub fn forward_cached(&self, x: &Tensor<T>) -> Result<(Tensor<T>, ActivationCache<T>)> {
        let mut cache = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
            cache.push(cur.clone());
        }
        Ok((cur, cache))
    }

    /// Canonical 24x48 prediction image from a network output tensor.
    pub fn output_to_image(out: &Tensor<T>) -> Grid<f64> {
        let flat = out.reshape(OUTPUT_ROWS, OUTPUT_COLS);
        flat.channel_to_grid(0)
    }

    /// Forward passes for a batch of samples, keeping all activations.
    /// Samples are independent, so the parallel map is deterministic.
    pub fn forward_batch(&self, xs: &[Tensor<T>]) -> Result<Vec<ActivationCache<T>>> {
        let results = exec::map_slice(xs, |x| self.forward_cached(x).map(|(_, cache)| cache));
        results.into_iter().collect()
    }

    /// Backward pass over a batch. `acts[s]` must come from `forward_batch`;
    /// `d_outs[s]` is dL/d(output) per sample. Gradients accumulate into
    /// `grads` in sample order regardless of thread count.
    pub fn backward_batch(
        &self,
        inputs: &[Tensor<T>],
        acts: &[ActivationCache<T>],
        d_outs: Vec<Tensor<T>>,
        grads: &mut NetGrads<T>,
    ) {
        let mut d_current = d_outs;
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let layer_inputs: Vec<&Tensor<T>> = (0..inputs.len())
                .map(|s| if k == 0 { &inputs[s] } else { &acts[s][k - 1] })
                .collect();
            // Activation gate, then per-sample input gradients in parallel.
            let deltas: Vec<Tensor<T>> = exec::map_indexed(inputs.len(), |s| {
                layer.delta(&acts[s][k], &d_current[s])
            });
            let delta_refs: Vec<&Tensor<T>> = deltas.iter().collect();
            let (gw, gb) = &mut grads.layers[k];
            layer.accumulate_grads(&layer_inputs, &delta_refs, gw, gb);
            if k > 0 {
                d_current = exec::map_indexed(inputs.len(), |s| layer.backward_input(layer_inputs[s], &deltas[s]));
            }
        }
    }

    /// Casts parameters to another precision.
    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            architecture: self.architecture,
            input_shape: self.input_shape,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    spec: l.spec,
                    in_shape: l.in_shape,
                    out_shape: l.out_shape,
                    weights: l.weights.iter().map(|&w| U::from_f64(w.to_f64())).collect(),
                    bias: l.bias.iter().map(|&b| U::from_f64(b.to_f64())).collect(),
                })
                .collect(),
            init_seed: self.init_seed,
        }
    }

    pub fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.shape() != self.input_shape {
            return Err(Error::shape(
                super::layer::shape_str(self.input_shape),
                super::layer::shape_str(x.shape()),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_purity_and_cache_shapes() {
        let net: Network<f32> = Network::build(ArchitectureId::Shallow3x1, 7).unwrap();
        let mut x = Tensor::zeros(400, 76, 1);
        for (i, v) in x.data.iter_mut().enumerate() {
            *v = ((i % 97) as f32) / 97.0;
        }
        let (y1, cache1) = net.forward_cached(&x).unwrap();
        let (y2, cache2) = net.forward_cached(&x).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(cache1, cache2);
        assert_eq!(cache1.len(), net.layers.len());
        for (t, l) in cache1.iter().zip(&net.layers) {
            assert_eq!(t.shape(), l.out_shape);
        }
    }

    #[test]
    fn same_seed_same_parameters() {
        let a: Network<f32> = Network::build(ArchitectureId::Shallow3x3, 3).unwrap();
        let b: Network<f32> = Network::build(ArchitectureId::Shallow3x3, 3).unwrap();
        assert_eq!(a, b);
        let c: Network<f32> = Network::build(ArchitectureId::Shallow3x3, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn conv_layer_indices_for_shallow_3x1() {
        let net: Network<f32> = Network::build(ArchitectureId::Shallow3x1, 1).unwrap();
        assert_eq!(net.conv_layer_indices(), vec![0, 2]);
    }

    #[test]
    fn output_image_shape() {
        let out = Tensor::<f32> {
            h: 1,
            w: 1,
            c: 1152,
            data: (0..1152).map(|i| i as f32).collect(),
        };
        let img = Network::<f32>::output_to_image(&out);
        assert_eq!(img.rows(), 24);
        assert_eq!(img.cols(), 48);
        assert_eq!(img.get(1, 0), 48.0);
    }
}
