use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::{Real, Tensor};
use crate::rng::SeedRng;
use crate::{Error, Result};

pub type Shape = (usize, usize, usize);

pub fn shape_str(s: Shape) -> String {
    format!("{}x{}x{}", s.0, s.1, s.2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    Linear,
}

/// Layer descriptor. Convolutions use valid padding and stride 1; pooling is
/// non-overlapping with floor-divided output dimensions; transpose
/// convolution grows each axis by kernel - 1; upsampling repeats nearest
/// neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv2D {
        filters: usize,
        kernel: (usize, usize),
        activation: Activation,
    },
    MaxPool2D {
        pool: (usize, usize),
    },
    TransposeConv2D {
        filters: usize,
        kernel: (usize, usize),
        activation: Activation,
    },
    UpSample2D {
        factor: (usize, usize),
    },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
    },
}

impl LayerSpec {
    pub fn output_shape(&self, s: Shape) -> Result<Shape> {
        let (h, w, c) = s;
        match *self {
            LayerSpec::Conv2D { filters, kernel: (kh, kw), .. } => {
                if h < kh || w < kw {
                    return Err(Error::shape(format!("input >= {kh}x{kw}"), shape_str(s)));
                }
                Ok((h - kh + 1, w - kw + 1, filters))
            }
            LayerSpec::MaxPool2D { pool: (ph, pw) } => {
                if h < ph || w < pw {
                    return Err(Error::shape(format!("input >= {ph}x{pw}"), shape_str(s)));
                }
                Ok((h / ph, w / pw, c))
            }
            LayerSpec::TransposeConv2D { filters, kernel: (kh, kw), .. } => Ok((h + kh - 1, w + kw - 1, filters)),
            LayerSpec::UpSample2D { factor: (fh, fw) } => Ok((h * fh, w * fw, c)),
            LayerSpec::Flatten => Ok((1, 1, h * w * c)),
            LayerSpec::Dense { units, .. } => {
                if h != 1 || w != 1 {
                    return Err(Error::shape("flat input", shape_str(s)));
                }
                Ok((1, 1, units))
            }
        }
    }

    /// (weight count, bias count) given the input shape.
    pub fn parameter_counts(&self, s: Shape) -> (usize, usize) {
        let c_in = s.2;
        match *self {
            LayerSpec::Conv2D { filters, kernel: (kh, kw), .. }
            | LayerSpec::TransposeConv2D { filters, kernel: (kh, kw), .. } => (kh * kw * c_in * filters, filters),
            LayerSpec::Dense { units, .. } => (s.0 * s.1 * s.2 * units, units),
            _ => (0, 0),
        }
    }

    pub fn activation(&self) -> Activation {
        match *self {
            LayerSpec::Conv2D { activation, .. }
            | LayerSpec::TransposeConv2D { activation, .. }
            | LayerSpec::Dense { activation, .. } => activation,
            _ => Activation::Linear,
        }
    }

    pub fn is_convolutional(&self) -> bool {
        matches!(self, LayerSpec::Conv2D { .. } | LayerSpec::TransposeConv2D { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2D { .. } => "conv2d",
            LayerSpec::MaxPool2D { .. } => "maxpool2d",
            LayerSpec::TransposeConv2D { .. } => "transpose_conv2d",
            LayerSpec::UpSample2D { .. } => "upsample2d",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
        }
    }
}

/// A layer bound to its input shape, with parameters.
///
/// Kernel layout is [kh][kw][c_in][c_out] with c_out fastest; dense weights
/// are [out][in] row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub spec: LayerSpec,
    pub in_shape: Shape,
    pub out_shape: Shape,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Layer<T> {
    /// Builds the layer with Glorot-uniform weights and zero biases drawn
    /// from the given stream.
    pub fn new(spec: LayerSpec, in_shape: Shape, rng: &mut SeedRng) -> Result<Self> {
        let out_shape = spec.output_shape(in_shape)?;
        let (n_w, n_b) = spec.parameter_counts(in_shape);
        let (fan_in, fan_out) = match spec {
            LayerSpec::Conv2D { filters, kernel: (kh, kw), .. }
            | LayerSpec::TransposeConv2D { filters, kernel: (kh, kw), .. } => {
                (kh * kw * in_shape.2, kh * kw * filters)
            }
            LayerSpec::Dense { units, .. } => (in_shape.0 * in_shape.1 * in_shape.2, units),
            _ => (1, 1),
        };
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = (0..n_w)
            .map(|_| T::from_f64(rng.random_range(-limit..limit)))
            .collect();
        Ok(Layer {
            spec,
            in_shape,
            out_shape,
            weights,
            bias: vec![T::ZERO; n_b],
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn activate(&self, t: &mut Tensor<T>) {
        if self.spec.activation() == Activation::ReLU {
            for v in &mut t.data {
                *v = v.max(T::ZERO);
            }
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut out = self.forward_linear(x)?;
        self.activate(&mut out);
        Ok(out)
    }

    /// Forward pass without the activation: the pre-activation values.
    pub fn forward_linear(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.shape() != self.in_shape {
            return Err(Error::shape(shape_str(self.in_shape), shape_str(x.shape())));
        }
        let out = match self.spec {
            LayerSpec::Conv2D { .. } => self.conv_forward(x),
            LayerSpec::MaxPool2D { pool } => self.pool_forward(x, pool),
            LayerSpec::TransposeConv2D { .. } => self.tconv_forward(x),
            LayerSpec::UpSample2D { factor } => self.upsample_forward(x, factor),
            LayerSpec::Flatten => Tensor {
                h: 1,
                w: 1,
                c: x.len(),
                data: x.data.clone(),
            },
            LayerSpec::Dense { .. } => self.dense_forward(x),
        };
        Ok(out)
    }

    /// Applies the layer's activation in place.
    pub fn apply_activation(&self, t: &mut Tensor<T>) {
        self.activate(t);
    }

    /// dL/d(pre-activation) from dL/d(output): the ReLU gate keeps positions
    /// where the cached output is positive.
    pub fn delta(&self, output: &Tensor<T>, d_out: &Tensor<T>) -> Tensor<T> {
        match self.spec.activation() {
            Activation::Linear => d_out.clone(),
            Activation::ReLU => {
                let mut d = d_out.clone();
                for (dv, &ov) in d.data.iter_mut().zip(&output.data) {
                    if ov <= T::ZERO {
                        *dv = T::ZERO;
                    }
                }
                d
            }
        }
    }

    /// dL/d(input) for one sample. `input` is the cached layer input.
    pub fn backward_input(&self, input: &Tensor<T>, delta: &Tensor<T>) -> Tensor<T> {
        match self.spec {
            LayerSpec::Conv2D { .. } => self.conv_backward_input(delta),
            LayerSpec::MaxPool2D { pool } => self.pool_backward(input, delta, pool),
            LayerSpec::TransposeConv2D { .. } => self.tconv_backward_input(delta),
            LayerSpec::UpSample2D { factor } => self.upsample_backward(delta, factor),
            LayerSpec::Flatten => Tensor {
                h: self.in_shape.0,
                w: self.in_shape.1,
                c: self.in_shape.2,
                data: delta.data.clone(),
            },
            LayerSpec::Dense { .. } => self.dense_backward_input(delta),
        }
    }

    /// Accumulates parameter gradients over a batch in sample order.
    /// Parallelism is over disjoint gradient regions, so the result does not
    /// depend on thread count.
    pub fn accumulate_grads(&self, inputs: &[&Tensor<T>], deltas: &[&Tensor<T>], gw: &mut [T], gb: &mut [T]) {
        match self.spec {
            LayerSpec::Conv2D { kernel, .. } => self.conv_grads(inputs, deltas, kernel, false, gw, gb),
            LayerSpec::TransposeConv2D { kernel, .. } => self.conv_grads(inputs, deltas, kernel, true, gw, gb),
            LayerSpec::Dense { .. } => self.dense_grads(inputs, deltas, gw, gb),
            _ => {}
        }
    }

    // --- Conv2D ---------------------------------------------------------

    fn conv_forward(&self, x: &Tensor<T>) -> Tensor<T> {
        let (ih, iw, ic) = self.in_shape;
        let (oh, ow, oc) = self.out_shape;
        let (kh, kw) = match self.spec {
            LayerSpec::Conv2D { kernel, .. } => kernel,
            _ => unreachable!(),
        };
        let mut out = Tensor::zeros(oh, ow, oc);
        let mut acc = vec![T::ZERO; oc];
        for oy in 0..oh {
            for ox in 0..ow {
                acc.copy_from_slice(&self.bias);
                for ky in 0..kh {
                    let iy = oy + ky;
                    for kx in 0..kw {
                        let ix = ox + kx;
                        let x_off = (iy * iw + ix) * ic;
                        let k_off = (ky * kw + kx) * ic * oc;
                        for ci in 0..ic {
                            let xv = x.data[x_off + ci];
                            let wrow = &self.weights[k_off + ci * oc..k_off + (ci + 1) * oc];
                            for (a, &wv) in acc.iter_mut().zip(wrow) {
                                *a += xv * wv;
                            }
                        }
                    }
                }
                let _ = ih;
                let o_off = (oy * ow + ox) * oc;
                out.data[o_off..o_off + oc].copy_from_slice(&acc);
            }
        }
        out
    }

    fn conv_backward_input(&self, delta: &Tensor<T>) -> Tensor<T> {
        let (ih, iw, ic) = self.in_shape;
        let (oh, ow, oc) = self.out_shape;
        let (kh, kw) = match self.spec {
            LayerSpec::Conv2D { kernel, .. } => kernel,
            _ => unreachable!(),
        };
        let mut d_in = Tensor::zeros(ih, iw, ic);
        for oy in 0..oh {
            for ox in 0..ow {
                let d_off = (oy * ow + ox) * oc;
                let dvec = &delta.data[d_off..d_off + oc];
                for ky in 0..kh {
                    for kx in 0..kw {
                        let k_off = (ky * kw + kx) * ic * oc;
                        let in_off = ((oy + ky) * iw + ox + kx) * ic;
                        for ci in 0..ic {
                            let wrow = &self.weights[k_off + ci * oc..k_off + (ci + 1) * oc];
                            let mut s = T::ZERO;
                            for (&dv, &wv) in dvec.iter().zip(wrow) {
                                s += dv * wv;
                            }
                            d_in.data[in_off + ci] += s;
                        }
                    }
                }
            }
        }
        d_in
    }

    /// Shared gradient kernel for conv (gather) and transpose conv (scatter).
    /// For conv: gw[k] += x[oy+ky, ox+kx, ci] * delta[oy, ox, co].
    /// For tconv: gw[k] += x[iy, ix, ci] * delta[iy+ky, ix+kx, co].
    fn conv_grads(
        &self,
        inputs: &[&Tensor<T>],
        deltas: &[&Tensor<T>],
        (_kh, kw): (usize, usize),
        transpose: bool,
        gw: &mut [T],
        gb: &mut [T],
    ) {
        let (_, iw, ic) = self.in_shape;
        let (oh, ow, oc) = self.out_shape;
        // One task per kernel tap; each owns a contiguous [ic * oc] slice.
        crate::exec::for_each_chunk_mut(gw, ic * oc, |start, chunk| {
            let tap = start / (ic * oc);
            let (ky, kx) = (tap / kw, tap % kw);
            for (x, d) in inputs.iter().zip(deltas) {
                let (sh, sw) = if transpose {
                    (self.in_shape.0, self.in_shape.1)
                } else {
                    (oh, ow)
                };
                for sy in 0..sh {
                    for sx in 0..sw {
                        let (x_off, d_off) = if transpose {
                            ((sy * iw + sx) * ic, ((sy + ky) * ow + sx + kx) * oc)
                        } else {
                            (((sy + ky) * iw + sx + kx) * ic, (sy * ow + sx) * oc)
                        };
                        let dvec = &d.data[d_off..d_off + oc];
                        for ci in 0..ic {
                            let xv = x.data[x_off + ci];
                            let grow = &mut chunk[ci * oc..(ci + 1) * oc];
                            for (g, &dv) in grow.iter_mut().zip(dvec) {
                                *g += xv * dv;
                            }
                        }
                    }
                }
            }
        });
        for d in deltas {
            for oy in 0..oh {
                for ox in 0..ow {
                    let off = (oy * ow + ox) * oc;
                    for (b, &dv) in gb.iter_mut().zip(&d.data[off..off + oc]) {
                        *b += dv;
                    }
                }
            }
        }
    }

    // --- MaxPool2D ------------------------------------------------------

    fn pool_forward(&self, x: &Tensor<T>, (ph, pw): (usize, usize)) -> Tensor<T> {
        let (_, iw, c) = self.in_shape;
        let (oh, ow, _) = self.out_shape;
        let mut out = Tensor::zeros(oh, ow, c);
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best = x.data[(oy * ph * iw + ox * pw) * c + ch];
                    for dy in 0..ph {
                        for dx in 0..pw {
                            let v = x.data[((oy * ph + dy) * iw + ox * pw + dx) * c + ch];
                            if v > best {
                                best = v;
                            }
                        }
                    }
                    *out.at_mut(oy, ox, ch) = best;
                }
            }
        }
        out
    }

    /// Routes each pooled gradient to the first-occurring argmax of its
    /// window, recomputed from the cached input.
    fn pool_backward(&self, x: &Tensor<T>, delta: &Tensor<T>, (ph, pw): (usize, usize)) -> Tensor<T> {
        let (ih, iw, c) = self.in_shape;
        let (oh, ow, _) = self.out_shape;
        let mut d_in = Tensor::zeros(ih, iw, c);
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best_idx = (oy * ph * iw + ox * pw) * c + ch;
                    let mut best = x.data[best_idx];
                    for dy in 0..ph {
                        for dx in 0..pw {
                            let idx = ((oy * ph + dy) * iw + ox * pw + dx) * c + ch;
                            if x.data[idx] > best {
                                best = x.data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    d_in.data[best_idx] += delta.at(oy, ox, ch);
                }
            }
        }
        d_in
    }

    // --- TransposeConv2D --------------------------------------------------

    fn tconv_forward(&self, x: &Tensor<T>) -> Tensor<T> {
        let (ih, iw, ic) = self.in_shape;
        let (_, ow, oc) = self.out_shape;
        let (kh, kw) = match self.spec {
            LayerSpec::TransposeConv2D { kernel, .. } => kernel,
            _ => unreachable!(),
        };
        let mut out = Tensor::from_shape(self.out_shape);
        for px in out.data.chunks_mut(oc) {
            px.copy_from_slice(&self.bias);
        }
        for iy in 0..ih {
            for ix in 0..iw {
                let x_off = (iy * iw + ix) * ic;
                for ky in 0..kh {
                    for kx in 0..kw {
                        let o_off = ((iy + ky) * ow + ix + kx) * oc;
                        let k_off = (ky * kw + kx) * ic * oc;
                        for ci in 0..ic {
                            let xv = x.data[x_off + ci];
                            let wrow = &self.weights[k_off + ci * oc..k_off + (ci + 1) * oc];
                            let orow = &mut out.data[o_off..o_off + oc];
                            for (o, &wv) in orow.iter_mut().zip(wrow) {
                                *o += xv * wv;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn tconv_backward_input(&self, delta: &Tensor<T>) -> Tensor<T> {
        let (ih, iw, ic) = self.in_shape;
        let (_, ow, oc) = self.out_shape;
        let (kh, kw) = match self.spec {
            LayerSpec::TransposeConv2D { kernel, .. } => kernel,
            _ => unreachable!(),
        };
        let mut d_in = Tensor::zeros(ih, iw, ic);
        for iy in 0..ih {
            for ix in 0..iw {
                let in_off = (iy * iw + ix) * ic;
                for ky in 0..kh {
                    for kx in 0..kw {
                        let d_off = ((iy + ky) * ow + ix + kx) * oc;
                        let dvec = &delta.data[d_off..d_off + oc];
                        let k_off = (ky * kw + kx) * ic * oc;
                        for ci in 0..ic {
                            let wrow = &self.weights[k_off + ci * oc..k_off + (ci + 1) * oc];
                            let mut s = T::ZERO;
                            for (&dv, &wv) in dvec.iter().zip(wrow) {
                                s += dv * wv;
                            }
                            d_in.data[in_off + ci] += s;
                        }
                    }
                }
            }
        }
        d_in
    }

    // --- UpSample2D -------------------------------------------------------

    fn upsample_forward(&self, x: &Tensor<T>, (fh, fw): (usize, usize)) -> Tensor<T> {
        let (oh, ow, c) = self.out_shape;
        let mut out = Tensor::zeros(oh, ow, c);
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    *out.at_mut(oy, ox, ch) = x.at(oy / fh, ox / fw, ch);
                }
            }
        }
        out
    }

    fn upsample_backward(&self, delta: &Tensor<T>, (fh, fw): (usize, usize)) -> Tensor<T> {
        let (ih, iw, c) = self.in_shape;
        let mut d_in = Tensor::zeros(ih, iw, c);
        let (oh, ow, _) = self.out_shape;
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    *d_in.at_mut(oy / fh, ox / fw, ch) += delta.at(oy, ox, ch);
                }
            }
        }
        d_in
    }

    // --- Dense ------------------------------------------------------------

    fn dense_forward(&self, x: &Tensor<T>) -> Tensor<T> {
        let n_in = x.len();
        let n_out = self.out_shape.2;
        let mut out = Tensor::zeros(1, 1, n_out);
        for j in 0..n_out {
            let wrow = &self.weights[j * n_in..(j + 1) * n_in];
            let mut s = self.bias[j];
            for (&wv, &xv) in wrow.iter().zip(&x.data) {
                s += wv * xv;
            }
            out.data[j] = s;
        }
        out
    }

    fn dense_backward_input(&self, delta: &Tensor<T>) -> Tensor<T> {
        let (h, w, c) = self.in_shape;
        let n_in = h * w * c;
        let n_out = self.out_shape.2;
        let mut d_in = Tensor::zeros(h, w, c);
        for j in 0..n_out {
            let dv = delta.data[j];
            if dv == T::ZERO {
                continue;
            }
            let wrow = &self.weights[j * n_in..(j + 1) * n_in];
            for (di, &wv) in d_in.data.iter_mut().zip(wrow) {
                *di += dv * wv;
            }
        }
        d_in
    }

    fn dense_grads(&self, inputs: &[&Tensor<T>], deltas: &[&Tensor<T>], gw: &mut [T], gb: &mut [T]) {
        let n_in = self.in_shape.0 * self.in_shape.1 * self.in_shape.2;
        // One task per output row; samples accumulate in order inside.
        crate::exec::for_each_chunk_mut(gw, n_in, |start, grow| {
            let j = start / n_in;
            for (x, d) in inputs.iter().zip(deltas) {
                let dv = d.data[j];
                if dv == T::ZERO {
                    continue;
                }
                for (g, &xv) in grow.iter_mut().zip(&x.data) {
                    *g += dv * xv;
                }
            }
        });
        for d in deltas {
            for (b, &dv) in gb.iter_mut().zip(&d.data) {
                *b += dv;
            }
        }
    }
}
