//! Versioned binary network checkpoints: magic, architecture tag, per-layer
//! spec and shape header, then little-endian f32 parameters in layer order.

use std::io::{Read, Write};
use std::path::Path;

use super::{Activation, ArchitectureId, Layer, LayerSpec, Network};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SWXN";
const VERSION: u32 = 1;
const CUSTOM_ARCH: u8 = 255;

fn spec_code(spec: &LayerSpec) -> (u8, u32, u32, u32, u8) {
    match *spec {
        LayerSpec::Conv2D { filters, kernel, activation } => (0, filters as u32, kernel.0 as u32, kernel.1 as u32, act_code(activation)),
        LayerSpec::MaxPool2D { pool } => (1, 0, pool.0 as u32, pool.1 as u32, 0),
        LayerSpec::TransposeConv2D { filters, kernel, activation } => (2, filters as u32, kernel.0 as u32, kernel.1 as u32, act_code(activation)),
        LayerSpec::UpSample2D { factor } => (3, 0, factor.0 as u32, factor.1 as u32, 0),
        LayerSpec::Flatten => (4, 0, 0, 0, 0),
        LayerSpec::Dense { units, activation } => (5, units as u32, 0, 0, act_code(activation)),
    }
}

fn decode_spec(kind: u8, a: u32, b: u32, c: u32, act: u8) -> Result<LayerSpec> {
    let activation = act_from(act)?;
    Ok(match kind {
        0 => LayerSpec::Conv2D {
            filters: a as usize,
            kernel: (b as usize, c as usize),
            activation,
        },
        1 => LayerSpec::MaxPool2D {
            pool: (b as usize, c as usize),
        },
        2 => LayerSpec::TransposeConv2D {
            filters: a as usize,
            kernel: (b as usize, c as usize),
            activation,
        },
        3 => LayerSpec::UpSample2D {
            factor: (b as usize, c as usize),
        },
        4 => LayerSpec::Flatten,
        5 => LayerSpec::Dense {
            units: a as usize,
            activation,
        },
        other => return Err(Error::Format(format!("unknown layer kind {other}"))),
    })
}

fn act_code(a: Activation) -> u8 {
    match a {
        Activation::ReLU => 1,
        Activation::Linear => 0,
    }
}

fn act_from(code: u8) -> Result<Activation> {
    match code {
        0 => Ok(Activation::Linear),
        1 => Ok(Activation::ReLU),
        other => Err(Error::Format(format!("unknown activation code {other}"))),
    }
}

pub fn save(net: &Network<f32>, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_to(net, std::io::BufWriter::new(file))
}

pub fn write_to(net: &Network<f32>, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[net.architecture.map(|a| a.tag()).unwrap_or(CUSTOM_ARCH)])?;
    w.write_all(&net.init_seed.to_le_bytes())?;
    for d in [net.input_shape.0, net.input_shape.1, net.input_shape.2] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&(net.layers.len() as u32).to_le_bytes())?;
    for layer in &net.layers {
        let (kind, a, b, c, act) = spec_code(&layer.spec);
        w.write_all(&[kind])?;
        w.write_all(&a.to_le_bytes())?;
        w.write_all(&b.to_le_bytes())?;
        w.write_all(&c.to_le_bytes())?;
        w.write_all(&[act])?;
        w.write_all(&(layer.weights.len() as u64).to_le_bytes())?;
        w.write_all(&(layer.bias.len() as u64).to_le_bytes())?;
    }
    for layer in &net.layers {
        for &v in layer.weights.iter().chain(&layer.bias) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Network<f32>> {
    let file = std::fs::File::open(path)?;
    read_from(std::io::BufReader::new(file))
}

pub fn read_from(mut r: impl Read) -> Result<Network<f32>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a network checkpoint".into()));
    }
    if read_u32(&mut r)? != VERSION {
        return Err(Error::Format("unsupported checkpoint version".into()));
    }
    let mut arch_tag = [0u8; 1];
    r.read_exact(&mut arch_tag)?;
    let architecture = if arch_tag[0] == CUSTOM_ARCH {
        None
    } else {
        Some(
            ArchitectureId::from_tag(arch_tag[0])
                .ok_or_else(|| Error::Format(format!("unknown architecture tag {}", arch_tag[0])))?,
        )
    };
    let init_seed = read_u64(&mut r)?;
    let input_shape = (
        read_u32(&mut r)? as usize,
        read_u32(&mut r)? as usize,
        read_u32(&mut r)? as usize,
    );
    let n_layers = read_u32(&mut r)? as usize;

    let mut headers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind)?;
        let a = read_u32(&mut r)?;
        let b = read_u32(&mut r)?;
        let c = read_u32(&mut r)?;
        let mut act = [0u8; 1];
        r.read_exact(&mut act)?;
        let n_w = read_u64(&mut r)? as usize;
        let n_b = read_u64(&mut r)? as usize;
        headers.push((decode_spec(kind[0], a, b, c, act[0])?, n_w, n_b));
    }

    let mut layers = Vec::with_capacity(n_layers);
    let mut shape = input_shape;
    for (spec, n_w, n_b) in headers {
        let out_shape = spec.output_shape(shape)?;
        let (expect_w, expect_b) = spec.parameter_counts(shape);
        if expect_w != n_w || expect_b != n_b {
            return Err(Error::Format(format!(
                "parameter count mismatch for {}: header {n_w}/{n_b}, shapes say {expect_w}/{expect_b}",
                spec.name()
            )));
        }
        let mut weights = vec![0f32; n_w];
        let mut bias = vec![0f32; n_b];
        let mut buf = [0u8; 4];
        for v in weights.iter_mut().chain(bias.iter_mut()) {
            r.read_exact(&mut buf)?;
            *v = f32::from_le_bytes(buf);
        }
        layers.push(Layer {
            spec,
            in_shape: shape,
            out_shape,
            weights,
            bias,
        });
        shape = out_shape;
    }
    Ok(Network {
        architecture,
        input_shape,
        layers,
        init_seed,
    })
}


fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
