use serde::{Deserialize, Serialize};

use super::{Activation, LayerSpec, Shape};
use crate::{Error, Result};

/// Network input: one dispersion image, 400 velocities x 76 frequencies.
pub const INPUT_SHAPE: Shape = (400, 76, 1);
/// Output image: 24 m deep x 48 m wide Vs window.
pub const OUTPUT_ROWS: usize = 24;
pub const OUTPUT_COLS: usize = 48;
pub const OUTPUT_LEN: usize = OUTPUT_ROWS * OUTPUT_COLS;

/// The five fixed architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArchitectureId {
    /// Encoder + transpose-convolution/upsampling decoder ending in a 1x1 conv.
    TransposeConv,
    /// Five-conv encoder with square kernels and a dense decoder.
    DenseDeep3x3,
    /// Same depth, 3x1 kernels in the first three convolutions.
    DenseDeep3x1,
    /// Two 3x3 convolutions around one 3x3 pool, dense decoder.
    Shallow3x3,
    /// Two 3x1 convolutions around one 3x3 pool, dense decoder.
    Shallow3x1,
}

impl ArchitectureId {
    pub const ALL: [ArchitectureId; 5] = [
        ArchitectureId::TransposeConv,
        ArchitectureId::DenseDeep3x3,
        ArchitectureId::DenseDeep3x1,
        ArchitectureId::Shallow3x3,
        ArchitectureId::Shallow3x1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArchitectureId::TransposeConv => "transpose-conv",
            ArchitectureId::DenseDeep3x3 => "deep-3x3",
            ArchitectureId::DenseDeep3x1 => "deep-3x1",
            ArchitectureId::Shallow3x3 => "shallow-3x3",
            ArchitectureId::Shallow3x1 => "shallow-3x1",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown architecture '{name}'; expected one of {}",
                    Self::ALL.map(|a| a.name()).join(", ")
                ))
            })
    }

    pub fn tag(self) -> u8 {
        match self {
            ArchitectureId::TransposeConv => 0,
            ArchitectureId::DenseDeep3x3 => 1,
            ArchitectureId::DenseDeep3x1 => 2,
            ArchitectureId::Shallow3x3 => 3,
            ArchitectureId::Shallow3x1 => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.tag() == tag)
    }

    /// Layer stack for this architecture. Hidden convolutions use ReLU; the
    /// output layer (dense, or the final 1x1 convolution) is linear.
    pub fn layers(self) -> Vec<LayerSpec> {
        use Activation::{Linear, ReLU};
        let conv = |filters, kernel| LayerSpec::Conv2D {
            filters,
            kernel,
            activation: ReLU,
        };
        let tconv = |filters, kernel| LayerSpec::TransposeConv2D {
            filters,
            kernel,
            activation: ReLU,
        };
        let pool = |pool| LayerSpec::MaxPool2D { pool };
        let up = |factor| LayerSpec::UpSample2D { factor };
        let dense_out = LayerSpec::Dense {
            units: OUTPUT_LEN,
            activation: Linear,
        };

        match self {
            ArchitectureId::TransposeConv => vec![
                conv(32, (3, 3)),
                pool((3, 1)),
                conv(32, (3, 3)),
                pool((3, 1)),
                conv(64, (3, 3)),
                pool((1, 3)),
                conv(128, (3, 3)),
                pool((3, 3)),
                conv(128, (3, 3)),
                tconv(128, (1, 1)),
                up((1, 2)),
                tconv(64, (1, 2)),
                up((1, 2)),
                tconv(32, (1, 2)),
                up((1, 1)),
                tconv(32, (2, 2)),
                up((2, 2)),
                LayerSpec::Conv2D {
                    filters: 1,
                    kernel: (1, 1),
                    activation: Linear,
                },
            ],
            ArchitectureId::DenseDeep3x3 => vec![
                conv(32, (3, 3)),
                pool((3, 1)),
                conv(32, (3, 3)),
                pool((3, 1)),
                conv(64, (3, 3)),
                pool((1, 3)),
                conv(128, (3, 3)),
                pool((3, 3)),
                conv(128, (3, 3)),
                LayerSpec::Flatten,
                dense_out,
            ],
            ArchitectureId::DenseDeep3x1 => vec![
                conv(32, (3, 1)),
                pool((3, 1)),
                conv(32, (3, 1)),
                pool((3, 1)),
                conv(64, (3, 1)),
                pool((1, 3)),
                conv(128, (3, 3)),
                pool((3, 3)),
                conv(128, (3, 3)),
                LayerSpec::Flatten,
                dense_out,
            ],
            ArchitectureId::Shallow3x3 => vec![
                conv(32, (3, 3)),
                pool((3, 3)),
                conv(32, (3, 3)),
                LayerSpec::Flatten,
                dense_out,
            ],
            ArchitectureId::Shallow3x1 => vec![
                conv(32, (3, 1)),
                pool((3, 3)),
                conv(32, (3, 1)),
                LayerSpec::Flatten,
                dense_out,
            ],
        }
    }
}

/// Output shapes of a layer stack applied to `input`, without allocating
/// any parameters.
pub fn stack_shapes(input: Shape, specs: &[LayerSpec]) -> Result<Vec<Shape>> {
    let mut shapes = Vec::with_capacity(specs.len());
    let mut s = input;
    for spec in specs {
        s = spec.output_shape(s)?;
        shapes.push(s);
    }
    Ok(shapes)
}

/// Trainable parameter count of a layer stack, from shape arithmetic alone.
pub fn stack_parameter_count(input: Shape, specs: &[LayerSpec]) -> Result<usize> {
    let mut total = 0;
    let mut s = input;
    for spec in specs {
        let (w, b) = spec.parameter_counts(s);
        total += w + b;
        s = spec.output_shape(s)?;
    }
    Ok(total)
}
