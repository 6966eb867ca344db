//! Deterministic CNN engine: the layer zoo used by the five fixed
//! architectures, forward/backward with an activation cache, MAE loss,
//! Adam, finite-difference gradient checks, and binary checkpoints.

mod arch;
pub mod checkpoint;
mod gradcheck;
mod layer;
mod network;
mod scalar;
mod tensor;
mod train;

pub use arch::{stack_parameter_count, stack_shapes, ArchitectureId, INPUT_SHAPE, OUTPUT_COLS, OUTPUT_LEN, OUTPUT_ROWS};
pub use gradcheck::{analytic_grads, gradient_check};
pub use layer::{shape_str, Activation, Layer, LayerSpec, Shape};
pub use network::{ActivationCache, NetGrads, Network};
pub use scalar::Real;
pub use tensor::Tensor;
pub use train::{evaluate_mae, train, EpochStats, TrainConfig, TrainReport};
