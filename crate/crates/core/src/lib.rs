//! End-to-end pipeline for imaging shallow soil-over-rock profiles from
//! surface-wave data: stochastic subsurface model generation, 2D P-SV
//! elastic finite-difference simulation, frequency-domain beamforming into
//! dispersion images, a small deterministic CNN engine with five fixed
//! architectures, predictive metrics (MAPE, MSSIM), and explainability
//! methods (Score-CAM, DeepLIFT-based SHAP attributions).
//!
//! Everything is a pure function of `(seed, config)`; two runs with the same
//! inputs produce bitwise-identical datasets, checkpoints, and reports.
//! Data-parallel inner loops use rayon when the `parallel` feature (default)
//! is enabled and fall back to sequential iteration otherwise.

pub mod config;
pub mod container;
pub mod dispersion;
pub mod error;
pub mod exec;
pub mod geo;
pub mod grid;
pub mod hash;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod render;
pub mod rng;
pub mod sim;
pub mod xai;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
