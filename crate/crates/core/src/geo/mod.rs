//! Stochastic soil-over-rock subsurface model generation.
//!
//! Each model is a set of co-registered Vs/Vp/density grids separated by an
//! undulating soil/rock interface, with a random water table that stiffens
//! the saturated soil's Poisson ratio (and hence Vp). Labels are the central
//! 24 m x 48 m window of the Vs grid, normalized to [0, 1].

mod interface;
mod label;
mod model;
mod params;

pub use interface::{sample_interface, InterfaceCategory, InterfaceCurve, SinusoidComponent};
pub use label::{label_window_start, pow2_norm_constant, trim_label, VsLabel, LABEL_COLS, LABEL_ROWS};
pub use model::{generate_model, vp_over_vs, SubsurfaceModel};
pub use params::{CategoryRanges, GeneratorParams};
