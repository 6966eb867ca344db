//! 2D P-SV elastic wave propagation on a staggered velocity-stress grid.
//!
//! Virieux-type scheme, 2nd order in time and (by default) 4th order in
//! space, with a stress-imaging free surface on top, an exponential damping
//! sponge on the sides and bottom, a vertical point-force Ricker source on
//! the surface, and a line of surface receivers recording vertical particle
//! velocity every step.

mod config;
mod solver;
mod source;
mod wavefield;

pub use config::{stability_check, Boundary, Precision, ReceiverArray, SimConfig, SpatialOrder, Stability};
pub use solver::{simulate, simulate_sequential, simulate_with_observer, SnapshotSink};
pub use source::{ricker, SourceSpec};
pub use wavefield::Wavefield;
