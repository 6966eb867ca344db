//! Dispersion imaging: frequency-domain beamforming over the receiver line,
//! normalized per frequency column.

mod fdbf;
mod grid;

pub use fdbf::{dispersion_image, fdbf, fdbf_sequential, normalize_per_frequency, DispersionImage};
pub use grid::DispersionGrid;
