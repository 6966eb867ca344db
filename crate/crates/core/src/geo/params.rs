use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Undulation budget for one interface category.
///
/// The interface is the sum of three sinusoids; component amplitudes are
/// drawn so their total stays below `total_amplitude_m`. Only the near-linear
/// category carries a tilt, the undulating ones are level on average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryRanges {
    pub total_amplitude_m: f64,
    pub frequency_range_cpm: (f64, f64),
    pub tilt_max: f64,
}

/// Parameters for stochastic subsurface model generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    pub width_m: f64,
    pub depth_m: f64,
    pub pixel_m: f64,
    /// Interface base depth drawn uniformly from this range (m).
    pub interface_depth_range: (f64, f64),
    /// Draw probabilities for (linear, slightly undulating, highly undulating).
    pub category_weights: (f64, f64, f64),
    pub linear: CategoryRanges,
    pub slight: CategoryRanges,
    pub high: CategoryRanges,
    pub soil_vs_range: (f64, f64),
    pub rock_vs_range: (f64, f64),
    pub soil_poisson_range: (f64, f64),
    pub rock_poisson_range: (f64, f64),
    pub saturated_poisson_range: (f64, f64),
    pub soil_density_range: (f64, f64),
    pub rock_density_range: (f64, f64),
    /// Maximum magnitude of the smooth multiplicative Vs perturbation field.
    pub perturbation_max: f64,
    /// Cell size of the coarse noise lattice behind the perturbation field, in pixels.
    pub perturbation_cell_px: usize,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            width_m: 104.0,
            depth_m: 24.0,
            pixel_m: 1.0,
            interface_depth_range: (5.0, 12.0),
            category_weights: (0.10, 0.60, 0.30),
            linear: CategoryRanges {
                total_amplitude_m: 0.25,
                frequency_range_cpm: (0.0, 0.03),
                tilt_max: 0.03,
            },
            slight: CategoryRanges {
                total_amplitude_m: 1.5,
                frequency_range_cpm: (0.005, 0.03),
                tilt_max: 0.0,
            },
            high: CategoryRanges {
                total_amplitude_m: 3.0,
                frequency_range_cpm: (0.02, 0.08),
                tilt_max: 0.0,
            },
            soil_vs_range: (100.0, 400.0),
            rock_vs_range: (400.0, 1100.0),
            soil_poisson_range: (0.15, 0.35),
            rock_poisson_range: (0.20, 0.25),
            saturated_poisson_range: (0.47, 0.49),
            soil_density_range: (1650.0, 2000.0),
            rock_density_range: (2100.0, 2400.0),
            perturbation_max: 0.05,
            perturbation_cell_px: 8,
            seed: 0,
        }
    }
}

fn check_range(name: &str, r: (f64, f64)) -> Result<()> {
    if !(r.0 < r.1) {
        return Err(Error::InvalidConfig(format!(
            "{name}: minimum {} must be strictly less than maximum {}",
            r.0, r.1
        )));
    }
    Ok(())
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.category_weights;
        if (a + b + c - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "category weights must sum to 1, got {}",
                a + b + c
            )));
        }
        if a < 0.0 || b < 0.0 || c < 0.0 {
            return Err(Error::InvalidConfig("category weights must be non-negative".into()));
        }
        check_range("interface_depth_range", self.interface_depth_range)?;
        check_range("soil_vs_range", self.soil_vs_range)?;
        check_range("rock_vs_range", self.rock_vs_range)?;
        check_range("soil_poisson_range", self.soil_poisson_range)?;
        check_range("rock_poisson_range", self.rock_poisson_range)?;
        check_range("saturated_poisson_range", self.saturated_poisson_range)?;
        check_range("soil_density_range", self.soil_density_range)?;
        check_range("rock_density_range", self.rock_density_range)?;
        if self.soil_vs_range.0 <= 0.0 || self.rock_vs_range.0 <= 0.0 {
            return Err(Error::InvalidConfig("velocities must be positive".into()));
        }
        if self.rock_vs_range.0 < self.soil_vs_range.1 {
            return Err(Error::InvalidConfig(format!(
                "rock Vs range must start at or above the soil Vs maximum ({} < {})",
                self.rock_vs_range.0, self.soil_vs_range.1
            )));
        }
        if self.width_m <= 0.0 || self.depth_m <= 0.0 || self.pixel_m <= 0.0 {
            return Err(Error::InvalidConfig("model dimensions must be positive".into()));
        }
        if self.interface_depth_range.1 + self.max_total_amplitude() > self.depth_m {
            return Err(Error::InvalidConfig(
                "interface band plus undulation amplitude exceeds model depth".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.perturbation_max) {
            return Err(Error::InvalidConfig("perturbation_max must be in [0, 0.5)".into()));
        }
        if self.perturbation_cell_px == 0 {
            return Err(Error::InvalidConfig("perturbation_cell_px must be >= 1".into()));
        }
        for (name, cat) in [("linear", &self.linear), ("slight", &self.slight), ("high", &self.high)] {
            if cat.total_amplitude_m < 0.0 || cat.tilt_max < 0.0 {
                return Err(Error::InvalidConfig(format!("{name}: negative undulation budget")));
            }
            if cat.frequency_range_cpm.0 > cat.frequency_range_cpm.1 || cat.frequency_range_cpm.0 < 0.0 {
                return Err(Error::InvalidConfig(format!("{name}: bad frequency range")));
            }
        }
        Ok(())
    }

    /// Grid size in (rows, cols).
    pub fn grid_shape(&self) -> (usize, usize) {
        (
            (self.depth_m / self.pixel_m).round() as usize,
            (self.width_m / self.pixel_m).round() as usize,
        )
    }

    /// Largest total sinusoid amplitude over all categories.
    pub fn max_total_amplitude(&self) -> f64 {
        self.linear
            .total_amplitude_m
            .max(self.slight.total_amplitude_m)
            .max(self.high.total_amplitude_m)
    }

    pub fn ranges_for(&self, category: super::InterfaceCategory) -> &CategoryRanges {
        use super::InterfaceCategory::*;
        match category {
            Linear => &self.linear,
            Slight => &self.slight,
            High => &self.high,
        }
    }
}
