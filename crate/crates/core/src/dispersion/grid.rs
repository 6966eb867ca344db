use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Phase-velocity / frequency axes of a dispersion image.
///
/// Defaults: 76 frequencies from 5 to 80 Hz at 1 Hz, and 400 trial
/// velocities v_i = 50 + 3 i m/s (i = 0..399, topping out at 1247 m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DispersionGrid {
    pub freq_start_hz: f64,
    pub freq_step_hz: f64,
    pub freq_count: usize,
    pub vel_start_mps: f64,
    pub vel_step_mps: f64,
    pub vel_count: usize,
}

impl Default for DispersionGrid {
    fn default() -> Self {
        DispersionGrid {
            freq_start_hz: 5.0,
            freq_step_hz: 1.0,
            freq_count: 76,
            vel_start_mps: 50.0,
            vel_step_mps: 3.0,
            vel_count: 400,
        }
    }
}

impl DispersionGrid {
    pub fn validate(&self) -> Result<()> {
        if self.freq_step_hz <= 0.0 || self.vel_step_mps <= 0.0 {
            return Err(Error::InvalidConfig("axis steps must be positive".into()));
        }
        if self.freq_start_hz <= 0.0 || self.vel_start_mps <= 0.0 {
            return Err(Error::InvalidConfig("axis origins must be positive".into()));
        }
        if self.freq_count < 2 || self.vel_count < 2 {
            return Err(Error::InvalidConfig("need at least two axis samples".into()));
        }
        Ok(())
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        (0..self.freq_count)
            .map(|i| self.freq_start_hz + i as f64 * self.freq_step_hz)
            .collect()
    }

    pub fn velocities_mps(&self) -> Vec<f64> {
        (0..self.vel_count)
            .map(|i| self.vel_start_mps + i as f64 * self.vel_step_mps)
            .collect()
    }

    pub fn velocity_at(&self, index: usize) -> f64 {
        self.vel_start_mps + index as f64 * self.vel_step_mps
    }

    pub fn frequency_at(&self, index: usize) -> f64 {
        self.freq_start_hz + index as f64 * self.freq_step_hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_axes_shapes() {
        let g = DispersionGrid::default();
        g.validate().unwrap();
        let f = g.frequencies_hz();
        let v = g.velocities_mps();
        assert_eq!(f.len(), 76);
        assert_eq!(v.len(), 400);
        assert_eq!(f[0], 5.0);
        assert_eq!(f[75], 80.0);
        assert_eq!(v[0], 50.0);
        assert_eq!(v[399], 1247.0);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
}
