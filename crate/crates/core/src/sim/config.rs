use serde::{Deserialize, Serialize};

use super::SourceSpec;
use crate::geo::SubsurfaceModel;
use crate::{Error, Result};

/// Field arithmetic width. Single precision matches common production
/// elastic codes and is twice as fast; double precision is available for
/// strict linearity studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialOrder {
    Second,
    Fourth,
}

impl SpatialOrder {
    /// Staggered difference coefficients (c1, c2).
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            SpatialOrder::Second => (1.0, 0.0),
            SpatialOrder::Fourth => (9.0 / 8.0, 1.0 / 24.0),
        }
    }

    /// Sum of |coefficients|, the operator factor in the Courant bound.
    pub fn courant_factor(self) -> f64 {
        let (c1, c2) = self.coefficients();
        c1 + c2
    }
}

/// Absorbing boundary on the sides and bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Exponential damping sponge (Cerjan-style taper).
    Damping { cells: usize },
}

impl Default for Boundary {
    fn default() -> Self {
        Boundary::Damping { cells: 30 }
    }
}

impl Boundary {
    pub fn cells(self) -> usize {
        match self {
            Boundary::Damping { cells } => cells,
        }
    }
}

/// Line of surface receivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReceiverArray {
    pub count: usize,
    pub spacing_m: f64,
    /// First receiver position; defaults to centring the array on the model.
    pub first_x_m: Option<f64>,
}

impl Default for ReceiverArray {
    fn default() -> Self {
        ReceiverArray {
            count: 48,
            spacing_m: 1.0,
            first_x_m: None,
        }
    }
}

impl ReceiverArray {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidConfig("need at least 2 receivers".into()));
        }
        if self.spacing_m <= 0.0 {
            return Err(Error::InvalidConfig("receiver spacing must be positive".into()));
        }
        Ok(())
    }

    pub fn span_m(&self) -> f64 {
        (self.count - 1) as f64 * self.spacing_m
    }

    pub fn positions(&self, model_width_m: f64) -> Vec<f64> {
        let first = self
            .first_x_m
            .unwrap_or((model_width_m - self.span_m()) / 2.0);
        (0..self.count).map(|i| first + i as f64 * self.spacing_m).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Grid spacing (m); the same spacing is used in x and z.
    pub dx_m: f64,
    /// Time step override; `None` derives it from the Courant bound.
    pub dt_s: Option<f64>,
    pub duration_s: f64,
    pub source: SourceSpec,
    pub receivers: ReceiverArray,
    pub boundary: Boundary,
    pub courant_safety: f64,
    /// Minimum points per minimum wavelength before the run is refused.
    pub min_ppw: f64,
    pub spatial_order: SpatialOrder,
    pub precision: Precision,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dx_m: 0.25,
            dt_s: None,
            duration_s: 2.0,
            source: SourceSpec::default(),
            receivers: ReceiverArray::default(),
            boundary: Boundary::default(),
            courant_safety: 0.9,
            min_ppw: 10.0,
            spatial_order: SpatialOrder::Fourth,
            precision: Precision::Single,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dx_m <= 0.0 {
            return Err(Error::InvalidConfig("dx must be positive".into()));
        }
        if self.duration_s <= 0.0 {
            return Err(Error::InvalidConfig("duration must be positive".into()));
        }
        if !(0.0 < self.courant_safety && self.courant_safety <= 1.0) {
            return Err(Error::InvalidConfig("courant_safety must be in (0, 1]".into()));
        }
        self.source.validate()?;
        self.receivers.validate()
    }
}

/// Time step and sampling diagnostics for a model/config pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub dt: f64,
    pub vp_max: f64,
    pub vs_min: f64,
    pub f_max: f64,
    pub ppw: f64,
}

/// Largest stable time step for the chosen stencil, and the
/// points-per-minimum-wavelength check against `min_ppw`.
///
/// The sampling criterion uses f_max = 2.5 f0, roughly the upper edge of a
/// Ricker wavelet's usable band.
pub fn stability_check(model: &SubsurfaceModel, config: &SimConfig) -> Result<Stability> {
    config.validate()?;
    let vp_max = model.max_vp();
    let vs_min = model.min_vs();
    if !(vp_max.is_finite() && vp_max > 0.0 && vs_min > 0.0) {
        return Err(Error::InvalidConfig("model velocities must be positive".into()));
    }
    let factor = config.spatial_order.courant_factor();
    let dt_max = config.courant_safety * config.dx_m / (std::f64::consts::SQRT_2 * vp_max * factor);
    let dt = match config.dt_s {
        Some(dt) => {
            if dt > dt_max {
                return Err(Error::InvalidConfig(format!(
                    "dt override {dt} exceeds the Courant limit {dt_max}"
                )));
            }
            dt
        }
        None => dt_max,
    };
    let f_max = 2.5 * config.source.center_frequency_hz;
    let ppw = vs_min / (f_max * config.dx_m);
    if ppw < config.min_ppw {
        return Err(Error::ResolutionTooCoarse {
            ppw,
            min_ppw: config.min_ppw,
            vs_min,
            f_max,
            required_dx: vs_min / (f_max * config.min_ppw),
        });
    }
    Ok(Stability {
        dt,
        vp_max,
        vs_min,
        f_max,
        ppw,
    })
}
