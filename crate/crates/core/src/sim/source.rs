use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Vertical point force applied at the free surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceSpec {
    pub center_frequency_hz: f64,
    /// Wavelet delay; defaults to 1.1 / f0 so the onset is effectively zero.
    pub delay_s: Option<f64>,
    /// Horizontal position; defaults to `offset_m` outside the first receiver.
    pub position_x_m: Option<f64>,
    /// Offset from the first receiver when `position_x_m` is not set.
    pub offset_m: f64,
    pub amplitude: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            center_frequency_hz: 30.0,
            delay_s: None,
            position_x_m: None,
            offset_m: 10.0,
            amplitude: 1.0,
        }
    }
}

impl SourceSpec {
    pub fn delay(&self) -> f64 {
        self.delay_s.unwrap_or(1.1 / self.center_frequency_hz)
    }

    pub fn validate(&self) -> Result<()> {
        if self.center_frequency_hz <= 0.0 {
            return Err(Error::InvalidConfig("source frequency must be positive".into()));
        }
        if self.delay() < 1.0 / self.center_frequency_hz {
            return Err(Error::InvalidConfig(format!(
                "source delay {} s is below one period 1/f0 = {} s",
                self.delay(),
                1.0 / self.center_frequency_hz
            )));
        }
        Ok(())
    }
}

/// Samples a Ricker wavelet:
/// w(t) = (1 - 2 pi^2 f0^2 (t-t0)^2) exp(-pi^2 f0^2 (t-t0)^2).
pub fn ricker(f0: f64, t0: f64, dt: f64, nt: usize) -> Vec<f64> {
    assert!(f0 > 0.0 && dt > 0.0);
    let pf = std::f64::consts::PI * f0;
    (0..nt)
        .map(|n| {
            let tau = n as f64 * dt - t0;
            let a = pf * pf * tau * tau;
            (1.0 - 2.0 * a) * (-a).exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_is_one_at_delay() {
        let f0 = 30.0;
        let t0 = 1.1 / f0;
        let dt = t0 / 1000.0; // t0 lands exactly on a sample
        let w = ricker(f0, t0, dt, 2000);
        assert_eq!(w[1000], 1.0);
        assert!(w.iter().all(|&v| v <= 1.0));
    }

    #[test]
    fn zero_crossings_at_analytic_roots() {
        // 1 - 2 pi^2 f0^2 tau^2 = 0 at tau = 1/(sqrt(2) pi f0).
        let f0 = 30.0;
        let tau0 = 1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI * f0);
        assert!((tau0 - 7.50264e-3).abs() < 1e-7);
        let t0 = 0.1;
        let w_at = |t: f64| {
            let a = (std::f64::consts::PI * f0 * (t - t0)).powi(2);
            (1.0 - 2.0 * a) * (-a).exp()
        };
        for t in [t0 - tau0, t0 + tau0] {
            assert!(w_at(t).abs() < 1e-12);
        }
        // Sign change across each root.
        assert!(w_at(t0 - tau0 * 1.01) * w_at(t0 - tau0 * 0.99) < 0.0);
        assert!(w_at(t0 + tau0 * 0.99) * w_at(t0 + tau0 * 1.01) < 0.0);
    }

    #[test]
    fn tails_decay_to_zero() {
        let f0 = 30.0;
        let t0 = 5.0 / f0;
        let dt = 1.0 / (f0 * 100.0);
        let nt = (2.0 * t0 / dt) as usize;
        let w = ricker(f0, t0, dt, nt);
        assert!(w[0].abs() < 1e-10);
        assert!(w[nt - 1].abs() < 1e-10);
    }

    #[test]
    fn short_delay_rejected() {
        let s = SourceSpec {
            center_frequency_hz: 30.0,
            delay_s: Some(0.01),
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
