use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::GeneratorParams;
use crate::rng::SeedRng;

/// Margin kept between the interface and the model top/bottom (m).
pub const INTERFACE_MARGIN_M: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterfaceCategory {
    Linear,
    Slight,
    High,
}

impl InterfaceCategory {
    pub fn tag(self) -> u8 {
        match self {
            InterfaceCategory::Linear => 0,
            InterfaceCategory::Slight => 1,
            InterfaceCategory::High => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(InterfaceCategory::Linear),
            1 => Some(InterfaceCategory::Slight),
            2 => Some(InterfaceCategory::High),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidComponent {
    pub amplitude_m: f64,
    /// Spatial frequency in cycles per metre.
    pub frequency_cpm: f64,
    pub phase_rad: f64,
}

/// Soil/rock interface: a tilted base depth plus three sinusoids, sampled at
/// every pixel column and clamped to stay inside the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCurve {
    pub category: InterfaceCategory,
    pub base_depth_m: f64,
    pub tilt: f64,
    pub components: [SinusoidComponent; 3],
    /// Interface depth at each column centre.
    pub samples: Vec<f64>,
}

impl InterfaceCurve {
    /// Unclamped interface depth at horizontal position `x` (m from the left edge).
    pub fn depth_at(&self, x: f64, width_m: f64) -> f64 {
        let mut d = self.base_depth_m + self.tilt * (x - width_m / 2.0);
        for c in &self.components {
            d += c.amplitude_m * (2.0 * std::f64::consts::PI * c.frequency_cpm * x + c.phase_rad).sin();
        }
        d
    }
}

/// Draws an interface curve: category by weight, base depth uniform in the
/// configured band, then three sinusoids from the category's budget.
pub fn sample_interface(rng: &mut SeedRng, params: &GeneratorParams) -> InterfaceCurve {
    let (w_lin, w_slight, _) = params.category_weights;
    let u: f64 = rng.random();
    let category = if u < w_lin {
        InterfaceCategory::Linear
    } else if u < w_lin + w_slight {
        InterfaceCategory::Slight
    } else {
        InterfaceCategory::High
    };
    let ranges = params.ranges_for(category);

    let base_depth_m = rng.random_range(params.interface_depth_range.0..params.interface_depth_range.1);
    let tilt = if ranges.tilt_max > 0.0 {
        rng.random_range(-ranges.tilt_max..ranges.tilt_max)
    } else {
        0.0
    };

    let amp_each = ranges.total_amplitude_m / 3.0;
    let (f_lo, f_hi) = ranges.frequency_range_cpm;
    let components = std::array::from_fn(|_| SinusoidComponent {
        amplitude_m: if amp_each > 0.0 { rng.random_range(0.0..amp_each) } else { 0.0 },
        frequency_cpm: if f_hi > f_lo { rng.random_range(f_lo..f_hi) } else { f_lo },
        phase_rad: rng.random_range(0.0..2.0 * std::f64::consts::PI),
    });

    let mut curve = InterfaceCurve {
        category,
        base_depth_m,
        tilt,
        components,
        samples: Vec::new(),
    };
    let (_, cols) = params.grid_shape();
    let lo = INTERFACE_MARGIN_M;
    let hi = params.depth_m - INTERFACE_MARGIN_M;
    curve.samples = (0..cols)
        .map(|j| {
            let x = (j as f64 + 0.5) * params.pixel_m;
            curve.depth_at(x, params.width_m).clamp(lo, hi)
        })
        .collect();
    curve
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn zero_amplitude_zero_tilt_is_flat() {
        let mut params = GeneratorParams::default();
        for cat in [&mut params.linear, &mut params.slight, &mut params.high] {
            cat.total_amplitude_m = 0.0;
            cat.tilt_max = 0.0;
        }
        let mut rng = rng_from_seed(1);
        let curve = sample_interface(&mut rng, &params);
        for &d in &curve.samples {
            assert_eq!(d, curve.base_depth_m);
        }
    }

    #[test]
    fn fixed_seed_reproduces_curve() {
        let params = GeneratorParams::default();
        let a = sample_interface(&mut rng_from_seed(42), &params);
        let b = sample_interface(&mut rng_from_seed(42), &params);
        assert_eq!(a, b);
    }

    #[test]
    fn samples_stay_in_clamp_band() {
        let params = GeneratorParams::default();
        let mut rng = rng_from_seed(7);
        for _ in 0..200 {
            let curve = sample_interface(&mut rng, &params);
            assert_eq!(curve.samples.len(), params.grid_shape().1);
            for &d in &curve.samples {
                assert!(d >= INTERFACE_MARGIN_M && d <= params.depth_m - INTERFACE_MARGIN_M);
            }
        }
    }

    #[test]
    fn category_proportions_track_weights() {
        // 10k draws; empirical shares within +/-2% of (10%, 60%, 30%).
        let params = GeneratorParams::default();
        let mut rng = rng_from_seed(11);
        let mut counts = [0usize; 3];
        let n = 10_000;
        for _ in 0..n {
            let c = sample_interface(&mut rng, &params);
            counts[c.category.tag() as usize] += 1;
        }
        let expected = [0.10, 0.60, 0.30];
        for (i, &count) in counts.iter().enumerate() {
            let share = count as f64 / n as f64;
            assert!(
                (share - expected[i]).abs() < 0.02,
                "category {i}: share {share:.4} vs weight {}",
                expected[i]
            );
        }
    }

    #[test]
    fn category_proportions_pass_chi_square() {
        // Chi-square with 2 dof at p = 0.01 -> critical value -2 ln(0.01) = 9.2103.
        let params = GeneratorParams::default();
        let mut rng = rng_from_seed(13);
        let mut counts = [0f64; 3];
        let n = 10_000f64;
        for _ in 0..10_000 {
            counts[sample_interface(&mut rng, &params).category.tag() as usize] += 1.0;
        }
        let expected = [0.10 * n, 0.60 * n, 0.30 * n];
        let chi2: f64 = counts
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e) * (o - e) / e)
            .sum();
        assert!(chi2 < 9.21034, "chi-square {chi2:.3} exceeds the p=0.01 critical value");
    }
}
