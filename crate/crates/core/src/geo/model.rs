use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::{sample_interface, GeneratorParams, InterfaceCurve};
use crate::grid::Grid;
use crate::rng::SeedRng;

/// Vp/Vs ratio for a Poisson ratio `nu`: sqrt(2(1 - nu) / (1 - 2 nu)).
pub fn vp_over_vs(nu: f64) -> f64 {
    (2.0 * (1.0 - nu) / (1.0 - 2.0 * nu)).sqrt()
}

/// Co-registered property grids for one subsurface realization.
/// Rows index depth (row 0 at the surface), columns index distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsurfaceModel {
    pub vs: Grid<f64>,
    pub vp: Grid<f64>,
    pub density: Grid<f64>,
    pub interface: InterfaceCurve,
    pub water_table_depth_m: f64,
    pub pixel_m: f64,
    pub seed: u64,
}

impl SubsurfaceModel {
    pub fn width_m(&self) -> f64 {
        self.vs.cols() as f64 * self.pixel_m
    }

    pub fn depth_m(&self) -> f64 {
        self.vs.rows() as f64 * self.pixel_m
    }

    pub fn max_vp(&self) -> f64 {
        self.vp.max()
    }

    pub fn min_vs(&self) -> f64 {
        self.vs.min()
    }

    /// Uniform half-space helper used by calibration tests and the CLI debug path.
    pub fn homogeneous(vs: f64, nu: f64, density: f64, width_m: f64, depth_m: f64, pixel_m: f64) -> Self {
        let rows = (depth_m / pixel_m).round() as usize;
        let cols = (width_m / pixel_m).round() as usize;
        let vp = vs * vp_over_vs(nu);
        SubsurfaceModel {
            vs: Grid::filled(rows, cols, vs),
            vp: Grid::filled(rows, cols, vp),
            density: Grid::filled(rows, cols, density),
            interface: InterfaceCurve {
                category: super::InterfaceCategory::Linear,
                base_depth_m: depth_m,
                tilt: 0.0,
                components: [super::SinusoidComponent {
                    amplitude_m: 0.0,
                    frequency_cpm: 0.0,
                    phase_rad: 0.0,
                }; 3],
                samples: vec![depth_m; cols],
            },
            water_table_depth_m: depth_m,
            pixel_m,
            seed: 0,
        }
    }
}

/// Smooth multiplicative perturbation field in [-max, max]: white noise on a
/// coarse lattice, bilinearly interpolated to pixel resolution. Bilinear
/// interpolation of values in [-1, 1] stays in [-1, 1], so layer ordering is
/// preserved as long as the soil and rock base values are separated by more
/// than the perturbation band.
fn perturbation_field(rng: &mut SeedRng, rows: usize, cols: usize, cell: usize, max: f64) -> Grid<f64> {
    let n_r = rows.div_ceil(cell) + 1;
    let n_c = cols.div_ceil(cell) + 1;
    let lattice = Grid::from_fn(n_r, n_c, |_, _| rng.random_range(-1.0..1.0));
    Grid::from_fn(rows, cols, |r, c| {
        let fr = r as f64 / cell as f64;
        let fc = c as f64 / cell as f64;
        let r0 = fr.floor() as usize;
        let c0 = fc.floor() as usize;
        let tr = fr - r0 as f64;
        let tc = fc - c0 as f64;
        let r1 = (r0 + 1).min(n_r - 1);
        let c1 = (c0 + 1).min(n_c - 1);
        let top = lattice.get(r0, c0) * (1.0 - tc) + lattice.get(r0, c1) * tc;
        let bot = lattice.get(r1, c0) * (1.0 - tc) + lattice.get(r1, c1) * tc;
        max * (top * (1.0 - tr) + bot * tr)
    })
}

/// Generates one subsurface model from a seeded stream.
///
/// Draw order is fixed: interface, soil/rock Vs bases, Poisson ratios,
/// densities, water table, perturbation lattice. The rock Vs base is drawn
/// from the upper part of its range when the soil base is high, so the
/// perturbed rock stays stiffer than the perturbed soil everywhere.
pub fn generate_model(rng: &mut SeedRng, params: &GeneratorParams) -> SubsurfaceModel {
    let interface = sample_interface(rng, params);
    let (rows, cols) = params.grid_shape();

    let soil_vs = rng.random_range(params.soil_vs_range.0..params.soil_vs_range.1);
    let p = params.perturbation_max;
    let rock_floor = (soil_vs * (1.0 + p) / (1.0 - p)).max(params.rock_vs_range.0);
    let rock_vs = if rock_floor < params.rock_vs_range.1 {
        rng.random_range(rock_floor..params.rock_vs_range.1)
    } else {
        params.rock_vs_range.1
    };

    let nu_soil = rng.random_range(params.soil_poisson_range.0..params.soil_poisson_range.1);
    let nu_rock = rng.random_range(params.rock_poisson_range.0..params.rock_poisson_range.1);
    let nu_saturated = rng.random_range(params.saturated_poisson_range.0..params.saturated_poisson_range.1);
    let rho_soil = rng.random_range(params.soil_density_range.0..params.soil_density_range.1);
    let rho_rock = rng.random_range(params.rock_density_range.0..params.rock_density_range.1);
    let water_table_depth_m = rng.random_range(0.0..params.depth_m);

    let perturbation = perturbation_field(rng, rows, cols, params.perturbation_cell_px, p);

    let ratio_soil_dry = vp_over_vs(nu_soil);
    let ratio_soil_wet = vp_over_vs(nu_saturated);
    let ratio_rock = vp_over_vs(nu_rock);

    let mut vs = Grid::filled(rows, cols, 0.0);
    let mut vp = Grid::filled(rows, cols, 0.0);
    let mut density = Grid::filled(rows, cols, 0.0);
    for r in 0..rows {
        let depth = (r as f64 + 0.5) * params.pixel_m;
        for c in 0..cols {
            let is_soil = depth < interface.samples[c];
            let base = if is_soil { soil_vs } else { rock_vs };
            let v = base * (1.0 + perturbation.get(r, c));
            let ratio = if is_soil {
                if depth >= water_table_depth_m {
                    ratio_soil_wet
                } else {
                    ratio_soil_dry
                }
            } else {
                ratio_rock
            };
            vs.set(r, c, v);
            vp.set(r, c, v * ratio);
            density.set(r, c, if is_soil { rho_soil } else { rho_rock });
        }
    }

    SubsurfaceModel {
        vs,
        vp,
        density,
        interface,
        water_table_depth_m,
        pixel_m: params.pixel_m,
        seed: params.seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn vp_over_vs_quarter_poisson() {
        // nu = 0.25 gives exactly sqrt(3); Vs 200 -> Vp ~ 346.4.
        let r = vp_over_vs(0.25);
        assert!((r - 3f64.sqrt()).abs() < 1e-15);
        assert!((200.0 * r - 346.410).abs() < 1e-2);
    }

    #[test]
    fn same_seed_same_model() {
        let params = GeneratorParams::default();
        let a = generate_model(&mut rng_from_seed(5), &params);
        let b = generate_model(&mut rng_from_seed(5), &params);
        assert_eq!(a, b);
    }

    #[test]
    fn vp_exceeds_vs_and_density_in_band() {
        let params = GeneratorParams::default();
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            let m = generate_model(&mut rng, &params);
            for (v_s, v_p) in m.vs.data().iter().zip(m.vp.data()) {
                assert!(v_p > v_s);
                let ratio = v_p / v_s;
                assert!(ratio >= vp_over_vs(0.15) - 1e-12 && ratio <= vp_over_vs(0.49) + 1e-12);
            }
            for &rho in m.density.data() {
                assert!((1650.0..=2400.0).contains(&rho));
            }
        }
    }

    #[test]
    fn rock_stiffer_than_soil() {
        let params = GeneratorParams::default();
        let mut rng = rng_from_seed(9);
        for _ in 0..50 {
            let m = generate_model(&mut rng, &params);
            let mut soil_max = f64::NEG_INFINITY;
            let mut rock_min = f64::INFINITY;
            let mut soil_sum = (0.0, 0usize);
            let mut rock_sum = (0.0, 0usize);
            for r in 0..m.vs.rows() {
                let depth = (r as f64 + 0.5) * m.pixel_m;
                for c in 0..m.vs.cols() {
                    let v = m.vs.get(r, c);
                    if depth < m.interface.samples[c] {
                        soil_max = soil_max.max(v);
                        soil_sum = (soil_sum.0 + v, soil_sum.1 + 1);
                    } else {
                        rock_min = rock_min.min(v);
                        rock_sum = (rock_sum.0 + v, rock_sum.1 + 1);
                    }
                }
            }
            assert!(rock_min > soil_max, "rock {rock_min:.1} should exceed soil {soil_max:.1}");
            assert!(rock_sum.0 / rock_sum.1 as f64 > soil_sum.0 / soil_sum.1 as f64);
        }
    }

    #[test]
    fn soil_below_water_table_is_saturated() {
        // Saturated soil has nu >= 0.47, so Vp/Vs >= sqrt(2(1-0.47)/(1-0.94)) ~ 4.20;
        // dry soil has nu <= 0.35 with a far smaller ratio. A water table at the
        // surface therefore saturates every soil pixel.
        let params = GeneratorParams::default();
        let wet_floor = vp_over_vs(0.47);
        let dry_ceil = vp_over_vs(0.35);
        assert!(wet_floor >= 4.20);
        let mut rng = rng_from_seed(21);
        let mut saw_saturated = false;
        for _ in 0..40 {
            let m = generate_model(&mut rng, &params);
            for r in 0..m.vs.rows() {
                let depth = (r as f64 + 0.5) * m.pixel_m;
                for c in 0..m.vs.cols() {
                    if depth < m.interface.samples[c] {
                        let ratio = m.vp.get(r, c) / m.vs.get(r, c);
                        if depth >= m.water_table_depth_m {
                            assert!(ratio >= wet_floor - 1e-12);
                            saw_saturated = true;
                        } else {
                            assert!(ratio <= dry_ceil + 1e-12);
                        }
                    }
                }
            }
        }
        assert!(saw_saturated, "no model drew a water table above the interface");
    }

    #[test]
    fn perturbation_stays_bounded() {
        let mut rng = rng_from_seed(17);
        let f = perturbation_field(&mut rng, 24, 104, 8, 0.05);
        for &e in f.data() {
            assert!(e.abs() <= 0.05);
        }
    }

    #[test]
    fn thousand_models_keep_interface_in_band_and_category_mix() {
        // Brute-force scan: every column's interface depth stays within
        // [5 - A_max, 12 + A_max] where A_max is the largest total sinusoid
        // amplitude over the categories, and the category tags track the
        // configured weights within +/-4%.
        let params = GeneratorParams::default();
        let a_max = params.max_total_amplitude();
        let (lo, hi) = (
            params.interface_depth_range.0 - a_max,
            params.interface_depth_range.1 + a_max,
        );
        let mut rng = rng_from_seed(1000);
        let mut counts = [0usize; 3];
        let n = 1000;
        for _ in 0..n {
            let m = generate_model(&mut rng, &params);
            counts[m.interface.category.tag() as usize] += 1;
            for &d in &m.interface.samples {
                assert!(d >= lo && d <= hi, "interface depth {d} outside [{lo}, {hi}]");
            }
        }
        for (i, &want) in [0.10, 0.60, 0.30].iter().enumerate() {
            let share = counts[i] as f64 / n as f64;
            assert!((share - want).abs() < 0.04, "category {i}: {share:.3} vs {want}");
        }
    }
}
