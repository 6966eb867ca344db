use serde::{Deserialize, Serialize};

use super::SubsurfaceModel;
use crate::grid::Grid;
use crate::{Error, Result};

pub const LABEL_ROWS: usize = 24;
pub const LABEL_COLS: usize = 48;

/// Normalized Vs target image: the central 48 m of the model down to 24 m,
/// at 1 m resolution, divided by `norm_constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsLabel {
    pub values: Grid<f64>,
    /// Normalization constant in m/s, at least the maximum Vs of the training set.
    pub norm_constant: f64,
}

impl VsLabel {
    pub fn denormalize(&self) -> Grid<f64> {
        let c = self.norm_constant;
        self.values.map(|v| v * c)
    }
}

/// Rounds up to the next power of two. Dividing and re-multiplying by a
/// power of two is exact in IEEE arithmetic, which keeps
/// `denormalize(trim_label(m))` bit-identical to the source Vs window.
pub fn pow2_norm_constant(max_vs: f64) -> f64 {
    assert!(max_vs > 0.0 && max_vs.is_finite());
    let mut c = 1.0f64;
    while c < max_vs {
        c *= 2.0;
    }
    c
}

/// Extracts and normalizes the central 24x48 window of the Vs grid.
pub fn trim_label(model: &SubsurfaceModel, norm_constant: f64) -> Result<VsLabel> {
    if norm_constant <= 0.0 || !norm_constant.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "norm_constant must be positive and finite, got {norm_constant}"
        )));
    }
    let px = model.pixel_m;
    let cols_needed = (LABEL_COLS as f64 / px).round() as usize;
    let rows_needed = (LABEL_ROWS as f64 / px).round() as usize;
    if model.vs.cols() < cols_needed || model.vs.rows() < rows_needed {
        return Err(Error::InvalidArgument(format!(
            "model ({} rows x {} cols) too small for a {LABEL_ROWS}x{LABEL_COLS} m label window",
            model.vs.rows(),
            model.vs.cols()
        )));
    }
    if (px - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "labels are defined on a 1 m pixel grid, model pixel is {px} m"
        )));
    }
    let col0 = (model.vs.cols() - LABEL_COLS) / 2;
    let window = model.vs.window(0, LABEL_ROWS, col0, LABEL_COLS);
    Ok(VsLabel {
        values: window.map(|v| v / norm_constant),
        norm_constant,
    })
}

/// First column of the trimmed window for a model of `cols` 1 m pixels.
pub fn label_window_start(cols: usize) -> usize {
    (cols - LABEL_COLS) / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{generate_model, GeneratorParams};
    use crate::rng::rng_from_seed;

    #[test]
    fn window_is_centered_over_receiver_span() {
        // 104 m wide model: 48 receivers at 1 m spacing span 47 m, centred
        // at x in [28.5, 75.5]; those are exactly the centres of pixel
        // columns 28..=75, the extracted window.
        assert_eq!(label_window_start(104), 28);
        let first_receiver_x: f64 = (104.0 - 47.0) / 2.0;
        assert_eq!(first_receiver_x, 28.5);
        let col_of_first = first_receiver_x.floor() as usize;
        assert_eq!(col_of_first, 28);
        let col_of_last = (first_receiver_x + 47.0).floor() as usize;
        assert_eq!(col_of_last, 75);
    }

    #[test]
    fn label_shape_and_roundtrip() {
        let params = GeneratorParams::default();
        let mut rng = rng_from_seed(2);
        for _ in 0..20 {
            let m = generate_model(&mut rng, &params);
            let c = pow2_norm_constant(m.vs.max());
            let label = trim_label(&m, c).unwrap();
            assert_eq!(label.values.rows(), 24);
            assert_eq!(label.values.cols(), 48);
            for &v in label.values.data() {
                assert!((0.0..=1.0).contains(&v));
            }
            // Bit-for-bit round trip through the power-of-two constant.
            let recovered = label.denormalize();
            let col0 = label_window_start(m.vs.cols());
            for r in 0..24 {
                for cidx in 0..48 {
                    assert_eq!(recovered.get(r, cidx).to_bits(), m.vs.get(r, col0 + cidx).to_bits());
                }
            }
        }
    }

    #[test]
    fn uniform_model_at_norm_constant_gives_ones() {
        let m = SubsurfaceModel::homogeneous(250.0, 0.25, 1800.0, 104.0, 24.0, 1.0);
        let label = trim_label(&m, 250.0).unwrap();
        for &v in label.values.data() {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn non_positive_norm_constant_rejected() {
        let m = SubsurfaceModel::homogeneous(250.0, 0.25, 1800.0, 104.0, 24.0, 1.0);
        assert!(matches!(trim_label(&m, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(trim_label(&m, -5.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn pow2_constant_bounds() {
        assert_eq!(pow2_norm_constant(1000.0), 1024.0);
        assert_eq!(pow2_norm_constant(1024.0), 1024.0);
        assert_eq!(pow2_norm_constant(1025.0), 2048.0);
    }
}
