use serde::{Deserialize, Serialize};

use crate::nn::{Real, Tensor, OUTPUT_COLS, OUTPUT_ROWS};
use crate::{Error, Result};

/// Scalar aggregation of the 24x48 network output, needed because both
/// explainers score whole forward passes. `Mean` averages every output
/// pixel; `Region` averages a rectangular output window (for probing, say,
/// the rock layer only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputScore {
    Mean,
    Region {
        row0: usize,
        col0: usize,
        rows: usize,
        cols: usize,
    },
}

impl Default for OutputScore {
    fn default() -> Self {
        OutputScore::Mean
    }
}

impl OutputScore {
    pub fn validate(&self) -> Result<()> {
        if let OutputScore::Region { row0, col0, rows, cols } = *self {
            if rows == 0 || cols == 0 || row0 + rows > OUTPUT_ROWS || col0 + cols > OUTPUT_COLS {
                return Err(Error::InvalidArgument(format!(
                    "score region {rows}x{cols}+{row0}+{col0} outside the {OUTPUT_ROWS}x{OUTPUT_COLS} output"
                )));
            }
        }
        Ok(())
    }

    /// Applies the aggregation to a network output tensor (any layout with
    /// 24*48 elements in row-major order).
    pub fn apply<T: Real>(&self, out: &Tensor<T>) -> f64 {
        match *self {
            OutputScore::Mean => out.data.iter().map(|v| v.to_f64()).sum::<f64>() / out.len() as f64,
            OutputScore::Region { row0, col0, rows, cols } => {
                let mut sum = 0.0;
                for r in row0..row0 + rows {
                    for c in col0..col0 + cols {
                        sum += out.data[r * OUTPUT_COLS + c].to_f64();
                    }
                }
                sum / (rows * cols) as f64
            }
        }
    }

    /// dS/d(output): uniform weight over the aggregated pixels.
    pub fn gradient<T: Real>(&self, shape: (usize, usize, usize)) -> Tensor<T> {
        let mut g = Tensor::from_shape(shape);
        match *self {
            OutputScore::Mean => {
                let w = T::from_f64(1.0 / g.len() as f64);
                g.data.iter_mut().for_each(|v| *v = w);
            }
            OutputScore::Region { row0, col0, rows, cols } => {
                let w = T::from_f64(1.0 / (rows * cols) as f64);
                for r in row0..row0 + rows {
                    for c in col0..col0 + cols {
                        g.data[r * OUTPUT_COLS + c] = w;
                    }
                }
            }
        }
        g
    }
}
