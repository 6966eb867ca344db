//! Predictive-accuracy metrics on denormalized Vs images: pixelwise MAPE and
//! the mean structural similarity index with an 11x11 Gaussian window.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub window: usize,
    pub sigma: f64,
    /// Dynamic range L in m/s: max - min Vs over the true testing profiles.
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            k1: 0.01,
            k2: 0.03,
            window: 11,
            sigma: 1.5,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        if self.k1 <= 0.0 || self.k2 <= 0.0 || self.sigma <= 0.0 || self.dynamic_range <= 0.0 {
            return Err(Error::InvalidConfig("SSIM parameters must be positive".into()));
        }
        if self.window == 0 || self.window % 2 == 0 {
            return Err(Error::InvalidConfig("SSIM window must be odd".into()));
        }
        Ok(())
    }

    /// L = max - min over the given truth images.
    pub fn with_dynamic_range_from(mut self, truths: &[Grid<f64>]) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in truths {
            lo = lo.min(t.min());
            hi = hi.max(t.max());
        }
        self.dynamic_range = (hi - lo).max(f64::MIN_POSITIVE);
        self
    }
}

/// Normalized 2D Gaussian window.
fn gaussian_window(size: usize, sigma: f64) -> Grid<f64> {
    let half = (size / 2) as f64;
    let mut w = Grid::from_fn(size, size, |r, c| {
        let dr = r as f64 - half;
        let dc = c as f64 - half;
        (-(dr * dr + dc * dc) / (2.0 * sigma * sigma)).exp()
    });
    let sum: f64 = w.data().iter().sum();
    for v in w.data_mut() {
        *v /= sum;
    }
    w
}

/// Mean absolute percentage error: 100 * mean(|pred - truth| / truth).
/// Truth must be strictly positive.
pub fn mape(pred: &Grid<f64>, truth: &Grid<f64>) -> Result<f64> {
    if pred.rows() != truth.rows() || pred.cols() != truth.cols() {
        return Err(Error::shape(
            format!("{}x{}", truth.rows(), truth.cols()),
            format!("{}x{}", pred.rows(), pred.cols()),
        ));
    }
    let mut terms = Vec::with_capacity(pred.data().len());
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        if t <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "MAPE needs strictly positive truth pixels, found {t}"
            )));
        }
        terms.push((p - t).abs() / t);
    }
    // Summing in sorted order makes the result independent of pixel order,
    // so a shared permutation of both images leaves MAPE bit-identical.
    terms.sort_by(f64::total_cmp);
    Ok(100.0 * terms.iter().sum::<f64>() / terms.len() as f64)
}

/// SSIM map over all positions where the window fits (valid region), and its
/// mean. Window statistics are Gaussian-weighted.
pub fn mssim(pred: &Grid<f64>, truth: &Grid<f64>, params: &SsimParams) -> Result<(f64, Grid<f64>)> {
    params.validate()?;
    if pred.rows() != truth.rows() || pred.cols() != truth.cols() {
        return Err(Error::shape(
            format!("{}x{}", truth.rows(), truth.cols()),
            format!("{}x{}", pred.rows(), pred.cols()),
        ));
    }
    let n = params.window;
    if pred.rows() < n || pred.cols() < n {
        return Err(Error::InvalidArgument(format!(
            "image {}x{} smaller than the {n}x{n} SSIM window",
            pred.rows(),
            pred.cols()
        )));
    }
    let w = gaussian_window(n, params.sigma);
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);

    let out_rows = pred.rows() - n + 1;
    let out_cols = pred.cols() - n + 1;
    let map = Grid::from_fn(out_rows, out_cols, |r0, c0| {
        let mut mu_x = 0.0;
        let mut mu_y = 0.0;
        let mut xx = 0.0;
        let mut yy = 0.0;
        let mut xy = 0.0;
        for dr in 0..n {
            for dc in 0..n {
                let wv = w.get(dr, dc);
                let x = pred.get(r0 + dr, c0 + dc);
                let y = truth.get(r0 + dr, c0 + dc);
                mu_x += wv * x;
                mu_y += wv * y;
                xx += wv * x * x;
                yy += wv * y * y;
                xy += wv * x * y;
            }
        }
        let var_x = (xx - mu_x * mu_x).max(0.0);
        let var_y = (yy - mu_y * mu_y).max(0.0);
        let cov = xy - mu_x * mu_y;
        ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
            / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
    });
    let mean = map.data().iter().sum::<f64>() / map.data().len() as f64;
    Ok((mean, map))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub id: String,
    pub mape_percent: f64,
    pub mssim: f64,
}

/// Per-image metrics plus dataset means.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn push(&mut self, id: impl Into<String>, mape_percent: f64, mssim: f64) {
        self.rows.push(MetricRow {
            id: id.into(),
            mape_percent,
            mssim,
        });
    }

    pub fn mean_mape(&self) -> f64 {
        self.rows.iter().map(|r| r.mape_percent).sum::<f64>() / self.rows.len().max(1) as f64
    }

    pub fn mean_mssim(&self) -> f64 {
        self.rows.iter().map(|r| r.mssim).sum::<f64>() / self.rows.len().max(1) as f64
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "image_id,mape_percent,mssim")?;
        for r in &self.rows {
            writeln!(f, "{},{},{}", r.id, r.mape_percent, r.mssim)?;
        }
        writeln!(f, "mean,{},{}", self.mean_mape(), self.mean_mssim())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(rows: usize, cols: usize, base: f64) -> Grid<f64> {
        Grid::from_fn(rows, cols, |r, c| base + (r * cols + c) as f64)
    }

    #[test]
    fn mape_identity_is_zero() {
        let t = ramp(24, 48, 100.0);
        assert_eq!(mape(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn mape_uniform_scale() {
        let t = ramp(24, 48, 100.0);
        let p = t.map(|v| 1.1 * v);
        let m = mape(&p, &t).unwrap();
        assert!((m - 10.0).abs() < 1e-9, "{m}");
        // mape(alpha t, t) = 100 |alpha - 1| on the low side too.
        let p = t.map(|v| 0.85 * v);
        assert!((mape(&p, &t).unwrap() - 15.0).abs() < 1e-9);
    }

    #[test]
    fn mape_direct_two_pixel_example() {
        let t = Grid::from_vec(1, 2, vec![100.0, 200.0]);
        let p = Grid::from_vec(1, 2, vec![110.0, 180.0]);
        assert!((mape(&p, &t).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn mape_rejects_non_positive_truth() {
        let t = Grid::from_vec(1, 2, vec![100.0, 0.0]);
        let p = Grid::from_vec(1, 2, vec![1.0, 1.0]);
        assert!(matches!(mape(&p, &t), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn mape_invariant_under_shared_permutation() {
        let t = ramp(6, 8, 50.0);
        let p = t.map(|v| v * 1.07 + 3.0);
        let base = mape(&p, &t).unwrap();
        // Reverse both images the same way.
        let rev = |g: &Grid<f64>| {
            let mut d: Vec<f64> = g.data().to_vec();
            d.reverse();
            Grid::from_vec(g.rows(), g.cols(), d)
        };
        let permuted = mape(&rev(&p), &rev(&t)).unwrap();
        assert_eq!(base, permuted);
    }

    #[test]
    fn mssim_identity_is_one() {
        let t = ramp(24, 48, 200.0);
        let params = SsimParams {
            dynamic_range: 500.0,
            ..Default::default()
        };
        let (m, map) = mssim(&t, &t, &params).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        assert_eq!(map.rows(), 24 - 10);
        assert_eq!(map.cols(), 48 - 10);
    }

    #[test]
    fn mssim_symmetry_and_bounds() {
        let a = ramp(24, 48, 100.0);
        let b = a.map(|v| 650.0 - 0.8 * v);
        let params = SsimParams {
            dynamic_range: 600.0,
            ..Default::default()
        };
        let (m_ab, map) = mssim(&a, &b, &params).unwrap();
        let (m_ba, _) = mssim(&b, &a, &params).unwrap();
        assert!((m_ab - m_ba).abs() < 1e-12);
        for &v in map.data() {
            assert!(v.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn constant_images_use_luminance_closed_form() {
        let a = Grid::filled(24, 48, 300.0);
        let b = Grid::filled(24, 48, 360.0);
        let params = SsimParams {
            dynamic_range: 500.0,
            ..Default::default()
        };
        let c1 = (0.01f64 * 500.0).powi(2);
        let expected = (2.0 * 300.0 * 360.0 + c1) / (300.0f64.powi(2) + 360.0f64.powi(2) + c1);
        let (m, _) = mssim(&a, &b, &params).unwrap();
        assert!((m - expected).abs() < 1e-12, "{m} vs {expected}");
    }

    #[test]
    fn permutation_changes_mssim_but_not_mape() {
        let t = ramp(24, 48, 100.0);
        let p = t.map(|v| v + 10.0);
        let params = SsimParams {
            dynamic_range: 1200.0,
            ..Default::default()
        };
        let m0 = mssim(&p, &t, &params).unwrap().0;
        // Permute only the prediction: structure changes.
        let mut d: Vec<f64> = p.data().to_vec();
        d.reverse();
        let p_rev = Grid::from_vec(24, 48, d);
        let m1 = mssim(&p_rev, &t, &params).unwrap().0;
        assert!((m0 - m1).abs() > 1e-6);
        let base_mape = mape(&p, &t).unwrap();
        // Same permutation applied to both leaves MAPE exactly unchanged.
        let mut dt: Vec<f64> = t.data().to_vec();
        dt.reverse();
        let t_rev = Grid::from_vec(24, 48, dt);
        assert_eq!(mape(&p_rev, &t_rev).unwrap(), base_mape);
    }

    #[test]
    fn window_larger_than_image_rejected() {
        let a = Grid::filled(8, 8, 1.0);
        let params = SsimParams {
            dynamic_range: 1.0,
            ..Default::default()
        };
        assert!(matches!(mssim(&a, &a, &params), Err(Error::InvalidArgument(_))));
    }
}
