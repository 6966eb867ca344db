use crate::grid::Grid;

/// Bilinear resampling with half-pixel-centre alignment.
pub fn bilinear_resize(src: &Grid<f64>, rows: usize, cols: usize) -> Grid<f64> {
    let sr = src.rows() as f64 / rows as f64;
    let sc = src.cols() as f64 / cols as f64;
    Grid::from_fn(rows, cols, |r, c| {
        let fy = ((r as f64 + 0.5) * sr - 0.5).clamp(0.0, src.rows() as f64 - 1.0);
        let fx = ((c as f64 + 0.5) * sc - 0.5).clamp(0.0, src.cols() as f64 - 1.0);
        let y0 = fy.floor() as usize;
        let x0 = fx.floor() as usize;
        let y1 = (y0 + 1).min(src.rows() - 1);
        let x1 = (x0 + 1).min(src.cols() - 1);
        let ty = fy - y0 as f64;
        let tx = fx - x0 as f64;
        let top = src.get(y0, x0) * (1.0 - tx) + src.get(y0, x1) * tx;
        let bot = src.get(y1, x0) * (1.0 - tx) + src.get(y1, x1) * tx;
        top * (1.0 - ty) + bot * ty
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_size_is_identity() {
        let g = Grid::from_fn(5, 7, |r, c| (r * 7 + c) as f64);
        assert_eq!(bilinear_resize(&g, 5, 7), g);
    }

    #[test]
    fn constant_stays_constant() {
        let g = Grid::filled(4, 3, 2.5);
        let up = bilinear_resize(&g, 400, 76);
        assert!(up.data().iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn values_stay_within_source_range() {
        let g = Grid::from_fn(13, 25, |r, c| ((r * 31 + c * 17) % 11) as f64);
        let up = bilinear_resize(&g, 400, 76);
        let (lo, hi) = (g.min(), g.max());
        for &v in up.data() {
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}
