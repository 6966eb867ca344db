//! Dense row-major 2D grid used for subsurface property fields, labels,
//! dispersion power, and heatmaps.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Grid {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "grid data length mismatch");
        Grid { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Grid { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: T) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Extracts the sub-grid `rows0..rows0+nrows` x `cols0..cols0+ncols`.
    pub fn window(&self, rows0: usize, nrows: usize, cols0: usize, ncols: usize) -> Grid<T> {
        assert!(rows0 + nrows <= self.rows && cols0 + ncols <= self.cols);
        Grid::from_fn(nrows, ncols, |r, c| self.get(rows0 + r, cols0 + c))
    }
}

impl Grid<f64> {
    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_extracts_expected_cells() {
        let g = Grid::from_fn(4, 5, |r, c| (r * 10 + c) as f64);
        let w = g.window(1, 2, 2, 3);
        assert_eq!(w.rows(), 2);
        assert_eq!(w.cols(), 3);
        assert_eq!(w.get(0, 0), 12.0);
        assert_eq!(w.get(1, 2), 24.0);
    }

    #[test]
    fn row_slice_matches_get() {
        let g = Grid::from_fn(3, 4, |r, c| (r + c) as f32);
        assert_eq!(g.row(2), &[2.0, 3.0, 4.0, 5.0]);
    }
}
