use super::Real;
use crate::grid::Grid;

/// Dense (height, width, channels) tensor, row-major with channels fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        Tensor {
            h,
            w,
            c,
            data: vec![T::ZERO; h * w * c],
        }
    }

    pub fn from_shape(shape: (usize, usize, usize)) -> Self {
        Self::zeros(shape.0, shape.1, shape.2)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.c)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, ch: usize) -> T {
        debug_assert!(y < self.h && x < self.w && ch < self.c);
        self.data[(y * self.w + x) * self.c + ch]
    }

    #[inline]
    pub fn at_mut(&mut self, y: usize, x: usize, ch: usize) -> &mut T {
        debug_assert!(y < self.h && x < self.w && ch < self.c);
        &mut self.data[(y * self.w + x) * self.c + ch]
    }

    /// Single-channel plane as a 2D grid of f64.
    pub fn channel_to_grid(&self, ch: usize) -> Grid<f64> {
        Grid::from_fn(self.h, self.w, |y, x| self.at(y, x, ch).to_f64())
    }

    pub fn from_grid(g: &Grid<f64>) -> Self {
        Tensor {
            h: g.rows(),
            w: g.cols(),
            c: 1,
            data: g.data().iter().map(|&v| T::from_f64(v)).collect(),
        }
    }

    /// Reinterprets a flat tensor as (h, w, 1); the element count must match.
    pub fn reshape(&self, h: usize, w: usize) -> Tensor<T> {
        assert_eq!(self.len(), h * w, "reshape size mismatch");
        Tensor {
            h,
            w,
            c: 1,
            data: self.data.clone(),
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            h: self.h,
            w: self.w,
            c: self.c,
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor {
            h: self.h,
            w: self.w,
            c: self.c,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
