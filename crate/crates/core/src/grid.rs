use alloc::vec::Vec;

use crate::{Error, Result};

/// Uniform mesh `x_j = x_min + j Δx`, `j = 0..n_points`.
///
/// Integrals use the weight `Δx` on every point. That is the trapezoid rule
/// for fields that vanish at the edges and the exact rule for the
/// band-limited fields of the Fourier grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub spacing: f64,
}

pub const MIN_POINTS: usize = 8;

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Grid> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::invalid("grid needs finite x_max > x_min"));
        }
        if n_points < MIN_POINTS {
            return Err(Error::invalid("grid needs at least 8 points"));
        }
        let spacing = (x_max - x_min) / (n_points - 1) as f64;
        Ok(Grid { x_min, x_max, n_points, spacing })
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        if j + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + j as f64 * self.spacing
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    #[inline]
    pub fn weight(&self) -> f64 {
        self.spacing
    }

    /// Length of the periodic cell `N Δx` seen by the Fourier grid.
    pub fn period(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min - 1e-12 * self.spacing && x <= self.x_max + 1e-12 * self.spacing
    }

    /// Indices of the points inside `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> Result<core::ops::Range<usize>> {
        if !(lo < hi) || !self.contains(lo) || !self.contains(hi) {
            return Err(Error::Window(lo, hi));
        }
        let tol = 1e-9 * self.spacing;
        let first = (0..self.n_points).find(|&j| self.x(j) >= lo - tol).unwrap_or(self.n_points);
        let end = (0..self.n_points).rev().find(|&j| self.x(j) <= hi + tol).map_or(0, |j| j + 1);
        if first >= end {
            return Err(Error::Window(lo, hi));
        }
        Ok(first..end)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n_points == other.n_points
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.spacing
            && (self.x_max - other.x_max).abs() <= 1e-12 * self.spacing
    }

    /// Integral of sampled values with the grid weight.
    pub fn integrate<T>(&self, values: &[T]) -> T
    where
        T: Copy + core::iter::Sum<T> + core::ops::Mul<f64, Output = T>,
    {
        values.iter().copied().sum::<T>() * self.spacing
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings() {
        assert!((Grid::new(-20.0, 20.0, 801).unwrap().spacing - 0.05).abs() < 1e-15);
        assert!((Grid::new(-12.0, 12.0, 512).unwrap().spacing - 24.0 / 511.0).abs() < 1e-15);
        let g = Grid::new(-12.0, 12.0, 512).unwrap();
        assert_eq!(g.x(511), 12.0);
        assert_eq!(g.points().len(), 512);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(Grid::new(0.0, 1.0, 2).is_err());
        assert!(Grid::new(1.0, 0.0, 100).is_err());
        assert!(Grid::new(0.0, f64::NAN, 100).is_err());
    }

    #[test]
    fn ranges() {
        let g = Grid::new(-1.0, 1.0, 21).unwrap();
        assert_eq!(g.index_range(-0.5, 0.5).unwrap(), 5..16);
        assert!(g.index_range(-2.0, 0.0).is_err());
    }
}
