//! Piecewise-constant intensity fields on the window.

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::geometry::{Point, Window};
use crate::raster::{format_matrix, parse_matrix};
use crate::rng::{rng_for, stream};

/// `M x M` non-negative intensities (points per unit area), row 0 at the
/// lowest `y`, constant over each cell and periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityRaster {
    m: usize,
    window: Window,
    grid: Vec<f64>,
}

impl IntensityRaster {
    pub fn new(m: usize, window: Window, grid: Vec<f64>) -> Result<Self> {
        if m == 0 || grid.len() != m * m {
            return Err(Error::SizeMismatch { expected: m * m, got: grid.len() });
        }
        if let Some(i) = grid.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(format!("intensity cell {i} is negative or not finite")));
        }
        if !grid.iter().any(|&v| v > 0.0) {
            return Err(Error::invalid("intensity raster is zero everywhere"));
        }
        Ok(IntensityRaster { m, window, grid })
    }

    pub fn constant(rate: f64, window: Window) -> Result<Self> {
        Self::new(1, window, vec![rate])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn max(&self) -> f64 {
        self.grid.iter().copied().fold(0.0, f64::max)
    }

    fn cell_area(&self) -> f64 {
        let h = self.window.side() / self.m as f64;
        h * h
    }

    /// Expected number of points, `int lambda`.
    pub fn integral(&self) -> f64 {
        self.grid.iter().sum::<f64>() * self.cell_area()
    }

    pub fn cell_of(&self, p: Point) -> (usize, usize) {
        let h = self.window.side() / self.m as f64;
        let ix = (((p[0] + self.window.s()) / h) as usize).min(self.m - 1);
        let iy = (((p[1] + self.window.s()) / h) as usize).min(self.m - 1);
        (ix, iy)
    }

    pub fn value_at(&self, p: Point) -> f64 {
        let (ix, iy) = self.cell_of(p);
        self.grid[iy * self.m + ix]
    }

    /// Same field multiplied so that its integral equals `count`.
    pub fn scaled_to(&self, count: f64) -> Result<Self> {
        let f = count / self.integral();
        Self::new(self.m, self.window, self.grid.iter().map(|v| v * f).collect())
    }

    /// Smooth random field: periodic Gaussian bumps at three dyadic widths
    /// (`side/10`, `side/20`, `side/40`; 4, 16 and 64 bumps with exponential
    /// amplitudes) on a small floor, scaled so the expected count is `mean_count`.
    pub fn synthetic(m: usize, window: Window, mean_count: f64, seed: u64) -> Result<Self> {
        if !(mean_count > 0.0) {
            return Err(Error::invalid("mean count of a synthetic intensity must be positive"));
        }
        let mut rng = rng_for(seed, stream::INTENSITY);
        let side = window.side();
        let mut bumps = Vec::new();
        for (level, count) in [(0u32, 4usize), (1, 16), (2, 64)] {
            let width = side / 10.0 / f64::from(1u32 << level);
            for _ in 0..count {
                let c = [rng.random_range(-window.s()..window.s()), rng.random_range(-window.s()..window.s())];
                let a: f64 = Exp1.sample(&mut rng);
                bumps.push((c, width, a));
            }
        }
        let h = side / m as f64;
        let mut grid = vec![0.0; m * m];
        for iy in 0..m {
            for ix in 0..m {
                let p = [-window.s() + (ix as f64 + 0.5) * h, -window.s() + (iy as f64 + 0.5) * h];
                let v: f64 = bumps
                    .iter()
                    .map(|&(c, w, a)| a * (-window.dist2(p, c) / (2.0 * w * w)).exp())
                    .sum();
                grid[iy * m + ix] = 0.02 + v;
            }
        }
        Self::new(m, window, grid)?.scaled_to(mean_count)
    }

    pub fn to_text(&self) -> String {
        format_matrix(self.m, self.window.s(), &self.grid)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (m, s, grid) = parse_matrix(&text, path)?;
        Self::new(m, Window::new(s)?, grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        let w = Window::unit();
        assert!(IntensityRaster::new(2, w, vec![1.0, -1.0, 0.0, 0.0]).is_err());
        assert!(IntensityRaster::new(2, w, vec![0.0; 4]).is_err());
        assert!(IntensityRaster::new(2, w, vec![1.0; 3]).is_err());
    }

    #[test]
    fn synthetic_is_normalized_and_round_trips() {
        let w = Window::unit();
        let r = IntensityRaster::synthetic(32, w, 1000.0, 3).unwrap();
        assert!((r.integral() - 1000.0).abs() < 1e-9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.txt");
        r.write(&path).unwrap();
        assert_eq!(IntensityRaster::read(&path).unwrap(), r);
    }

    #[test]
    fn cell_lookup() {
        let w = Window::unit();
        let r = IntensityRaster::new(2, w, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.value_at([-0.4, -0.4]), 1.0);
        assert_eq!(r.value_at([0.1, -0.4]), 2.0);
        assert_eq!(r.value_at([-0.1, 0.3]), 3.0);
        assert_eq!(r.value_at([0.49, 0.49]), 4.0);
    }
}
