//! Scalar fields sampled on a periodic n x n grid.

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// A scalar field sampled at x = (i/n, j/n), indexed periodically.
#[derive(Debug, Clone)]
pub struct GridFunction {
    n: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be even and at least 8, got {n}"
            )));
        }
        Ok(GridFunction {
            n,
            values: vec![0.0; n * n],
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(Vec2) -> f64) -> Result<Self> {
        let mut g = GridFunction::zeros(n)?;
        let h = 1.0 / n as f64;
        for i in 0..n {
            for j in 0..n {
                g.values[i * n + j] = f(Vec2::new(i as f64 * h, j as f64 * h));
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Periodic access: indices wrap modulo n.
    #[inline]
    pub fn get(&self, i: isize, j: isize) -> f64 {
        let n = self.n as isize;
        let ii = i.rem_euclid(n) as usize;
        let jj = j.rem_euclid(n) as usize;
        self.values[ii * self.n + jj]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        let h = self.spacing();
        Vec2::new(i as f64 * h, j as f64 * h)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// max - min over the grid.
    pub fn oscillation(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_resolution() {
        assert!(GridFunction::zeros(6).is_err());
        assert!(GridFunction::zeros(9).is_err());
        assert!(GridFunction::zeros(8).is_ok());
    }

    #[test]
    fn periodic_indexing_wraps() {
        let g = GridFunction::from_fn(8, |x| x.x + 10.0 * x.y).unwrap();
        assert_eq!(g.get(3, 5), g.get(3 + 8, 5));
        assert_eq!(g.get(0, 2), g.get(-8, 2));
        assert_eq!(g.get(-1, -1), g.get(7, 7));
    }

    #[test]
    fn mean_and_oscillation() {
        let g = GridFunction::from_fn(16, |x| (2.0 * std::f64::consts::PI * x.x).sin()).unwrap();
        assert!(g.mean().abs() < 1e-15);
        assert!((g.oscillation() - 2.0).abs() < 1e-2);
    }
}
